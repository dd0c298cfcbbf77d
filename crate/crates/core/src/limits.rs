use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard caps shared by every operation that can blow up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Maximum number of outcomes of any materialised joint distribution.
    pub max_outcomes: u64,
    /// Maximum number of simplex pivots per linear program.
    pub max_pivots: u64,
    /// Maximum number of type classes enumerated for i.i.d. computations.
    pub max_type_classes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_outcomes: 10_000_000,
            max_pivots: 1_000_000,
            max_type_classes: 5_000_000,
        }
    }
}

impl Limits {
    /// Checks `d^n` against the outcome cap and returns it.
    pub fn outcome_count(&self, d: usize, n: usize) -> Result<usize> {
        let mut total: u128 = 1;
        for _ in 0..n {
            total = total.saturating_mul(d as u128);
            if total > self.max_outcomes as u128 {
                return Err(Error::SizeLimit {
                    requested: total,
                    limit: self.max_outcomes,
                });
            }
        }
        Ok(total as usize)
    }

    pub(crate) fn check_outcomes(&self, count: u128) -> Result<()> {
        if count > self.max_outcomes as u128 {
            Err(Error::SizeLimit {
                requested: count,
                limit: self.max_outcomes,
            })
        } else {
            Ok(())
        }
    }
}
