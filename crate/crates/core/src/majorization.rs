//! Majorization predicate and constructive T-transform witnesses.
//!
//! `p` majorizes `q` when every descending-sorted prefix sum of `p` is at
//! least the matching prefix sum of `q` (totals equal). Equivalently `q` is
//! the image of `p` under a doubly stochastic map; the witness records such a
//! map as a chain of T-transforms, each mixing exactly two coordinates.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::{argsort_desc, is_permutation_equivalent, sorted_desc};
use crate::entropy;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

fn padded_pair(p: &[Rational], q: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let len = p.len().max(q.len());
    let mut a = p.to_vec();
    let mut b = q.to_vec();
    a.resize(len, Rational::zero());
    b.resize(len, Rational::zero());
    (a, b)
}

/// `p >= q` in the majorization order. Shorter inputs are zero-padded.
pub fn majorizes(p: &[Rational], q: &[Rational]) -> bool {
    let (p, q) = padded_pair(p, q);
    let p = sorted_desc(&p);
    let q = sorted_desc(&q);
    let total_p: Rational = p.iter().sum();
    let total_q: Rational = q.iter().sum();
    if total_p != total_q {
        return false;
    }
    let mut sp = Rational::zero();
    let mut sq = Rational::zero();
    for (a, b) in p.iter().zip(&q) {
        sp += a;
        sq += b;
        if sp < sq {
            return false;
        }
    }
    true
}

/// One T-transform: coordinates `(i, j)` become
/// `((1-t) x_i + t x_j, t x_i + (1-t) x_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TStep {
    pub i: usize,
    pub j: usize,
    #[serde(with = "rational::serde_rational")]
    pub t: Rational,
}

/// Certificate that `target` is majorized by `source`.
///
/// Replaying `steps` on the descending-sorted `source` gives the
/// descending-sorted `target`; `final_permutation[k]` is the position in
/// `target` of the `k`-th largest entry. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorizationWitness {
    #[serde(with = "rational::serde_rational_vec")]
    pub source: Vec<Rational>,
    #[serde(with = "rational::serde_rational_vec")]
    pub target: Vec<Rational>,
    pub steps: Vec<TStep>,
    pub final_permutation: Vec<usize>,
}

impl MajorizationWitness {
    /// Recomputes the target from the source by exact replay.
    pub fn replay(&self) -> Result<Vec<Rational>> {
        let len = self.source.len();
        if self.target.len() != len || self.final_permutation.len() != len {
            return Err(Error::arg("witness vectors have inconsistent lengths"));
        }
        let mut seen = vec![false; len];
        for &k in &self.final_permutation {
            if k >= len || std::mem::replace(&mut seen[k], true) {
                return Err(Error::arg("final_permutation is not a permutation"));
            }
        }
        let sorted = sorted_desc(&self.source);
        let mixed = apply_doubly_stochastic_mix(self, &sorted)?;
        let mut out = vec![Rational::zero(); len];
        for (k, v) in mixed.into_iter().enumerate() {
            out[self.final_permutation[k]] = v;
        }
        Ok(out)
    }

    /// True when the chain is short enough and replays to the target exactly.
    pub fn verify(&self) -> bool {
        let len = self.source.len();
        self.steps.len() < len.max(1)
            && self
                .steps
                .iter()
                .all(|s| s.i < len && s.j < len && !s.t.is_negative_or_gt_one())
            && self.replay().map(|r| r == self.target).unwrap_or(false)
    }
}

trait UnitInterval {
    fn is_negative_or_gt_one(&self) -> bool;
}

impl UnitInterval for Rational {
    fn is_negative_or_gt_one(&self) -> bool {
        *self < Rational::zero() || *self > Rational::one()
    }
}

/// Applies the witness's T-transform chain to `v`.
pub fn apply_doubly_stochastic_mix(
    witness: &MajorizationWitness,
    v: &[Rational],
) -> Result<Vec<Rational>> {
    if v.len() != witness.source.len() {
        return Err(Error::arg(format!(
            "vector has {} entries, witness acts on {}",
            v.len(),
            witness.source.len()
        )));
    }
    let mut x = v.to_vec();
    for step in &witness.steps {
        if step.i >= x.len() || step.j >= x.len() {
            return Err(Error::arg("T-transform index out of range"));
        }
        apply_t_transform(&mut x, step);
    }
    Ok(x)
}

pub(crate) fn apply_t_transform(x: &mut [Rational], step: &TStep) {
    let a = x[step.i].clone();
    let b = x[step.j].clone();
    let keep = Rational::one() - &step.t;
    x[step.i] = &keep * &a + &step.t * &b;
    x[step.j] = &step.t * &a + &keep * &b;
}

/// Builds a T-transform chain from sorted `p` to sorted `q`.
///
/// Muirhead/Hardy-Littlewood-Polya construction: take the last index `j`
/// where the current vector exceeds `q`, the first later index `k` where it
/// falls short, and move `min(x_j - q_j, q_k - x_k)` from `j` to `k`. Each
/// step fixes at least one coordinate and keeps the vector sorted, so at
/// most `N - 1` steps are needed.
pub fn build_witness(p: &[Rational], q: &[Rational]) -> Result<MajorizationWitness> {
    if p.len() != q.len() {
        return Err(Error::arg(format!(
            "witness needs equal lengths, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    if !majorizes(p, q) {
        return Err(Error::pre("source does not majorize target"));
    }
    let mut x = sorted_desc(p);
    let order = argsort_desc(q);
    let y: Vec<Rational> = order.iter().map(|&i| q[i].clone()).collect();
    let mut steps = Vec::new();
    loop {
        let Some(j) = (0..x.len()).rev().find(|&i| x[i] > y[i]) else {
            break;
        };
        let k = (j + 1..x.len())
            .find(|&i| x[i] < y[i])
            .ok_or_else(|| Error::Internal("majorization chain lost balance".into()))?;
        let delta = (&x[j] - &y[j]).min(&y[k] - &x[k]);
        let t = &delta / (&x[j] - &x[k]);
        let step = TStep { i: j, j: k, t };
        apply_t_transform(&mut x, &step);
        steps.push(step);
    }
    debug_assert_eq!(x, y);
    Ok(MajorizationWitness {
        source: p.to_vec(),
        target: q.to_vec(),
        steps,
        final_permutation: order,
    })
}

/// For `p >= q` not related by a permutation, checks `H(p) < H(q)` strictly.
///
/// Float comparison first; when the entropies are within 2^-40 the exact
/// comparison of `prod_i p_i^{p_i}` settles the order.
pub fn schur_concavity_check(p: &[Rational], q: &[Rational]) -> Result<bool> {
    if !majorizes(p, q) {
        return Err(Error::pre("schur check needs p to majorize q"));
    }
    if is_permutation_equivalent(p, q) {
        return Err(Error::pre("schur check needs non-equivalent inputs"));
    }
    Ok(entropy::compare_shannon(p, q)? == std::cmp::Ordering::Less)
}
