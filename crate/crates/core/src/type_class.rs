//! Method-of-types bookkeeping for i.i.d. product distributions.
//!
//! Every sequence in `[d]^n` belongs to the type class of its composition
//! `(c_0, ..., c_{d-1})`; all members share the probability
//! `prod_a p_a^{c_a}` under `p^{(x)n}`, and the class has
//! `n! / prod_a c_a!` members.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeClass {
    /// `counts[a]` = occurrences of symbol `a`.
    pub counts: Vec<usize>,
    pub multiplicity: BigUint,
    /// Probability of each individual sequence in the class.
    pub probability: Rational,
}

impl TypeClass {
    pub fn mass(&self) -> Rational {
        &self.probability * rational::biguint_to_rational(self.multiplicity.clone())
    }
}

/// Number of compositions of `n` into `d` nonnegative parts, `C(n+d-1, d-1)`.
pub fn composition_count(d: usize, n: usize) -> BigUint {
    binomial(n + d - 1, d.saturating_sub(1))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn multinomial(counts: &[usize]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0;
    for &c in counts {
        total += c;
        acc *= binomial(total, c);
    }
    acc
}

/// All compositions of `n` into `d` parts, in lexicographically decreasing
/// order of the count vector (so `(n, 0, ..., 0)` comes first).
pub fn compositions(d: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(d, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Type classes of `p^{(x)n}` in composition order.
pub fn type_classes(p: &Dist, n: usize, limits: &Limits) -> Result<Vec<TypeClass>> {
    if n == 0 {
        return Err(Error::arg("type classes need n >= 1"));
    }
    let count = composition_count(p.len(), n);
    if count > BigUint::from(limits.max_type_classes) {
        return Err(Error::Resource(format!(
            "{count} type classes exceed limit {}",
            limits.max_type_classes
        )));
    }
    // powers[a][c] = p_a^c
    let powers: Vec<Vec<Rational>> = p
        .weights()
        .iter()
        .map(|w| {
            let mut v = Vec::with_capacity(n + 1);
            let mut acc = Rational::one();
            for _ in 0..=n {
                v.push(acc.clone());
                acc *= w;
            }
            v
        })
        .collect();
    Ok(compositions(p.len(), n)
        .into_iter()
        .map(|counts| {
            let probability = counts
                .iter()
                .enumerate()
                .map(|(a, &c)| &powers[a][c])
                .product();
            TypeClass {
                multiplicity: multinomial(&counts),
                counts,
                probability,
            }
        })
        .collect())
}

/// Composition of a flat index of `[d]^n` (row-major).
pub fn composition_of(mut flat: usize, d: usize, n: usize) -> Vec<usize> {
    let mut counts = vec![0; d];
    for _ in 0..n {
        counts[flat % d] += 1;
        flat /= d;
    }
    counts
}
