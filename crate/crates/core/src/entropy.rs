//! Shannon, rank and smooth min/max entropies (all logarithms base 2).
//!
//! Smoothing is over *normalized* distributions within trace distance `eps`.
//! Under that ball:
//!
//! - the smallest reachable support is obtained by cutting the
//!   descending-sorted tail: moving the tail mass (at most `eps`) onto the
//!   kept entries is a trace-distance-`eps` move, and any distribution with
//!   support `k` is at distance at least the mass outside its best `k`
//!   outcomes. Hence `H_max^eps = log2 min{k : tail beyond top-k <= eps}`.
//! - the smallest reachable peak is the cap `t` at which the mass above the
//!   cap is exactly `eps`, but never below `1/d` (the removed mass has to fit
//!   under the cap elsewhere). Any distribution whose maximum is `t` is at
//!   distance at least `sum_i (p_i - t)_+`, so the cap is optimal and
//!   `H_min^eps = -log2 max(t_eps, 1/d)`.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::{self, sorted_desc, Dist};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::rational::{self, Rational};
use crate::type_class;

/// Above this common denominator the exact entropy comparison gives up.
const EXACT_COMPARE_MAX_DENOMINATOR: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub shannon: f64,
    pub rank: usize,
    pub h0: f64,
    pub dimension: usize,
}

pub fn entropy_report(weights: &[Rational]) -> EntropyReport {
    let (rank, h0) = rank_entropy(weights);
    EntropyReport {
        shannon: shannon(weights),
        rank,
        h0,
        dimension: weights.len(),
    }
}

/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn shannon(weights: &[Rational]) -> f64 {
    let h: f64 = weights
        .iter()
        .filter(|w| w.is_positive())
        .map(|w| -rational::to_f64(w) * rational::log2_rational(w))
        .sum();
    h.max(0.0)
}

pub fn shannon_f64(weights: &[f64]) -> f64 {
    let h: f64 = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * w.log2())
        .sum();
    h.max(0.0)
}

/// `(rank, log2 rank)`.
pub fn rank_entropy(weights: &[Rational]) -> (usize, f64) {
    let rank = dist::rank(weights);
    (rank, (rank.max(1) as f64).log2())
}

/// Orders `H(p)` against `H(q)`.
///
/// Floats decide when the gap exceeds 2^-40. Otherwise, writing
/// `p_i = k_i / L` over a common denominator `L`, `H(p) < H(q)` iff
/// `prod k_i^{k_i} > prod m_i^{m_i}`, which is an exact integer comparison.
pub fn compare_shannon(p: &[Rational], q: &[Rational]) -> Result<Ordering> {
    compare_shannon_with_tolerance(p, q, 2f64.powi(-40))
}

pub fn compare_shannon_with_tolerance(
    p: &[Rational],
    q: &[Rational],
    tolerance: f64,
) -> Result<Ordering> {
    let hp = shannon(p);
    let hq = shannon(q);
    if (hp - hq).abs() > tolerance {
        return Ok(hp.partial_cmp(&hq).unwrap());
    }
    let lcm = rational::lcm_of_denominators(p.iter().chain(q));
    if lcm > BigInt::from(EXACT_COMPARE_MAX_DENOMINATOR) {
        return Err(Error::Resource(format!(
            "entropies within {tolerance:e} and common denominator {lcm} too large for exact comparison"
        )));
    }
    let power_product = |v: &[Rational]| -> BigInt {
        v.iter()
            .map(|w| {
                let k = (w * Rational::from_integer(lcm.clone())).to_integer();
                let e = k.to_usize().expect("bounded by lcm");
                num_traits::pow(k, e)
            })
            .product()
    };
    // larger product of k^k means smaller entropy
    Ok(power_product(q).cmp(&power_product(p)))
}

/// Smallest support size reachable within trace distance `eps`.
pub fn smooth_max_support(weights: &[Rational], eps: &Rational) -> Result<usize> {
    check_eps(eps)?;
    let need = Rational::one() - eps;
    let mut acc = Rational::zero();
    for (k, w) in sorted_desc(weights).iter().enumerate() {
        acc += w;
        if acc >= need {
            return Ok(k + 1);
        }
    }
    Err(Error::arg("weights do not sum to 1"))
}

pub fn smooth_max_entropy(weights: &[Rational], eps: &Rational) -> Result<f64> {
    Ok((smooth_max_support(weights, eps)? as f64).log2())
}

/// Smallest achievable maximum weight within trace distance `eps`.
pub fn smooth_min_cap(weights: &[Rational], eps: &Rational) -> Result<Rational> {
    check_eps(eps)?;
    let x = sorted_desc(weights);
    let d = x.len();
    let mut partial = Rational::zero();
    let mut cap = None;
    for k in 0..d {
        partial += &x[k];
        let t = (&partial - eps) / rational::int(k as i64 + 1);
        if k + 1 == d || t >= x[k + 1] {
            cap = Some(t);
            break;
        }
    }
    let floor = rational::rat(1, d as i64);
    Ok(cap.unwrap().max(floor))
}

pub fn smooth_min_entropy(weights: &[Rational], eps: &Rational) -> Result<f64> {
    Ok(-rational::log2_rational(&smooth_min_cap(weights, eps)?))
}

fn check_eps(eps: &Rational) -> Result<()> {
    if eps.is_negative() || *eps >= Rational::one() {
        return Err(Error::pre(format!(
            "smoothing parameter must lie in [0, 1), got {}",
            rational::format_rational(eps)
        )));
    }
    Ok(())
}

/// Smooth entropies of `p^{(x)n}` computed class by class.
#[derive(Debug, Clone, PartialEq)]
pub struct IidSmoothEntropies {
    pub hmax: f64,
    pub hmin: f64,
    pub max_support: BigUint,
    pub min_cap: Rational,
}

/// Smooth max/min entropy of `p^{(x)n}` without expanding `d^n` outcomes.
///
/// Type classes are visited in decreasing order of their common probability;
/// the tail cut and the cap threshold both only change slope at class
/// boundaries, so a single pass with exact partial sums suffices.
pub fn iid_smooth_entropies(
    p: &Dist,
    n: usize,
    eps: &Rational,
    limits: &Limits,
) -> Result<IidSmoothEntropies> {
    check_eps(eps)?;
    let mut classes = type_class::type_classes(p, n, limits)?;
    classes.sort_by(|a, b| b.probability.cmp(&a.probability));

    // smooth max: smallest k with top-k mass >= 1 - eps
    let need = Rational::one() - eps;
    let mut mass = Rational::zero();
    let mut count = BigUint::zero();
    let mut max_support = None;
    for c in &classes {
        let class_mass = c.mass();
        if &mass + &class_mass >= need {
            let missing = &need - &mass;
            let extra = if missing.is_positive() {
                (missing / &c.probability).ceil().to_integer()
            } else {
                BigInt::zero()
            };
            max_support = Some(&count + extra.to_biguint().expect("nonnegative"));
            break;
        }
        mass += class_mass;
        count += &c.multiplicity;
    }
    let max_support =
        max_support.ok_or_else(|| Error::Internal("type classes do not sum to one".into()))?;

    // smooth min: cap threshold at class boundaries
    let mut mass = Rational::zero();
    let mut count = BigUint::zero();
    let mut cap = None;
    for (i, c) in classes.iter().enumerate() {
        mass += c.mass();
        count += &c.multiplicity;
        let t = (&mass - eps) / rational::biguint_to_rational(count.clone());
        let next = classes.get(i + 1).map(|c| &c.probability);
        if next.map_or(true, |v| t >= *v) {
            cap = Some(t);
            break;
        }
    }
    let total = num_traits::pow(BigUint::from(p.len()), n);
    let floor = Rational::new(BigInt::one(), BigInt::from(total));
    let min_cap = cap.unwrap().max(floor);

    Ok(IidSmoothEntropies {
        hmax: rational::log2_biguint(&max_support),
        hmin: -rational::log2_rational(&min_cap),
        max_support,
        min_cap,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::tensor_power;
    use crate::rational::rat;

    fn v(pairs: &[(i64, i64)]) -> Vec<Rational> {
        pairs.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon(&v(&[(1, 8); 8])) - 3.0).abs() < 1e-12);
        assert_eq!(shannon(&v(&[(1, 1), (0, 1)])), 0.0);
        let h = shannon(&v(&[(3, 4), (1, 4)]));
        assert!((h - (2.0 - 0.75 * 3f64.log2())).abs() < 1e-12);
        assert!((h - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_entropy(&v(&[(1, 2), (1, 2), (0, 1)])), (2, 1.0));
        assert_eq!(rank_entropy(&v(&[(0, 1), (1, 1)])), (1, 0.0));
        let p = Dist::from_ratios(&[(1, 2), (1, 2), (0, 1)]).unwrap();
        assert_eq!(tensor_power(&p, 3).unwrap().rank(), 8);
    }

    #[test]
    fn smooth_max_examples() {
        let p = v(&[(1, 2), (1, 4), (1, 4), (0, 1)]);
        assert_eq!(smooth_max_entropy(&p, &rat(0, 1)).unwrap(), 3f64.log2());
        let p = v(&[(5, 10), (4, 10), (1, 10)]);
        assert_eq!(smooth_max_entropy(&p, &rat(1, 10)).unwrap(), 1.0);
        let u = v(&[(1, 4); 4]);
        assert_eq!(smooth_max_entropy(&u, &rat(1, 4)).unwrap(), 3f64.log2());
        assert!(smooth_max_entropy(&u, &rat(1, 1)).is_err());
    }

    #[test]
    fn smooth_min_examples() {
        let u = v(&[(1, 4); 4]);
        for e in [(0, 1), (1, 10), (1, 2), (9, 10)] {
            assert_eq!(smooth_min_entropy(&u, &rat(e.0, e.1)).unwrap(), 2.0);
        }
        let p = v(&[(1, 2), (1, 3), (1, 6)]);
        assert_eq!(smooth_min_cap(&p, &rat(0, 1)).unwrap(), rat(1, 2));
        let p = v(&[(7, 10), (3, 10)]);
        assert_eq!(smooth_min_cap(&p, &rat(1, 10)).unwrap(), rat(6, 10));
        assert!((smooth_min_entropy(&p, &rat(1, 10)).unwrap() + 0.6f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn smooth_min_matches_grid_search_on_two_outcomes() {
        // eps-ball of (0.7, 0.3) is {(x, 1-x) : |x - 0.7| <= eps}; best peak is
        // max(x, 1-x) minimised over the ball, scanned at resolution 1e-4.
        let p = v(&[(7, 10), (3, 10)]);
        for eps_num in [0i64, 5, 10, 15, 20, 30] {
            let eps = eps_num as f64 / 100.0;
            let mut best = f64::INFINITY;
            for i in 0..=10_000 {
                let x = i as f64 / 10_000.0;
                if (x - 0.7).abs() <= eps + 1e-12 {
                    best = best.min(x.max(1.0 - x));
                }
            }
            let cap = rational::to_f64(&smooth_min_cap(&p, &rat(eps_num, 100)).unwrap());
            assert!((cap - best).abs() < 1e-4, "eps {eps}: {cap} vs {best}");
        }
    }

    #[test]
    fn iid_single_copy_reduces_to_direct() {
        let p = Dist::from_ratios(&[(5, 10), (4, 10), (1, 10)]).unwrap();
        let eps = rat(1, 10);
        let iid = iid_smooth_entropies(&p, 1, &eps, &Limits::default()).unwrap();
        assert_eq!(iid.hmax, smooth_max_entropy(p.weights(), &eps).unwrap());
        assert_eq!(iid.hmin, smooth_min_entropy(p.weights(), &eps).unwrap());
    }

    #[test]
    fn iid_fair_coin_matches_direct_expansion() {
        let p = Dist::from_ratios(&[(1, 2), (1, 2)]).unwrap();
        for n in 1..=12 {
            for eps in [rat(0, 1), rat(1, 100), rat(1, 7), rat(1, 2)] {
                let iid = iid_smooth_entropies(&p, n, &eps, &Limits::default()).unwrap();
                let full = tensor_power(&p, n).unwrap();
                let k = smooth_max_support(full.weights(), &eps).unwrap();
                assert_eq!(iid.max_support, BigUint::from(k));
                assert_eq!(iid.min_cap, smooth_min_cap(full.weights(), &eps).unwrap());
            }
        }
    }

    #[test]
    fn iid_hmax_rate_approaches_shannon() {
        let p = Dist::from_ratios(&[(3, 4), (1, 4)]).unwrap();
        let n = 2000;
        let iid = iid_smooth_entropies(&p, n, &rat(1, 100), &Limits::default()).unwrap();
        let h = shannon(p.weights());
        assert!((iid.hmax / n as f64 - h).abs() < 0.05, "{}", iid.hmax / n as f64);
    }

    #[test]
    fn exact_comparison_breaks_float_ties() {
        // permutation-equivalent vectors have identical entropy
        let p = v(&[(1, 2), (1, 3), (1, 6)]);
        let q = v(&[(1, 6), (1, 2), (1, 3)]);
        assert_eq!(compare_shannon(&p, &q).unwrap(), Ordering::Equal);
        // force the exact path with a huge tolerance
        let a = v(&[(3, 4), (1, 4)]);
        let b = v(&[(5, 8), (3, 8)]);
        assert_eq!(
            compare_shannon_with_tolerance(&a, &b, 10.0).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            compare_shannon_with_tolerance(&b, &a, 10.0).unwrap(),
            Ordering::Greater
        );
    }

    #[test]
    fn report_fields() {
        let r = entropy_report(&v(&[(1, 2), (1, 2)]));
        assert_eq!(r.shannon, 1.0);
        assert_eq!(r.rank, 2);
        assert_eq!(r.h0, 1.0);
    }
}
