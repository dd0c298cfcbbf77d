//! Exact probability vectors and joint distributions over product alphabets.
//!
//! Joint weights are stored row-major with subsystem 0 most significant, so
//! the flat index of `(x_0, ..., x_{m-1})` is `sum_i x_i * prod_{j>i} d_j`.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::rational::{self, Rational};

fn check_weights(weights: &[Rational]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::arg("distribution must have at least one outcome"));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
        return Err(Error::arg(format!(
            "weight {i} is negative ({})",
            rational::format_rational(w)
        )));
    }
    let total: Rational = weights.iter().sum();
    if !total.is_one() {
        return Err(Error::arg(format!(
            "weights sum to {}, not 1",
            rational::format_rational(&total)
        )));
    }
    Ok(())
}

/// Probability vector with exact rational weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct Dist {
    weights: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    #[serde(with = "rational::serde_rational_vec")]
    weights: Vec<Rational>,
}

impl TryFrom<DistRepr> for Dist {
    type Error = Error;
    fn try_from(r: DistRepr) -> Result<Self> {
        Dist::new(r.weights)
    }
}

impl From<Dist> for DistRepr {
    fn from(d: Dist) -> Self {
        DistRepr { weights: d.weights }
    }
}

impl Dist {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(Dist { weights })
    }

    /// Parses `"1/2,1/4,1/4"` style lists.
    pub fn parse_list(list: &str) -> Result<Self> {
        let weights = list
            .split(',')
            .map(rational::parse_rational)
            .collect::<Result<Vec<_>>>()?;
        Dist::new(weights)
    }

    /// Convenience constructor from `(num, den)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Result<Self> {
        Dist::new(pairs.iter().map(|&(n, d)| rational::rat(n, d)).collect())
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::arg("uniform distribution needs d >= 1"));
        }
        Ok(Dist {
            weights: vec![rational::rat(1, d as i64); d],
        })
    }

    pub fn point_mass(d: usize, at: usize) -> Result<Self> {
        if at >= d {
            return Err(Error::arg(format!("point mass index {at} out of range {d}")));
        }
        let mut weights = vec![Rational::zero(); d];
        weights[at] = Rational::one();
        Ok(Dist { weights })
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<Rational> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of strictly positive weights.
    pub fn rank(&self) -> usize {
        rank(&self.weights)
    }

    pub fn to_float(&self) -> FloatDist {
        FloatDist {
            weights: self.weights.iter().map(rational::to_f64).collect(),
        }
    }

    /// Weights sorted descending; ties keep original index order.
    pub fn sorted_desc(&self) -> Vec<Rational> {
        sorted_desc(&self.weights)
    }

    /// Zero-pads to `len` outcomes.
    pub fn padded(&self, len: usize) -> Result<Dist> {
        if len < self.len() {
            return Err(Error::arg("cannot pad to a shorter length"));
        }
        let mut weights = self.weights.clone();
        weights.resize(len, Rational::zero());
        Ok(Dist { weights })
    }

    pub fn trace_distance(&self, other: &Dist) -> Result<Rational> {
        trace_distance(&self.weights, &other.weights)
    }
}

/// Distribution over a product alphabet `d_0 x ... x d_{m-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointDist {
    shape: Vec<usize>,
    weights: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    shape: Vec<usize>,
    #[serde(with = "rational::serde_rational_vec")]
    weights: Vec<Rational>,
}

impl TryFrom<JointRepr> for JointDist {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        JointDist::new(r.shape, r.weights)
    }
}

impl From<JointDist> for JointRepr {
    fn from(j: JointDist) -> Self {
        JointRepr {
            shape: j.shape,
            weights: j.weights,
        }
    }
}

impl From<Dist> for JointDist {
    fn from(d: Dist) -> Self {
        JointDist {
            shape: vec![d.len()],
            weights: d.weights,
        }
    }
}

impl JointDist {
    pub fn new(shape: Vec<usize>, weights: Vec<Rational>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::arg("shape must be non-empty with positive entries"));
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::arg("shape product overflows"))?;
        if count != weights.len() {
            return Err(Error::arg(format!(
                "shape {:?} has {} outcomes but {} weights were given",
                shape,
                count,
                weights.len()
            )));
        }
        check_weights(&weights)?;
        Ok(JointDist { shape, weights })
    }

    /// Internal constructor for weights that are correct by construction.
    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, weights: Vec<Rational>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), weights.len());
        JointDist { shape, weights }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn subsystems(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn rank(&self) -> usize {
        rank(&self.weights)
    }

    /// Forgets the product structure.
    pub fn flatten(&self) -> Dist {
        Dist {
            weights: self.weights.clone(),
        }
    }

    /// Shared alphabet size, if every subsystem has the same one.
    pub fn uniform_alphabet(&self) -> Option<usize> {
        let d = self.shape[0];
        self.shape.iter().all(|&s| s == d).then_some(d)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for (slot, &d) in self.shape.iter().enumerate().rev() {
            idx[slot] = flat % d;
            flat /= d;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }

    /// Product distribution `self (x) other`, with `other`'s subsystems last.
    pub fn tensor(&self, other: &JointDist, limits: &Limits) -> Result<JointDist> {
        limits.check_outcomes(self.len() as u128 * other.len() as u128)?;
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for a in &self.weights {
            for b in &other.weights {
                weights.push(a * b);
            }
        }
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        Ok(JointDist { shape, weights })
    }

    /// Sums out every subsystem not listed in `keep`.
    ///
    /// The result lists kept subsystems in ascending index order regardless of
    /// the order in `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDist> {
        if keep.is_empty() {
            return Err(Error::arg("marginal needs at least one kept subsystem"));
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&i| i >= self.shape.len()) {
            return Err(Error::arg(format!(
                "subsystem {bad} out of range for {} subsystems",
                self.shape.len()
            )));
        }
        let out_shape: Vec<usize> = kept.iter().map(|&i| self.shape[i]).collect();
        let out_strides = strides(&out_shape);
        // For each input slot: the stride it contributes to the output (0 if summed out).
        let mut contribution = vec![0usize; self.shape.len()];
        for (pos, &slot) in kept.iter().enumerate() {
            contribution[slot] = out_strides[pos];
        }
        let mut out = vec![Rational::zero(); out_shape.iter().product()];
        let mut idx = vec![0usize; self.shape.len()];
        let mut target = 0usize;
        for w in &self.weights {
            if !w.is_zero() {
                out[target] += w;
            }
            // odometer increment, maintaining `target` incrementally
            for slot in (0..idx.len()).rev() {
                idx[slot] += 1;
                target += contribution[slot];
                if idx[slot] < self.shape[slot] {
                    break;
                }
                target -= contribution[slot] * idx[slot];
                idx[slot] = 0;
            }
        }
        Ok(JointDist {
            shape: out_shape,
            weights: out,
        })
    }

    /// Single-subsystem marginal as a plain distribution.
    pub fn marginal_dist(&self, slot: usize) -> Result<Dist> {
        Ok(self.marginal(&[slot])?.flatten())
    }

    /// Relabels subsystems: output slot `j` carries input slot `perm[j]`.
    ///
    /// Only slots of equal alphabet size may be exchanged, so the shape is
    /// unchanged.
    pub fn permute_subsystems(&self, perm: &[usize]) -> Result<JointDist> {
        let m = self.shape.len();
        if perm.len() != m {
            return Err(Error::arg(format!(
                "permutation has {} entries for {m} subsystems",
                perm.len()
            )));
        }
        let mut seen = vec![false; m];
        for &p in perm {
            if p >= m || std::mem::replace(&mut seen[p], true) {
                return Err(Error::arg(format!("{perm:?} is not a permutation")));
            }
        }
        for (j, &src) in perm.iter().enumerate() {
            if self.shape[src] != self.shape[j] {
                return Err(Error::arg(format!(
                    "cannot move subsystem {src} (alphabet {}) into slot {j} (alphabet {})",
                    self.shape[src], self.shape[j]
                )));
            }
        }
        let in_strides = self.strides();
        let mut out = vec![Rational::zero(); self.len()];
        let mut idx = vec![0usize; m];
        for slot_out in out.iter_mut() {
            // output multi-index `idx` reads input index y with y[perm[j]] = idx[j]
            let src: usize = idx
                .iter()
                .zip(perm)
                .map(|(&x, &p)| x * in_strides[p])
                .sum();
            *slot_out = self.weights[src].clone();
            for slot in (0..m).rev() {
                idx[slot] += 1;
                if idx[slot] < self.shape[slot] {
                    break;
                }
                idx[slot] = 0;
            }
        }
        Ok(JointDist {
            shape: self.shape.clone(),
            weights: out,
        })
    }

    pub fn trace_distance(&self, other: &JointDist) -> Result<Rational> {
        trace_distance(&self.weights, &other.weights)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

pub fn rank(weights: &[Rational]) -> usize {
    weights.iter().filter(|w| w.is_positive()).count()
}

/// Descending sort; ties keep original index order.
pub fn sorted_desc(weights: &[Rational]) -> Vec<Rational> {
    let mut v = weights.to_vec();
    v.sort_by(|a, b| b.cmp(a));
    v
}

/// Descending order of indices; ties broken by ascending index.
pub fn argsort_desc(weights: &[Rational]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| match weights[b].cmp(&weights[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    idx
}

/// `n`-fold product `p (x) ... (x) p` under the default outcome cap.
pub fn tensor_power(p: &Dist, n: usize) -> Result<JointDist> {
    tensor_power_capped(p, n, &Limits::default())
}

pub fn tensor_power_capped(p: &Dist, n: usize, limits: &Limits) -> Result<JointDist> {
    if n == 0 {
        return Err(Error::arg("tensor power needs n >= 1"));
    }
    let total = limits.outcome_count(p.len(), n)?;
    let mut weights = p.weights.clone();
    for _ in 1..n {
        let mut next = Vec::with_capacity(weights.len() * p.len());
        for a in &weights {
            for b in &p.weights {
                next.push(a * b);
            }
        }
        weights = next;
    }
    debug_assert_eq!(weights.len(), total);
    Ok(JointDist {
        shape: vec![p.len(); n],
        weights,
    })
}

/// Sorted, zero-padded comparison of two weight vectors.
pub fn is_permutation_equivalent(p: &[Rational], q: &[Rational]) -> bool {
    let len = p.len().max(q.len());
    let pad = |v: &[Rational]| {
        let mut s = v.to_vec();
        s.resize(len, Rational::zero());
        s.sort();
        s
    };
    pad(p) == pad(q)
}

/// Half the L1 distance.
pub fn trace_distance(p: &[Rational], q: &[Rational]) -> Result<Rational> {
    if p.len() != q.len() {
        return Err(Error::arg(format!(
            "trace distance between {} and {} outcomes",
            p.len(),
            q.len()
        )));
    }
    let l1: Rational = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok(l1 / rational::int(2))
}

/// Floating-point distribution, used only for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatDist {
    weights: Vec<f64>,
}

impl FloatDist {
    pub const NEGATIVE_TOLERANCE: f64 = 1.0 / (1u64 << 50) as f64;
    pub const SUM_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::arg("distribution must have at least one outcome"));
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < -Self::NEGATIVE_TOLERANCE)
        {
            return Err(Error::arg("float weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::arg(format!("float weights sum to {total}")));
        }
        Ok(FloatDist { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn d(pairs: &[(i64, i64)]) -> Dist {
        Dist::from_ratios(pairs).unwrap()
    }

    #[test]
    fn rejects_invalid_weights() {
        assert!(Dist::from_ratios(&[(1, 2), (1, 3)]).is_err());
        assert!(Dist::from_ratios(&[(3, 2), (-1, 2)]).is_err());
        assert!(Dist::new(vec![]).is_err());
        assert!(JointDist::new(vec![2, 2], vec![rat(1, 2), rat(1, 2)]).is_err());
    }

    #[test]
    fn tensor_power_examples() {
        let t = tensor_power(&d(&[(1, 2), (1, 2)]), 2).unwrap();
        assert_eq!(t.weights(), &vec![rat(1, 4); 4][..]);

        let t = tensor_power(&d(&[(1, 1), (0, 1)]), 3).unwrap();
        assert_eq!(t.shape(), &[2, 2, 2]);
        assert_eq!(t.weights()[0], rat(1, 1));
        assert_eq!(t.rank(), 1);

        let t = tensor_power(&d(&[(3, 4), (1, 4)]), 2).unwrap();
        assert_eq!(
            t.weights(),
            &[rat(9, 16), rat(3, 16), rat(3, 16), rat(1, 16)]
        );
    }

    #[test]
    fn tensor_power_respects_cap() {
        let limits = Limits {
            max_outcomes: 1000,
            ..Limits::default()
        };
        let p = d(&[(1, 2), (1, 2)]);
        assert!(tensor_power_capped(&p, 9, &limits).is_ok());
        let err = tensor_power_capped(&p, 10, &limits).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
        assert!(tensor_power(&p, 0).is_err());
    }

    #[test]
    fn marginal_examples() {
        let limits = Limits::default();
        let p = JointDist::from(d(&[(1, 3), (2, 3)]));
        let q = JointDist::from(d(&[(1, 5), (3, 5), (1, 5)]));
        let pq = p.tensor(&q, &limits).unwrap();
        assert_eq!(pq.marginal(&[0]).unwrap(), p);
        assert_eq!(pq.marginal(&[1]).unwrap(), q);

        let corr = JointDist::new(vec![2, 2], vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 2)])
            .unwrap();
        for i in 0..2 {
            assert_eq!(
                corr.marginal_dist(i).unwrap(),
                d(&[(1, 2), (1, 2)])
            );
        }

        let t = tensor_power(&d(&[(3, 4), (1, 4)]), 2).unwrap();
        assert_eq!(t.marginal_dist(1).unwrap(), d(&[(3, 4), (1, 4)]));
        assert!(t.marginal(&[2]).is_err());
        assert!(t.marginal(&[]).is_err());
    }

    #[test]
    fn marginal_keeps_ascending_order() {
        let limits = Limits::default();
        let a = JointDist::from(d(&[(1, 2), (1, 2)]));
        let b = JointDist::from(d(&[(1, 3), (1, 3), (1, 3)]));
        let c = JointDist::from(d(&[(1, 4), (3, 4)]));
        let abc = a.tensor(&b, &limits).unwrap().tensor(&c, &limits).unwrap();
        let m = abc.marginal(&[2, 0]).unwrap();
        assert_eq!(m, a.tensor(&c, &limits).unwrap());
    }

    #[test]
    fn permute_subsystems_examples() {
        let limits = Limits::default();
        let p = JointDist::from(d(&[(1, 3), (2, 3)]));
        let q = JointDist::from(d(&[(1, 5), (4, 5)]));
        let pq = p.tensor(&q, &limits).unwrap();
        assert_eq!(pq.permute_subsystems(&[0, 1]).unwrap(), pq);
        assert_eq!(
            pq.permute_subsystems(&[1, 0]).unwrap(),
            q.tensor(&p, &limits).unwrap()
        );

        // transpose of an asymmetric 2x2 weight matrix
        let m = JointDist::new(
            vec![2, 2],
            vec![rat(9, 16), rat(4, 16), rat(2, 16), rat(1, 16)],
        )
        .unwrap();
        let t = m.permute_subsystems(&[1, 0]).unwrap();
        assert_eq!(
            t.weights(),
            &[rat(9, 16), rat(2, 16), rat(4, 16), rat(1, 16)]
        );

        let mixed = p.tensor(&JointDist::from(d(&[(1, 3), (1, 3), (1, 3)])), &limits).unwrap();
        assert!(mixed.permute_subsystems(&[1, 0]).is_err());
        assert!(pq.permute_subsystems(&[0, 0]).is_err());
    }

    #[test]
    fn permutation_equivalence_examples() {
        assert!(is_permutation_equivalent(
            d(&[(1, 2), (1, 2)]).weights(),
            d(&[(1, 2), (1, 2)]).weights()
        ));
        assert!(is_permutation_equivalent(
            d(&[(3, 4), (1, 4)]).weights(),
            d(&[(1, 4), (3, 4)]).weights()
        ));
        assert!(!is_permutation_equivalent(
            d(&[(3, 4), (1, 4)]).weights(),
            d(&[(2, 3), (1, 3)]).weights()
        ));
        // zero padding
        assert!(is_permutation_equivalent(
            d(&[(1, 2), (1, 2), (0, 1)]).weights(),
            d(&[(1, 2), (1, 2)]).weights()
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let p = d(&[(3, 4), (1, 4)]);
        assert_eq!(p.trace_distance(&p).unwrap(), rat(0, 1));
        assert_eq!(
            d(&[(1, 1), (0, 1)])
                .trace_distance(&d(&[(0, 1), (1, 1)]))
                .unwrap(),
            rat(1, 1)
        );
        assert_eq!(
            p.trace_distance(&d(&[(1, 2), (1, 2)])).unwrap(),
            rat(1, 4)
        );
        assert!(p.trace_distance(&Dist::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn json_round_trip_uses_fraction_strings() {
        let p = d(&[(3, 4), (1, 4)]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"weights":["3/4","1/4"]}"#);
        assert_eq!(serde_json::from_str::<Dist>(&text).unwrap(), p);

        let j = tensor_power(&p, 2).unwrap();
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.starts_with(r#"{"shape":[2,2],"weights":["9/16""#));
        assert_eq!(serde_json::from_str::<JointDist>(&text).unwrap(), j);

        assert!(serde_json::from_str::<Dist>(r#"{"weights":["1/2","1/3"]}"#).is_err());
    }

    #[test]
    fn float_dist_tolerances() {
        assert!(FloatDist::new(vec![0.5, 0.5]).is_ok());
        assert!(FloatDist::new(vec![0.5, 0.5 + 1e-15, -1e-16]).is_ok());
        assert!(FloatDist::new(vec![0.5, 0.6]).is_err());
        assert!(FloatDist::new(vec![1.1, -0.1]).is_err());
    }
}
