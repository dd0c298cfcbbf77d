//! Typicality bounds for i.i.d. sources: the copy count needed for a target
//! smoothing, the smoothing reached at a given copy count, and the
//! smooth-majorization checks built on them.

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{self, Dist, JointDist};
use crate::entropy::{self, iid_smooth_entropies};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::lp::{self, LinearProgram, LpOutcome, Relation};
use crate::rational::{self, Rational};
use crate::sn::{self, SnOptions};

/// Relative error budget of the float evaluation of `n_epsilon`.
const CEILING_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypicalityBound {
    pub d: usize,
    #[serde(with = "rational::serde_rational")]
    pub delta: Rational,
    #[serde(with = "rational::serde_rational")]
    pub eps: Rational,
    pub n_eps: u64,
}

impl TypicalityBound {
    pub fn new(d: usize, delta: Rational, eps: Rational) -> Result<Self> {
        let n_eps = n_epsilon(d, &delta, &eps)?;
        Ok(TypicalityBound { d, delta, eps, n_eps })
    }
}

fn check_bound_args(d: usize, delta: &Rational) -> Result<()> {
    if d < 2 {
        return Err(Error::arg("alphabet size must be at least 2"));
    }
    if !delta.is_positive() {
        return Err(Error::arg("delta must be positive"));
    }
    Ok(())
}

/// `2^k` when `x` is an exact power of two.
fn exact_log2(x: &Rational) -> Option<i64> {
    let (num, den) = (x.numer(), x.denom());
    let is_pow2 = |v: &num_bigint::BigInt| v.is_positive() && (v & (v - 1u8)).is_zero();
    if !is_pow2(num) || !is_pow2(den) {
        return None;
    }
    Some(num.bits() as i64 - den.bits() as i64)
}

/// `ceil(2 log2(d+3)^2 / delta^2 * log2(1/eps))`.
///
/// Exact when `d+3` and `1/eps` are powers of two. Otherwise the float value
/// carries a relative error far below [`CEILING_GUARD`]; if that interval
/// straddles an integer the larger ceiling is returned, so
/// `epsilon_of_n(d, delta, n_epsilon(d, delta, eps)) <= eps` always holds.
pub fn n_epsilon(d: usize, delta: &Rational, eps: &Rational) -> Result<u64> {
    check_bound_args(d, delta)?;
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(Error::arg("eps must lie in (0, 1)"));
    }
    let log_d = rational::int(d as i64 + 3);
    if let (Some(l), Some(e)) = (exact_log2(&log_d), exact_log2(&eps.recip())) {
        let value = rational::int(2 * l * l * e) / (delta * delta);
        return value
            .ceil()
            .to_integer()
            .to_u64()
            .ok_or_else(|| Error::arg("n_epsilon overflows u64"));
    }
    let l = ((d + 3) as f64).log2();
    let delta = rational::to_f64(delta);
    let value = 2.0 * l * l / (delta * delta) * (-rational::log2_rational(eps));
    if !value.is_finite() || value > 1.8e19 {
        return Err(Error::arg("n_epsilon overflows u64"));
    }
    let lo = (value * (1.0 - CEILING_GUARD)).ceil();
    let hi = (value * (1.0 + CEILING_GUARD)).ceil();
    Ok(lo.max(hi) as u64)
}

/// `2^(-n delta^2 / (2 log2(d+3)^2))`.
pub fn epsilon_of_n(d: usize, delta: &Rational, n: u64) -> Result<f64> {
    check_bound_args(d, delta)?;
    let l = ((d + 3) as f64).log2();
    let delta = rational::to_f64(delta);
    Ok((-(n as f64) * delta * delta / (2.0 * l * l)).exp2())
}

/// Both one-shot entropy bounds at a single copy count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub n: usize,
    pub eps: f64,
    /// smooth max-entropy of `p^n` at `eps/2`
    pub hmax: f64,
    /// `n (H(p) + delta)`
    pub hmax_bound: f64,
    pub hmax_slack: f64,
    /// smooth min-entropy of `p'^n` at `eps/2`
    pub hmin: f64,
    /// `n (H(p') - delta)`
    pub hmin_bound: f64,
    pub hmin_slack: f64,
    /// `hmax < hmin`, decided exactly
    pub majorizes_approximation: bool,
}

impl Lemma2Report {
    pub fn holds(&self) -> bool {
        self.hmax_slack > 0.0 && self.hmin_slack > 0.0
    }
}

fn check_entropy_gap(p: &Dist, pprime: &Dist, delta: &Rational) -> Result<()> {
    if p.len() != pprime.len() {
        return Err(Error::arg("p and p' must share an alphabet"));
    }
    let gap = entropy::shannon(pprime.weights()) - entropy::shannon(p.weights());
    if gap <= 2.0 * rational::to_f64(delta) {
        return Err(Error::pre(format!(
            "need H(p') > H(p) + 2 delta, got a gap of {gap}"
        )));
    }
    Ok(())
}

/// Evaluates `H_max^{eps/2}(p^n) <= n(H(p)+delta)` and
/// `H_min^{eps/2}(p'^n) >= n(H(p')-delta)` with `eps = epsilon_of_n`.
pub fn verify_lemma2_bounds(
    p: &Dist,
    pprime: &Dist,
    delta: &Rational,
    n: usize,
    limits: &Limits,
) -> Result<Lemma2Report> {
    check_entropy_gap(p, pprime, delta)?;
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    let d = p.len();
    let eps = epsilon_of_n(d, delta, n as u64)?;
    let half = rational::from_f64(eps / 2.0)?;
    let source = iid_smooth_entropies(p, n, &half, limits)?;
    let target = iid_smooth_entropies(pprime, n, &half, limits)?;
    let delta = rational::to_f64(delta);
    let nf = n as f64;
    let hmax_bound = nf * (entropy::shannon(p.weights()) + delta);
    let hmin_bound = nf * (entropy::shannon(pprime.weights()) - delta);
    let cap_times_support =
        &target.min_cap * rational::biguint_to_rational(source.max_support.clone());
    Ok(Lemma2Report {
        n,
        eps,
        hmax: source.hmax,
        hmax_bound,
        hmax_slack: hmax_bound - source.hmax,
        hmin: target.hmin,
        hmin_bound,
        hmin_slack: target.hmin - hmin_bound,
        majorizes_approximation: cap_times_support < Rational::one(),
    })
}

pub fn lemma2_curve(
    p: &Dist,
    pprime: &Dist,
    delta: &Rational,
    ns: &[usize],
    limits: &Limits,
) -> Result<Vec<Lemma2Report>> {
    ns.iter()
        .map(|&n| verify_lemma2_bounds(p, pprime, delta, n, limits))
        .collect()
}

/// `n,eps,hmax_slack,hmin_slack` rows.
pub fn lemma2_csv(reports: &[Lemma2Report]) -> String {
    let mut out = String::from("n,eps,hmax_slack,hmin_slack\n");
    for r in reports {
        out.push_str(&format!("{},{:e},{},{}\n", r.n, r.eps, r.hmax_slack, r.hmin_slack));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityProbe {
    pub samples: usize,
    pub rejected: usize,
    pub failures: Vec<Dist>,
    pub min_hmin_slack: f64,
}

/// Samples targets `p'` with the required entropy gap and records every one
/// for which the min-entropy bound fails at fixed `(d, delta, n)`.
pub fn lemma2_uniformity_probe<R: Rng + ?Sized>(
    p: &Dist,
    delta: &Rational,
    n: usize,
    samples: usize,
    rng: &mut R,
    limits: &Limits,
) -> Result<UniformityProbe> {
    let d = p.len();
    let mut probe = UniformityProbe {
        samples: 0,
        rejected: 0,
        failures: Vec::new(),
        min_hmin_slack: f64::INFINITY,
    };
    let max_attempts = samples.saturating_mul(1000).max(1000);
    for _ in 0..max_attempts {
        if probe.samples == samples {
            break;
        }
        let pprime = random_dist(d, 64, rng)?;
        if check_entropy_gap(p, &pprime, delta).is_err() {
            probe.rejected += 1;
            continue;
        }
        probe.samples += 1;
        let report = verify_lemma2_bounds(p, &pprime, delta, n, limits)?;
        probe.min_hmin_slack = probe.min_hmin_slack.min(report.hmin_slack);
        if report.hmin_slack <= 0.0 {
            probe.failures.push(pprime);
        }
    }
    Ok(probe)
}

/// A random distribution whose weights are multiples of `1/resolution`.
pub fn random_dist<R: Rng + ?Sized>(d: usize, resolution: u32, rng: &mut R) -> Result<Dist> {
    let mut cuts: Vec<u32> = (0..d.saturating_sub(1))
        .map(|_| rng.gen_range(0..=resolution))
        .collect();
    cuts.push(0);
    cuts.push(resolution);
    cuts.sort_unstable();
    Dist::new(
        cuts.windows(2)
            .map(|w| rational::rat((w[1] - w[0]) as i64, resolution as i64))
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothMajorization {
    pub outcome: LpOutcome,
    /// A state majorized by `p^n` within `eps` of `p'^n`.
    pub q: Option<JointDist>,
    #[serde(with = "rational::serde_rational_opt")]
    pub distance: Option<Rational>,
    /// `H_max^{eps/2}(p^n) < H_min^{eps/2}(p'^n)`, a sufficient condition
    pub entropic_condition: bool,
}

impl SmoothMajorization {
    pub fn is_feasible(&self) -> bool {
        self.outcome.is_feasible()
    }
}

/// Is some `q` majorized by `p^{(x)n}` within trace distance `eps` of
/// `p'^{(x)n}`?
pub fn smooth_majorization_feasible(
    p: &Dist,
    pprime: &Dist,
    n: usize,
    eps: &Rational,
    opts: &SnOptions,
) -> Result<SmoothMajorization> {
    if p.len() != pprime.len() {
        return Err(Error::arg("p and p' must share an alphabet"));
    }
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    if eps.is_negative() {
        return Err(Error::arg("eps must be non-negative"));
    }
    opts.limits.outcome_count(p.len(), n)?;
    let mut lp = LinearProgram::new(0);
    let enc = sn::build_encoding(&mut lp, p, n, opts)?;
    let mut budget = Vec::new();
    let half = rational::rat(1, 2);
    for group in enc.mass_groups() {
        let target: Rational = group
            .counts
            .iter()
            .zip(pprime.weights())
            .map(|(&c, w)| num_traits::pow(w.clone(), c))
            .product::<Rational>()
            * &group.outcomes;
        let u = lp.add_var();
        let v = lp.add_var();
        let mut row = group.mass;
        row.push((u, -Rational::one()));
        row.push((v, Rational::one()));
        lp.add_constraint(row, Relation::Eq, target);
        budget.push((u, half.clone()));
        budget.push((v, half.clone()));
    }
    lp.add_constraint(budget, Relation::Le, eps.clone());
    let outcome = lp::solve_with(&lp, &opts.simplex())?.outcome;
    let q = outcome.point().map(|x| enc.decode(x));
    let distance = match &q {
        Some(q) => {
            let target = dist::tensor_power_capped(pprime, n, &opts.limits)?;
            Some(q.trace_distance(&target)?)
        }
        None => None,
    };
    if let Some(dist) = &distance {
        if dist > eps {
            return Err(Error::Internal("decoded state is farther than eps".into()));
        }
    }
    let entropic_condition = if *eps < Rational::one() {
        let half_eps = eps / rational::int(2);
        let source = iid_smooth_entropies(p, n, &half_eps, &opts.limits)?;
        let target = iid_smooth_entropies(pprime, n, &half_eps, &opts.limits)?;
        target.min_cap * rational::biguint_to_rational(source.max_support) < Rational::one()
    } else {
        true
    };
    Ok(SmoothMajorization {
        outcome,
        q,
        distance,
        entropic_condition,
    })
}

/// Trace distance between the average single-subsystem marginal of `q`
/// and `p'`.
pub fn marginal_average_distance(q: &JointDist, pprime: &Dist) -> Result<Rational> {
    if q.uniform_alphabet() != Some(pprime.len()) {
        return Err(Error::arg(format!(
            "state of shape {:?} does not match an alphabet of size {}",
            q.shape(),
            pprime.len()
        )));
    }
    let avg = sn::average_marginal(q)?;
    avg.trace_distance(pprime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::tensor_power;
    use crate::rational::rat;
    use crate::sn::SnEncoding;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(pairs: &[(i64, i64)]) -> Dist {
        Dist::from_ratios(pairs).unwrap()
    }

    #[test]
    fn n_epsilon_examples() {
        assert_eq!(n_epsilon(2, &rat(1, 10), &rat(1, 100)).unwrap(), 7164);
        assert_eq!(n_epsilon(2, &rat(1, 1), &rat(1, 2)).unwrap(), 11);
        // d+3 = 8 and eps = 1/4 make the value an exact integer: 2*9*2 = 36
        assert_eq!(n_epsilon(5, &rat(1, 1), &rat(1, 4)).unwrap(), 36);
        assert!(n_epsilon(2, &rat(1, 10), &rat(1, 1)).is_err());
        assert!(n_epsilon(2, &rat(0, 1), &rat(1, 2)).is_err());
        assert!(n_epsilon(1, &rat(1, 10), &rat(1, 2)).is_err());
    }

    #[test]
    fn doubling_delta_quarters_n() {
        for d in 2..6 {
            let a = n_epsilon(d, &rat(1, 10), &rat(1, 100)).unwrap();
            let b = n_epsilon(d, &rat(1, 5), &rat(1, 100)).unwrap();
            assert!(b * 4 >= a && (b - 1) * 4 < a, "{a} {b}");
        }
    }

    #[test]
    fn epsilon_of_n_inverts_n_epsilon() {
        assert_eq!(epsilon_of_n(2, &rat(1, 10), 0).unwrap(), 1.0);
        assert!(epsilon_of_n(2, &rat(1, 10), 7164).unwrap() <= 0.01);
        for d in 2..8 {
            for (num, den) in [(1, 2), (1, 3), (1, 100), (7, 9)] {
                let eps = rat(num, den);
                let n = n_epsilon(d, &rat(1, 7), &eps).unwrap();
                assert!(epsilon_of_n(d, &rat(1, 7), n).unwrap() <= num as f64 / den as f64);
            }
        }
    }

    #[test]
    fn lemma2_bounds_hold_on_coin_example() {
        let limits = Limits::default();
        let p = d(&[(3, 4), (1, 4)]);
        let q = d(&[(1, 2), (1, 2)]);
        let r = verify_lemma2_bounds(&p, &q, &rat(1, 20), 200, &limits).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(verify_lemma2_bounds(&q, &q, &rat(1, 20), 200, &limits).is_err());
        let csv = lemma2_csv(&[r]);
        assert!(csv.starts_with("n,eps,hmax_slack,hmin_slack\n200,"));
    }

    #[test]
    fn smooth_majorization_trivial_cases() {
        let opts = SnOptions::default();
        let p = d(&[(3, 4), (1, 4)]);
        let q = d(&[(5, 8), (3, 8)]);
        let r = smooth_majorization_feasible(&p, &q, 1, &rat(0, 1), &opts).unwrap();
        assert!(r.is_feasible());
        assert_eq!(r.distance, Some(rat(0, 1)));

        let point = d(&[(1, 1), (0, 1)]);
        let u = d(&[(1, 2), (1, 2)]);
        let r = smooth_majorization_feasible(&point, &u, 1, &rat(0, 1), &opts).unwrap();
        assert!(r.is_feasible());

        let r = smooth_majorization_feasible(&u, &point, 1, &rat(1, 10), &opts).unwrap();
        assert!(!r.is_feasible());
        assert!(!r.entropic_condition);
    }

    #[test]
    fn smooth_majorization_encodings_agree() {
        let p = d(&[(1, 2), (1, 4), (1, 4), (0, 1)]);
        let q = d(&[(2, 5), (2, 5), (1, 10), (1, 10)]);
        for eps in [rat(0, 1), rat(1, 20), rat(1, 10), rat(1, 5)] {
            let a = smooth_majorization_feasible(&p, &q, 2, &eps, &SnOptions::default()).unwrap();
            let b = smooth_majorization_feasible(
                &p,
                &q,
                2,
                &eps,
                &SnOptions::with_encoding(SnEncoding::TopK),
            )
            .unwrap();
            assert_eq!(a.is_feasible(), b.is_feasible(), "eps {eps}");
            if let Some(q2) = &a.q {
                let avg = marginal_average_distance(q2, &q).unwrap();
                assert!(avg <= a.distance.clone().unwrap());
            }
        }
    }

    #[test]
    fn marginal_average_distance_examples() {
        let q = d(&[(1, 3), (2, 3)]);
        assert_eq!(marginal_average_distance(&tensor_power(&q, 3).unwrap(), &q).unwrap(), rat(0, 1));
        let corr = JointDist::new(vec![2, 2], vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 2)]).unwrap();
        assert_eq!(
            marginal_average_distance(&corr, &d(&[(1, 2), (1, 2)])).unwrap(),
            rat(0, 1)
        );
        assert!(marginal_average_distance(&corr, &Dist::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn uniformity_probe_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let probe = lemma2_uniformity_probe(
            &d(&[(9, 10), (1, 10)]),
            &rat(1, 20),
            300,
            5,
            &mut rng,
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(probe.samples, 5);
    }
}
