//! Membership in `S_n(p)`, the set of average single-subsystem marginals of
//! `n`-partite states majorized by `p^{(x)n}`.
//!
//! Two exact LP encodings are available:
//!
//! - [`SnEncoding::TopK`] works on all `d^n` outcomes. For every `k` it
//!   introduces a threshold `t_k` and slacks `s_{k,x} >= q_x - t_k` with
//!   `k t_k + sum_x s_{k,x} <= TopK(p^n, k)`; since
//!   `min_t k t + sum_x (q_x - t)_+` equals the sum of the `k` largest `q_x`,
//!   this is exactly `q <= p^n` in majorization. `O(N^2)` variables.
//! - [`SnEncoding::SymmetricTransport`] uses that `p^{(x)n}` and the
//!   average-marginal map are invariant under permuting subsystems, so
//!   averaging a feasible `q` over all subsystem permutations stays
//!   feasible: `q` can be taken constant on type classes. For such `q`,
//!   majorization by `p^n` (constant on its own value classes) is equivalent
//!   to a transport plan `F[c][j] >= 0` between type classes `c` and distinct
//!   values `a_j` of `p^n` with row sums `|c|`, column sums `mult(a_j)` and
//!   class masses `w_c = sum_j a_j F[c][j]` (block-averaging a doubly
//!   stochastic matrix). Polynomial in `n` for fixed `d`.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{sorted_desc, tensor_power_capped, Dist, JointDist};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::lp::{self, LinearExpr, LinearProgram, LpOutcome, Relation, Sense, SimplexOptions};
use crate::majorization::{self, apply_t_transform, MajorizationWitness, TStep};
use crate::rational::{self, Rational};
use crate::type_class::{self, composition_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnEncoding {
    TopK,
    #[default]
    SymmetricTransport,
}

#[derive(Debug, Clone, Default)]
pub struct SnOptions {
    pub encoding: SnEncoding,
    pub limits: Limits,
}

impl SnOptions {
    pub fn with_encoding(encoding: SnEncoding) -> Self {
        SnOptions {
            encoding,
            ..SnOptions::default()
        }
    }

    pub(crate) fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            max_pivots: self.limits.max_pivots,
            dump_tableau: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnMembershipProblem {
    pub p: Dist,
    pub pprime: Dist,
    pub n: usize,
}

impl SnMembershipProblem {
    pub fn new(p: Dist, pprime: Dist, n: usize, limits: &Limits) -> Result<Self> {
        if p.len() != pprime.len() {
            return Err(Error::arg(format!(
                "p has {} outcomes but p' has {}",
                p.len(),
                pprime.len()
            )));
        }
        if p.len() < 2 {
            return Err(Error::arg("S_n membership needs d >= 2"));
        }
        if n == 0 {
            return Err(Error::arg("S_n membership needs n >= 1"));
        }
        limits.outcome_count(p.len(), n)?;
        Ok(SnMembershipProblem { p, pprime, n })
    }

    pub fn d(&self) -> usize {
        self.p.len()
    }
}

/// LP outcome plus the decoded state when feasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnMembership {
    pub outcome: LpOutcome,
    /// A state majorized by `p^n` whose average marginal is `p'`.
    pub sigma: Option<JointDist>,
}

impl SnMembership {
    pub fn is_member(&self) -> bool {
        self.outcome.is_feasible()
    }
}

/// Which affine functional of the candidate state the LP pins down.
enum MarginalTarget<'a> {
    /// average marginal == p'
    Exact(&'a Dist),
    /// `(1/2) |average marginal - p'|_1` minimised
    Distance(&'a Dist),
}

/// Outcomes sharing one composition whose total mass is one LP expression.
pub(crate) struct MassGroup {
    pub mass: LinearExpr,
    pub counts: Vec<usize>,
    pub outcomes: Rational,
}

/// Majorization-constrained state variables inside an LP.
pub(crate) trait StateEncoding {
    /// Linear expression of the average marginal at symbol `a`.
    fn average_marginal_expr(&self, a: usize) -> LinearExpr;
    /// A partition of the outcomes into groups of one composition each.
    fn mass_groups(&self) -> Vec<MassGroup>;
    fn decode(&self, point: &[Rational]) -> JointDist;
}

struct TopKEncoding {
    d: usize,
    n: usize,
    q_vars: Vec<usize>,
}

impl TopKEncoding {
    /// Adds `q` (one variable per outcome), `sum q = 1` and `q <= target`.
    fn build(lp: &mut LinearProgram, d: usize, n: usize, target: &[Rational]) -> Self {
        let big_n = target.len();
        let q_vars: Vec<usize> = (0..big_n).map(|_| lp.add_var()).collect();
        lp.add_constraint(
            q_vars.iter().map(|&v| (v, Rational::one())),
            Relation::Eq,
            Rational::one(),
        );
        add_topk_majorization(lp, &q_vars, target);
        TopKEncoding { d, n, q_vars }
    }
}

/// `q <= target` via one `(t_k, s_k)` block per `k = 1..N-1`; the caller
/// supplies the equal-total constraint.
pub(crate) fn add_topk_majorization(lp: &mut LinearProgram, q_vars: &[usize], target: &[Rational]) {
    let sorted = sorted_desc(target);
    let mut top = Rational::zero();
    for k in 1..q_vars.len() {
        top += &sorted[k - 1];
        let t = lp.add_var();
        lp.set_free(t);
        let mut budget: LinearExpr = vec![(t, rational::int(k as i64))];
        for &q in q_vars {
            let s = lp.add_var();
            // q_x - t_k - s_{k,x} <= 0
            lp.add_constraint(
                [(q, Rational::one()), (t, -Rational::one()), (s, -Rational::one())],
                Relation::Le,
                Rational::zero(),
            );
            budget.push((s, Rational::one()));
        }
        lp.add_constraint(budget, Relation::Le, top.clone());
    }
}

impl StateEncoding for TopKEncoding {
    fn average_marginal_expr(&self, a: usize) -> LinearExpr {
        let n = rational::int(self.n as i64);
        self.q_vars
            .iter()
            .enumerate()
            .filter_map(|(x, &v)| {
                let count = composition_of(x, self.d, self.n)[a];
                (count > 0).then(|| (v, rational::int(count as i64) / &n))
            })
            .collect()
    }

    fn mass_groups(&self) -> Vec<MassGroup> {
        self.q_vars
            .iter()
            .enumerate()
            .map(|(x, &v)| MassGroup {
                mass: vec![(v, Rational::one())],
                counts: composition_of(x, self.d, self.n),
                outcomes: Rational::one(),
            })
            .collect()
    }

    fn decode(&self, point: &[Rational]) -> JointDist {
        let weights = self.q_vars.iter().map(|&v| point[v].clone()).collect();
        JointDist::from_parts_unchecked(vec![self.d; self.n], weights)
    }
}

pub(crate) struct TransportEncoding {
    d: usize,
    n: usize,
    /// type class compositions and sizes
    classes: Vec<(Vec<usize>, Rational)>,
    /// distinct values of `p^n` with multiplicities
    values: Vec<(Rational, Rational)>,
    first_var: usize,
}

impl TransportEncoding {
    pub(crate) fn build(lp: &mut LinearProgram, p: &Dist, n: usize, limits: &Limits) -> Result<Self> {
        let tcs = type_class::type_classes(p, n, limits)?;
        let mut values: Vec<(Rational, Rational)> = Vec::new();
        for tc in &tcs {
            let mult = rational::biguint_to_rational(tc.multiplicity.clone());
            match values.iter_mut().find(|(v, _)| *v == tc.probability) {
                Some((_, m)) => *m += mult,
                None => values.push((tc.probability.clone(), mult)),
            }
        }
        values.sort_by(|a, b| b.0.cmp(&a.0));
        let classes: Vec<(Vec<usize>, Rational)> = tcs
            .into_iter()
            .map(|tc| (tc.counts, rational::biguint_to_rational(tc.multiplicity)))
            .collect();
        let first_var = lp.num_vars();
        for _ in 0..classes.len() * values.len() {
            lp.add_var();
        }
        let enc = TransportEncoding {
            d: p.len(),
            n,
            classes,
            values,
            first_var,
        };
        for (c, (_, size)) in enc.classes.iter().enumerate() {
            lp.add_constraint(
                (0..enc.values.len()).map(|j| (enc.var(c, j), Rational::one())),
                Relation::Eq,
                size.clone(),
            );
        }
        for (j, (_, mult)) in enc.values.iter().enumerate() {
            lp.add_constraint(
                (0..enc.classes.len()).map(|c| (enc.var(c, j), Rational::one())),
                Relation::Eq,
                mult.clone(),
            );
        }
        Ok(enc)
    }

    fn var(&self, c: usize, j: usize) -> usize {
        self.first_var + c * self.values.len() + j
    }

    /// Total probability the state puts on type class `c`.
    pub(crate) fn class_mass_expr(&self, c: usize) -> LinearExpr {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, (a, _))| !a.is_zero())
            .map(|(j, (a, _))| (self.var(c, j), a.clone()))
            .collect()
    }
}

impl StateEncoding for TransportEncoding {
    fn average_marginal_expr(&self, a: usize) -> LinearExpr {
        let n = rational::int(self.n as i64);
        let mut expr = Vec::new();
        for (c, (counts, _)) in self.classes.iter().enumerate() {
            if counts[a] == 0 {
                continue;
            }
            let frac = rational::int(counts[a] as i64) / &n;
            for (v, coef) in self.class_mass_expr(c) {
                expr.push((v, coef * &frac));
            }
        }
        expr
    }

    fn mass_groups(&self) -> Vec<MassGroup> {
        self.classes
            .iter()
            .enumerate()
            .map(|(c, (counts, size))| MassGroup {
                mass: self.class_mass_expr(c),
                counts: counts.clone(),
                outcomes: size.clone(),
            })
            .collect()
    }

    fn decode(&self, point: &[Rational]) -> JointDist {
        let per_member: Vec<(Vec<usize>, Rational)> = self
            .classes
            .iter()
            .enumerate()
            .map(|(c, (counts, size))| {
                let mass: Rational = self
                    .class_mass_expr(c)
                    .iter()
                    .map(|(v, a)| a * &point[*v])
                    .sum();
                (counts.clone(), mass / size)
            })
            .collect();
        let total = self.d.pow(self.n as u32);
        let weights = (0..total)
            .map(|x| {
                let comp = composition_of(x, self.d, self.n);
                per_member
                    .iter()
                    .find(|(counts, _)| *counts == comp)
                    .map(|(_, w)| w.clone())
                    .expect("every outcome has a type class")
            })
            .collect();
        JointDist::from_parts_unchecked(vec![self.d; self.n], weights)
    }
}

/// Adds a state on `[d]^n` majorized by `p^{(x)n}` to `lp`.
pub(crate) fn build_encoding(
    lp: &mut LinearProgram,
    p: &Dist,
    n: usize,
    opts: &SnOptions,
) -> Result<Box<dyn StateEncoding>> {
    Ok(match opts.encoding {
        SnEncoding::TopK => {
            let target = tensor_power_capped(p, n, &opts.limits)?;
            Box::new(TopKEncoding::build(lp, p.len(), n, target.weights()))
        }
        SnEncoding::SymmetricTransport => {
            Box::new(TransportEncoding::build(lp, p, n, &opts.limits)?)
        }
    })
}

fn add_marginal_target(
    lp: &mut LinearProgram,
    enc: &dyn StateEncoding,
    target: MarginalTarget<'_>,
) {
    match target {
        MarginalTarget::Exact(pprime) => {
            for (a, w) in pprime.weights().iter().enumerate() {
                lp.add_constraint(enc.average_marginal_expr(a), Relation::Eq, w.clone());
            }
        }
        MarginalTarget::Distance(pprime) => {
            let mut objective = Vec::new();
            let half = rational::rat(1, 2);
            for (a, w) in pprime.weights().iter().enumerate() {
                let u = lp.add_var();
                let v = lp.add_var();
                let mut row = enc.average_marginal_expr(a);
                row.push((u, -Rational::one()));
                row.push((v, Rational::one()));
                lp.add_constraint(row, Relation::Eq, w.clone());
                objective.push((u, half.clone()));
                objective.push((v, half.clone()));
            }
            lp.set_objective(Sense::Minimize, objective);
        }
    }
}

/// Decides `p' in S_n(p)` by an exact LP.
pub fn sn_member(prob: &SnMembershipProblem, opts: &SnOptions) -> Result<SnMembership> {
    let mut lp = LinearProgram::new(0);
    let enc = build_encoding(&mut lp, &prob.p, prob.n, opts)?;
    add_marginal_target(&mut lp, enc.as_ref(), MarginalTarget::Exact(&prob.pprime));
    let outcome = lp::solve_with(&lp, &opts.simplex())?.outcome;
    let sigma = outcome.point().map(|x| enc.decode(x));
    if let Some(s) = &sigma {
        if average_marginal(s)? != prob.pprime {
            return Err(Error::Internal("decoded state misses the marginal target".into()));
        }
    }
    Ok(SnMembership { outcome, sigma })
}

/// Trace distance from `p'` to `S_n(p)`, exactly.
pub fn distance_to_sn(p: &Dist, pprime: &Dist, n: usize, opts: &SnOptions) -> Result<Rational> {
    let prob = SnMembershipProblem::new(p.clone(), pprime.clone(), n, &opts.limits)?;
    let mut lp = LinearProgram::new(0);
    let enc = build_encoding(&mut lp, &prob.p, prob.n, opts)?;
    add_marginal_target(&mut lp, enc.as_ref(), MarginalTarget::Distance(pprime));
    match lp::solve_with(&lp, &opts.simplex())?.outcome {
        LpOutcome::Optimal { value, .. } => Ok(value),
        other => Err(Error::Internal(format!(
            "distance LP should be feasible and bounded, got {other:?}"
        ))),
    }
}

/// `(1/n) sum_i marginal(q, {i})` for a state with a shared alphabet.
pub fn average_marginal(q: &JointDist) -> Result<Dist> {
    let d = q
        .uniform_alphabet()
        .ok_or_else(|| Error::arg("average marginal needs equal subsystem alphabets"))?;
    let n = q.subsystems();
    let mut acc = vec![Rational::zero(); d];
    for i in 0..n {
        for (a, w) in q.marginal_dist(i)?.weights().iter().enumerate() {
            acc[a] += w;
        }
    }
    let n = rational::int(n as i64);
    Dist::new(acc.into_iter().map(|w| w / &n).collect())
}

/// Average over all `n` cyclic shifts of the subsystems.
///
/// Every single-subsystem marginal of the result equals the average marginal
/// of the input. Since `p^{(x)n}` is shift invariant and the output is a
/// mixture of relabelings of the input, majorization by `p^n` is preserved.
pub fn symmetrize(sigma: &JointDist) -> Result<JointDist> {
    sigma
        .uniform_alphabet()
        .ok_or_else(|| Error::arg("symmetrize needs equal subsystem alphabets"))?;
    let n = sigma.subsystems();
    let mut acc = vec![Rational::zero(); sigma.len()];
    for shift in 0..n {
        let perm: Vec<usize> = (0..n).map(|j| (j + shift) % n).collect();
        let shifted = sigma.permute_subsystems(&perm)?;
        for (a, w) in acc.iter_mut().zip(shifted.weights()) {
            *a += w;
        }
    }
    let n = rational::int(n as i64);
    Ok(JointDist::from_parts_unchecked(
        sigma.shape().to_vec(),
        acc.into_iter().map(|w| w / &n).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub subsystem: usize,
    pub marginal: Dist,
    pub equals_target: bool,
}

/// Evidence that `p'` is reachable as an exact single-subsystem marginal of
/// a state majorized by `p^{(x)n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnCertificate {
    pub n: usize,
    pub p: Dist,
    pub pprime: Dist,
    /// LP solution: majorized by `p^n`, average marginal `p'`.
    pub sigma: JointDist,
    /// Cyclic symmetrization of `sigma`; every marginal is `p'`.
    pub rho_prime_n: JointDist,
    pub sigma_witness: MajorizationWitness,
    pub witness: MajorizationWitness,
    pub marginal_checks: Vec<MarginalCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub problems: Vec<String>,
}

impl VerificationReport {
    pub(crate) fn from_problems(problems: Vec<String>) -> Self {
        VerificationReport {
            valid: problems.is_empty(),
            problems,
        }
    }
}

impl SnCertificate {
    /// Assembles and self-checks a certificate from a feasible `sigma`.
    pub fn build(p: &Dist, pprime: &Dist, sigma: JointDist, limits: &Limits) -> Result<Self> {
        let n = sigma.subsystems();
        let source = tensor_power_capped(p, n, limits)?;
        let sigma_witness = majorization::build_witness(source.weights(), sigma.weights())?;
        let rho_prime_n = symmetrize(&sigma)?;
        let witness = majorization::build_witness(source.weights(), rho_prime_n.weights())?;
        let marginal_checks = (0..n)
            .map(|i| {
                let marginal = rho_prime_n.marginal_dist(i)?;
                Ok(MarginalCheck {
                    subsystem: i,
                    equals_target: &marginal == pprime,
                    marginal,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cert = SnCertificate {
            n,
            p: p.clone(),
            pprime: pprime.clone(),
            sigma,
            rho_prime_n,
            sigma_witness,
            witness,
            marginal_checks,
        };
        let report = cert.verify(limits)?;
        if !report.valid {
            return Err(Error::Internal(format!(
                "fresh certificate failed verification: {:?}",
                report.problems
            )));
        }
        Ok(cert)
    }

    /// Re-derives every claim of the certificate from scratch.
    pub fn verify(&self, limits: &Limits) -> Result<VerificationReport> {
        let mut problems = Vec::new();
        let d = self.p.len();
        if self.pprime.len() != d {
            problems.push("p and p' have different alphabet sizes".into());
            return Ok(VerificationReport::from_problems(problems));
        }
        let shape = vec![d; self.n];
        if self.sigma.shape() != shape.as_slice() || self.rho_prime_n.shape() != shape.as_slice() {
            problems.push(format!("states must have shape {shape:?}"));
            return Ok(VerificationReport::from_problems(problems));
        }
        let source = tensor_power_capped(&self.p, self.n, limits)?;
        for (name, w, state) in [
            ("sigma_witness", &self.sigma_witness, &self.sigma),
            ("witness", &self.witness, &self.rho_prime_n),
        ] {
            if w.source != source.weights() {
                problems.push(format!("{name} does not start from p^n"));
            }
            if w.target != state.weights() {
                problems.push(format!("{name} does not end at the recorded state"));
            }
            if !w.verify() {
                problems.push(format!("{name} does not replay exactly"));
            }
        }
        match average_marginal(&self.sigma) {
            Ok(m) if m == self.pprime => {}
            _ => problems.push("average marginal of sigma differs from p'".into()),
        }
        if symmetrize(&self.sigma)? != self.rho_prime_n {
            problems.push("rho_prime_n is not the cyclic symmetrization of sigma".into());
        }
        for i in 0..self.n {
            if self.rho_prime_n.marginal_dist(i)? != self.pprime {
                problems.push(format!("marginal {i} of rho_prime_n differs from p'"));
            }
        }
        let recorded_ok = self.marginal_checks.len() == self.n
            && self.marginal_checks.iter().enumerate().all(|(i, c)| {
                c.subsystem == i
                    && c.equals_target
                    && self.rho_prime_n.marginal_dist(i).ok().as_ref() == Some(&c.marginal)
            });
        if !recorded_ok {
            problems.push("recorded marginal checks are inconsistent".into());
        }
        Ok(VerificationReport::from_problems(problems))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum MinNResult {
    Found {
        n: usize,
        certificate: Box<SnCertificate>,
    },
    /// No member up to `n_max`; not a refutation.
    Exhausted { n_max: usize },
}

/// Scans `n = 1, 2, ..., n_max` and certifies the first feasible `n`.
pub fn find_min_n(p: &Dist, pprime: &Dist, n_max: usize, opts: &SnOptions) -> Result<MinNResult> {
    for n in 1..=n_max {
        let prob = SnMembershipProblem::new(p.clone(), pprime.clone(), n, &opts.limits)?;
        let membership = sn_member(&prob, opts)?;
        if let Some(sigma) = membership.sigma {
            let certificate = SnCertificate::build(p, pprime, sigma, &opts.limits)?;
            return Ok(MinNResult::Found {
                n,
                certificate: Box::new(certificate),
            });
        }
    }
    Ok(MinNResult::Exhausted { n_max })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub n: usize,
    pub trials: usize,
    pub midpoint_failures: usize,
    pub uniform_member: bool,
    /// Largest probed `r` with `u +- r (e_a - u)` in `S_n` for every `a`.
    #[serde(with = "rational::serde_rational")]
    pub inner_radius: Rational,
    pub bisection_steps: usize,
}

/// A random element of `S_n(p)`: average marginal of a random T-transform
/// image of `p^n` (always majorized, so always a member).
pub fn random_member<R: Rng + ?Sized>(
    p: &Dist,
    n: usize,
    steps: usize,
    rng: &mut R,
    limits: &Limits,
) -> Result<Dist> {
    let source = tensor_power_capped(p, n, limits)?;
    let mut x = source.weights().to_vec();
    let len = x.len();
    if len >= 2 {
        for _ in 0..steps {
            let mut pair: Vec<usize> = (0..len).collect();
            pair.shuffle(rng);
            let t = rational::rat(rng.gen_range(0..=8), 8);
            apply_t_transform(&mut x, &TStep { i: pair[0], j: pair[1], t });
        }
    }
    average_marginal(&JointDist::from_parts_unchecked(source.shape().to_vec(), x))
}

/// Empirical checks of convexity and full dimensionality of `S_n(p)`.
pub fn sn_convexity_probe<R: Rng + ?Sized>(
    p: &Dist,
    n: usize,
    trials: usize,
    bisection_steps: usize,
    rng: &mut R,
    opts: &SnOptions,
) -> Result<ConvexityReport> {
    let d = p.len();
    let member = |q: &Dist| -> Result<bool> {
        let prob = SnMembershipProblem::new(p.clone(), q.clone(), n, &opts.limits)?;
        Ok(sn_member(&prob, opts)?.is_member())
    };
    let mut midpoint_failures = 0;
    for _ in 0..trials {
        let a = random_member(p, n, 3 * d, rng, &opts.limits)?;
        let b = random_member(p, n, 3 * d, rng, &opts.limits)?;
        let half = rational::rat(1, 2);
        let mid = Dist::new(
            a.weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| (x + y) * &half)
                .collect(),
        )?;
        if !member(&mid)? {
            midpoint_failures += 1;
        }
    }
    let uniform = Dist::uniform(d)?;
    let uniform_member = member(&uniform)?;

    // probe points u + r (e_a - u) and u - r (e_a - u); both stay in the
    // simplex for r <= 1/(d-1)
    let probe_ok = |r: &Rational| -> Result<bool> {
        for a in 0..d {
            for sign in [Rational::one(), -Rational::one()] {
                let w: Vec<Rational> = (0..d)
                    .map(|b| {
                        let e = if a == b { Rational::one() } else { Rational::zero() };
                        &uniform.weights()[b] + &sign * r * (e - &uniform.weights()[b])
                    })
                    .collect();
                if !member(&Dist::new(w)?)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let mut lo = Rational::zero();
    let mut hi = rational::rat(1, d as i64 - 1);
    if probe_ok(&hi)? {
        lo = hi.clone();
    } else {
        for _ in 0..bisection_steps {
            let mid = (&lo + &hi) / rational::int(2);
            if probe_ok(&mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(ConvexityReport {
        n,
        trials,
        midpoint_failures,
        uniform_member,
        inner_radius: lo,
        bisection_steps,
    })
}

/// `min_t k t + sum_x (q_x - t)_+`, evaluated at the breakpoints.
pub fn top_k_by_threshold(q: &[Rational], k: usize) -> Rational {
    let objective = |t: &Rational| -> Rational {
        let kt = rational::int(k as i64) * t;
        kt + q
            .iter()
            .filter(|x| *x > t)
            .map(|x| x - t)
            .sum::<Rational>()
    };
    q.iter()
        .chain(std::iter::once(&Rational::zero()))
        .map(objective)
        .min()
        .unwrap_or_else(Rational::zero)
}
