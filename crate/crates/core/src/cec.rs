//! Catalytic transitions between distributions: the entropy and rank gate,
//! the copy-count certificate, and the search for an explicit catalyst and
//! joint permutation.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{self, tensor_power_capped, Dist, JointDist};
use crate::entropy;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::lp::{self, LinearProgram, Relation, SimplexOptions};
use crate::rational::{self, Rational};
use crate::sn::{self, MinNResult, SnCertificate, SnOptions, VerificationReport};

/// Below this entropy gap the comparison is redone exactly.
pub const EXACT_ENTROPY_GAP: f64 = 1.0 / (1u64 << 38) as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub permutation_equivalent: bool,
    /// `H(p) < H(p')`
    pub entropy_ok: bool,
    /// `rank(p) <= rank(p')`
    pub rank_ok: bool,
    pub entropy_p: f64,
    pub entropy_pprime: f64,
    pub rank_p: usize,
    pub rank_pprime: usize,
    pub possible: bool,
    /// Tags of the failed conditions: `permutation-equivalent`,
    /// `entropy-not-increasing`, `rank-decreasing`.
    pub reasons: Vec<String>,
}

fn pad_pair(p: &Dist, pprime: &Dist) -> Result<(Dist, Dist)> {
    let len = p.len().max(pprime.len());
    Ok((p.padded(len)?, pprime.padded(len)?))
}

/// Evaluates the permutation-equivalence, entropy and rank conditions.
pub fn check_necessary(p: &Dist, pprime: &Dist) -> Result<NecessityReport> {
    let (p, pprime) = pad_pair(p, pprime)?;
    let permutation_equivalent = dist::is_permutation_equivalent(p.weights(), pprime.weights());
    let entropy_ok = entropy::compare_shannon_with_tolerance(
        p.weights(),
        pprime.weights(),
        EXACT_ENTROPY_GAP,
    )? == Ordering::Less;
    let rank_p = p.rank();
    let rank_pprime = pprime.rank();
    let rank_ok = rank_p <= rank_pprime;
    let entropy_p = entropy::shannon(p.weights());
    let entropy_pprime = entropy::shannon(pprime.weights());
    let mut reasons = Vec::new();
    if permutation_equivalent {
        reasons.push("permutation-equivalent".to_string());
    }
    if !entropy_ok {
        reasons.push("entropy-not-increasing".to_string());
    }
    if !rank_ok {
        reasons.push("rank-decreasing".to_string());
    }
    Ok(NecessityReport {
        permutation_equivalent,
        entropy_ok,
        rank_ok,
        entropy_p,
        entropy_pprime,
        rank_p,
        rank_pprime,
        possible: reasons.is_empty(),
        reasons,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Lemma1Outcome {
    Certificate {
        n: usize,
        /// Alphabet size the LP scan ran on.
        reduced_dimension: usize,
        certificate: Box<SnCertificate>,
    },
    Impossible { report: NecessityReport },
    Exhausted { n_max: usize, reduced_dimension: usize },
}

/// Relabels `p` so its support lies inside that of `p'` and drops the
/// outcomes outside `supp(p')`. Returns the reduced pair and, for each
/// reduced symbol, its position in the original alphabet.
pub fn reduce_to_support(p: &Dist, pprime: &Dist) -> Result<(Dist, Dist, Vec<usize>, Dist)> {
    if p.rank() > pprime.rank() {
        return Err(Error::pre("rank(p) > rank(p') leaves no support embedding"));
    }
    let keep: Vec<usize> = (0..pprime.len())
        .filter(|&i| !pprime.weights()[i].is_zero())
        .collect();
    // nonzero weights of p, largest first, go to the kept positions
    let mut relabeled = vec![Rational::zero(); p.len()];
    for (slot, w) in keep.iter().zip(dist::sorted_desc(p.weights())) {
        relabeled[*slot] = w;
    }
    let relabeled = Dist::new(relabeled)?;
    let rp = Dist::new(keep.iter().map(|&i| relabeled.weights()[i].clone()).collect())?;
    let rq = Dist::new(keep.iter().map(|&i| pprime.weights()[i].clone()).collect())?;
    Ok((rp, rq, keep, relabeled))
}

/// Embeds a state on `[d']^n` into `[d]^n` through `keep`.
fn lift_state(sigma: &JointDist, keep: &[usize], d: usize) -> Result<JointDist> {
    let n = sigma.subsystems();
    let mut weights = vec![Rational::zero(); d.pow(n as u32)];
    for (flat, w) in sigma.weights().iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let idx = sigma.multi_index(flat);
        let target = idx.iter().fold(0usize, |acc, &a| acc * d + keep[a]);
        weights[target] = w.clone();
    }
    JointDist::new(vec![d; n], weights)
}

/// Gate, support reduction, and the upward scan for the first `n` with
/// `p' in S_n(p)`.
pub fn run_lemma1(p: &Dist, pprime: &Dist, n_max: usize, opts: &SnOptions) -> Result<Lemma1Outcome> {
    let report = check_necessary(p, pprime)?;
    if !report.possible {
        return Ok(Lemma1Outcome::Impossible { report });
    }
    let (p, pprime) = pad_pair(p, pprime)?;
    let (rp, rq, keep, _) = reduce_to_support(&p, &pprime)?;
    let reduced_dimension = rq.len();
    match sn::find_min_n(&rp, &rq, n_max, opts)? {
        MinNResult::Found { n, certificate } => {
            let certificate = if reduced_dimension == p.len() {
                // the relabeling is a permutation of p; rebuild against p itself
                SnCertificate::build(&p, &pprime, certificate.sigma, &opts.limits)?
            } else {
                let sigma = lift_state(&certificate.sigma, &keep, p.len())?;
                SnCertificate::build(&p, &pprime, sigma, &opts.limits)?
            };
            Ok(Lemma1Outcome::Certificate {
                n,
                reduced_dimension,
                certificate: Box::new(certificate),
            })
        }
        MinNResult::Exhausted { n_max } => Ok(Lemma1Outcome::Exhausted {
            n_max,
            reduced_dimension,
        }),
    }
}

/// `q_C = (1/n) sum_k sigma_k (x) e_k (x) u_M` with
/// `sigma_k = marginal(rho'_n, slots 1..k-1) (x) p^{(x)(n-k)}`, over the
/// shape `[d; n-1] + [n, m]`.
pub fn clock_catalyst(cert: &SnCertificate, m: usize, limits: &Limits) -> Result<JointDist> {
    if m == 0 {
        return Err(Error::arg("register size must be at least 1"));
    }
    let n = cert.n;
    let d = cert.p.len();
    let slots = n - 1;
    let slot_count = limits.outcome_count(d, slots)?;
    let total = slot_count as u128 * n as u128 * m as u128;
    limits.check_outcomes(total)?;
    let scale = Rational::one() / rational::int((n * m) as i64);
    let mut weights = Vec::with_capacity(total as usize);
    let mut blocks = Vec::with_capacity(n);
    for k in 1..=n {
        let head: Vec<usize> = (0..k - 1).collect();
        let head = if head.is_empty() {
            None
        } else {
            Some(cert.rho_prime_n.marginal(&head)?)
        };
        let tail = if n > k {
            Some(tensor_power_capped(&cert.p, n - k, limits)?)
        } else {
            None
        };
        let sigma: Vec<Rational> = match (head, tail) {
            (Some(h), Some(t)) => h.tensor(&t, limits)?.weights().to_vec(),
            (Some(h), None) => h.weights().to_vec(),
            (None, Some(t)) => t.weights().to_vec(),
            (None, None) => vec![Rational::one()],
        };
        blocks.push(sigma);
    }
    for x in 0..slot_count {
        for block in &blocks {
            let w = &block[x] * &scale;
            for _ in 0..m {
                weights.push(w.clone());
            }
        }
    }
    let mut shape = vec![d; slots];
    shape.push(n);
    shape.push(m);
    JointDist::new(shape, weights)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalRecord {
    pub name: String,
    #[serde(with = "rational::serde_rational_vec")]
    pub expected: Vec<Rational>,
    #[serde(with = "rational::serde_rational_vec")]
    pub actual: Vec<Rational>,
    pub equal: bool,
}

/// A catalyst `q` and a permutation of `[d] x supp-space(q)` taking
/// `p (x) q` to a joint state with marginals `p'` and `q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalystSolution {
    pub p: Dist,
    pub pprime: Dist,
    pub n: usize,
    pub register: usize,
    pub catalyst: JointDist,
    /// `bijection[s * K + c] = s' * K + c'` with `K` catalyst outcomes.
    pub bijection: Vec<usize>,
    pub checks: Vec<MarginalRecord>,
    pub mutual_information: f64,
}

impl CatalystSolution {
    fn assemble(
        p: &Dist,
        pprime: &Dist,
        n: usize,
        register: usize,
        catalyst: JointDist,
        bijection: Vec<usize>,
    ) -> Result<Self> {
        let mut sol = CatalystSolution {
            p: p.clone(),
            pprime: pprime.clone(),
            n,
            register,
            catalyst,
            bijection,
            checks: Vec::new(),
            mutual_information: 0.0,
        };
        let final_state = sol.final_state()?;
        sol.checks = marginal_records(&final_state, &sol.catalyst, pprime);
        sol.mutual_information = mutual_information(&final_state);
        Ok(sol)
    }

    /// Pushforward of `p (x) q` under the bijection, laid out as `[d] + shape(q)`.
    pub fn final_state(&self) -> Result<JointDist> {
        let d = self.p.len();
        let k = self.catalyst.len();
        if self.bijection.len() != d * k {
            return Err(Error::arg(format!(
                "bijection has {} entries, expected {}",
                self.bijection.len(),
                d * k
            )));
        }
        let mut seen = vec![false; d * k];
        let mut out = vec![Rational::zero(); d * k];
        for (src, &dst) in self.bijection.iter().enumerate() {
            if dst >= d * k || seen[dst] {
                return Err(Error::arg("index array is not a permutation"));
            }
            seen[dst] = true;
            out[dst] = &self.p.weights()[src / k] * &self.catalyst.weights()[src % k];
        }
        let mut shape = vec![d];
        shape.extend_from_slice(self.catalyst.shape());
        JointDist::new(shape, out)
    }

    /// Recomputes every claim exactly.
    pub fn verify(&self) -> Result<VerificationReport> {
        let mut problems = Vec::new();
        if self.p.len() != self.pprime.len() {
            problems.push("p and p' have different alphabet sizes".to_string());
            return Ok(VerificationReport::from_problems(problems));
        }
        let final_state = match self.final_state() {
            Ok(s) => s,
            Err(e) => {
                problems.push(e.to_string());
                return Ok(VerificationReport::from_problems(problems));
            }
        };
        let records = marginal_records(&final_state, &self.catalyst, &self.pprime);
        for r in &records {
            if !r.equal {
                problems.push(format!("{} marginal differs", r.name));
            }
        }
        if records != self.checks {
            problems.push("recorded marginal checks do not match recomputation".into());
        }
        Ok(VerificationReport::from_problems(problems))
    }
}

fn marginal_records(final_state: &JointDist, catalyst: &JointDist, pprime: &Dist) -> Vec<MarginalRecord> {
    let k = catalyst.len();
    let d = pprime.len();
    let w = final_state.weights();
    let system: Vec<Rational> = (0..d).map(|s| w[s * k..(s + 1) * k].iter().sum()).collect();
    let cat: Vec<Rational> = (0..k).map(|c| (0..d).map(|s| &w[s * k + c]).sum()).collect();
    vec![
        MarginalRecord {
            name: "system".into(),
            equal: system == pprime.weights(),
            expected: pprime.weights().to_vec(),
            actual: system,
        },
        MarginalRecord {
            name: "catalyst".into(),
            equal: cat == catalyst.weights(),
            expected: catalyst.weights().to_vec(),
            actual: cat,
        },
    ]
}

/// `I(S:C)` of a system-first joint state.
fn mutual_information(final_state: &JointDist) -> f64 {
    let d = final_state.shape()[0];
    let k = final_state.len() / d;
    let w = final_state.weights();
    let system: Vec<Rational> = (0..d).map(|s| w[s * k..(s + 1) * k].iter().sum()).collect();
    let cat: Vec<Rational> = (0..k).map(|c| (0..d).map(|s| &w[s * k + c]).sum()).collect();
    entropy::shannon(&system) + entropy::shannon(&cat) - entropy::shannon(w)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutualInformationReport {
    pub system_entropy: f64,
    pub catalyst_entropy: f64,
    pub joint_entropy: f64,
    pub mutual_information: f64,
    /// `H(p') - H(p)`
    pub expected: f64,
    pub difference: f64,
    pub within_tolerance: bool,
    /// The joint weights are a rearrangement of those of `p (x) q`.
    pub weights_preserved: bool,
}

pub const MUTUAL_INFORMATION_TOLERANCE: f64 = 1.0 / (1u64 << 35) as f64;

pub fn mutual_information_check(sol: &CatalystSolution) -> Result<MutualInformationReport> {
    let report = sol.verify()?;
    if !report.valid {
        return Err(Error::pre(format!("solution fails verification: {:?}", report.problems)));
    }
    let final_state = sol.final_state()?;
    let d = sol.p.len();
    let k = sol.catalyst.len();
    let w = final_state.weights();
    let system: Vec<Rational> = (0..d).map(|s| w[s * k..(s + 1) * k].iter().sum()).collect();
    let cat: Vec<Rational> = (0..k).map(|c| (0..d).map(|s| &w[s * k + c]).sum()).collect();
    let system_entropy = entropy::shannon(&system);
    let catalyst_entropy = entropy::shannon(&cat);
    let joint_entropy = entropy::shannon(w);
    let mutual_information = system_entropy + catalyst_entropy - joint_entropy;
    let expected = entropy::shannon(sol.pprime.weights()) - entropy::shannon(sol.p.weights());
    let product: Vec<Rational> = sol
        .p
        .weights()
        .iter()
        .flat_map(|a| sol.catalyst.weights().iter().map(move |b| a * b))
        .collect();
    let difference = (mutual_information - expected).abs();
    Ok(MutualInformationReport {
        system_entropy,
        catalyst_entropy,
        joint_entropy,
        mutual_information,
        expected,
        difference,
        within_tolerance: difference <= MUTUAL_INFORMATION_TOLERANCE,
        weights_preserved: dist::sorted_desc(&product) == dist::sorted_desc(w),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalystSearchOptions {
    pub schedule: Vec<usize>,
    /// Branch-and-bound nodes (LP solves) per register size.
    pub node_budget: u64,
    /// Scan register sizes in ascending order and stop at the first
    /// success. When false every size is attempted concurrently.
    pub stop_at_first: bool,
    pub limits: Limits,
}

impl Default for CatalystSearchOptions {
    fn default() -> Self {
        CatalystSearchOptions {
            schedule: vec![1, 2, 3, 4, 6, 12],
            node_budget: 2_000,
            stop_at_first: true,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStatus {
    Found,
    RelaxationInfeasible,
    /// The search space was exhausted without a solution.
    NoAssignment,
    BudgetExhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalystAttempt {
    pub register: usize,
    pub catalyst_outcomes: usize,
    pub status: AttemptStatus,
    pub nodes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalystSearchReport {
    pub attempts: Vec<CatalystAttempt>,
    /// Solution for the smallest register size that worked.
    pub solution: Option<CatalystSolution>,
}

/// Tries register sizes of the schedule and keeps the smallest that admits
/// an exact bijection.
pub fn catalyst_search(
    p: &Dist,
    pprime: &Dist,
    cert: &SnCertificate,
    opts: &CatalystSearchOptions,
) -> Result<CatalystSearchReport> {
    if &cert.p != p || &cert.pprime != pprime {
        return Err(Error::pre("certificate was issued for a different pair"));
    }
    let report = cert.verify(&opts.limits)?;
    if !report.valid {
        return Err(Error::pre(format!("certificate is invalid: {:?}", report.problems)));
    }
    let mut schedule = opts.schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();
    let attempt = |m: usize| -> Result<(CatalystAttempt, Option<CatalystSolution>)> {
        let catalyst = clock_catalyst(cert, m, &opts.limits)?;
        let (status, nodes, bijection) =
            search_bijection(p, pprime, &catalyst, opts.node_budget, &opts.limits)?;
        let attempt = CatalystAttempt {
            register: m,
            catalyst_outcomes: catalyst.len(),
            status,
            nodes,
        };
        let solution = match bijection {
            Some(b) => {
                let sol = CatalystSolution::assemble(p, pprime, cert.n, m, catalyst, b)?;
                if !sol.verify()?.valid {
                    return Err(Error::Internal("search produced an invalid bijection".into()));
                }
                Some(sol)
            }
            None => None,
        };
        Ok((attempt, solution))
    };
    let mut attempts = Vec::new();
    let mut solution = None;
    if opts.stop_at_first {
        for &m in &schedule {
            let (a, sol) = attempt(m)?;
            attempts.push(a);
            if sol.is_some() {
                solution = sol;
                break;
            }
        }
    } else {
        let results = schedule
            .par_iter()
            .map(|&m| attempt(m))
            .collect::<Result<Vec<_>>>()?;
        for (a, sol) in results {
            attempts.push(a);
            if solution.is_none() {
                solution = sol;
            }
        }
    }
    Ok(CatalystSearchReport { attempts, solution })
}

/// Distinct values of `p (x) q` with the source cells holding each value.
fn value_classes(p: &Dist, q: &JointDist) -> Vec<(Rational, Vec<usize>)> {
    let k = q.len();
    let mut map: BTreeMap<Rational, Vec<usize>> = BTreeMap::new();
    for (s, a) in p.weights().iter().enumerate() {
        for (c, b) in q.weights().iter().enumerate() {
            map.entry(a * b).or_default().push(s * k + c);
        }
    }
    // largest first
    map.into_iter().rev().collect()
}

/// LP over class counts: `x[v][g][s]` items of value `v` in column `s` of
/// row class `g`.
fn relaxation_feasible(
    values: &[(Rational, usize)],
    row_classes: &[(Rational, usize)],
    pprime: &Dist,
    limits: &Limits,
) -> Result<bool> {
    let d = pprime.len();
    let nv = values.len();
    let ng = row_classes.len();
    let var = |v: usize, g: usize, s: usize| (v * ng + g) * d + s;
    let mut lp = LinearProgram::new(nv * ng * d);
    for (v, (_, count)) in values.iter().enumerate() {
        let terms: Vec<_> = (0..ng)
            .flat_map(|g| (0..d).map(move |s| (var(v, g, s), Rational::one())))
            .collect();
        lp.add_constraint(terms, Relation::Eq, rational::int(*count as i64));
    }
    for (g, (q, size)) in row_classes.iter().enumerate() {
        for s in 0..d {
            let terms: Vec<_> = (0..nv).map(|v| (var(v, g, s), Rational::one())).collect();
            lp.add_constraint(terms, Relation::Eq, rational::int(*size as i64));
        }
        let terms: Vec<_> = (0..nv)
            .flat_map(|v| (0..d).map(move |s| (var(v, g, s), values[v].0.clone())))
            .collect();
        lp.add_constraint(terms, Relation::Eq, q * rational::int(*size as i64));
    }
    for s in 0..d {
        let terms: Vec<_> = (0..nv)
            .flat_map(|v| (0..ng).map(move |g| (var(v, g, s), values[v].0.clone())))
            .collect();
        lp.add_constraint(terms, Relation::Eq, pprime.weights()[s].clone());
    }
    let opts = SimplexOptions {
        max_pivots: limits.max_pivots,
        dump_tableau: false,
    };
    Ok(lp::solve_with(&lp, &opts)?.outcome.is_feasible())
}

/// Ordered `d`-tuples of value indices summing to `target`, with entry `s`
/// at most `caps[s]`.
fn row_patterns(
    values: &[Rational],
    counts: &[usize],
    caps: &[Rational],
    target: &Rational,
    limit: usize,
) -> Option<Vec<Vec<usize>>> {
    fn rec(
        values: &[Rational],
        counts: &mut [usize],
        caps: &[Rational],
        rem: &Rational,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> bool {
        let col = cur.len();
        if col == caps.len() {
            if rem.is_zero() {
                if out.len() == limit {
                    return false;
                }
                out.push(cur.clone());
            }
            return true;
        }
        let left = caps.len() - col - 1;
        for v in 0..values.len() {
            let val = &values[v];
            if counts[v] == 0 || val > rem || val > &caps[col] {
                continue;
            }
            if left == 0 && val != rem {
                continue;
            }
            // the other cells can hold at most `left` copies of the largest value
            if rem - val > &values[0] * rational::int(left as i64) {
                continue;
            }
            counts[v] -= 1;
            cur.push(v);
            let ok = rec(values, counts, caps, &(rem - val), cur, out, limit);
            cur.pop();
            counts[v] += 1;
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    let mut counts = counts.to_vec();
    rec(values, &mut counts, caps, target, &mut Vec::new(), &mut out, limit).then_some(out)
}

/// Upper bound on row patterns per search.
const MAX_PATTERNS: usize = 50_000;

enum Step {
    Found(Vec<Rational>),
    Fail,
    Budget,
}

struct PatternSearch {
    base: LinearProgram,
    opts: SimplexOptions,
    nodes: u64,
    budget: u64,
}

impl PatternSearch {
    /// Depth-first branch-and-bound on the first fractional variable; the
    /// branch nearer to the LP value goes first.
    fn branch(&mut self, bounds: &mut Vec<(usize, Relation, Rational)>) -> Result<Step> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Ok(Step::Budget);
        }
        let mut lp = self.base.clone();
        for (var, rel, rhs) in bounds.iter() {
            lp.add_constraint([(*var, Rational::one())], *rel, rhs.clone());
        }
        let outcome = lp::solve_with(&lp, &self.opts)?.outcome;
        let Some(point) = outcome.point() else {
            return Ok(Step::Fail);
        };
        let Some((var, x)) = point.iter().enumerate().find(|(_, x)| !x.is_integer()) else {
            return Ok(Step::Found(point.to_vec()));
        };
        let floor = x.floor();
        let ceil = x.ceil();
        let mut children = [(Relation::Le, floor.clone()), (Relation::Ge, ceil.clone())];
        if x - &floor > &ceil - x {
            children.swap(0, 1);
        }
        for (rel, rhs) in children {
            bounds.push((var, rel, rhs));
            let step = self.branch(bounds)?;
            bounds.pop();
            match step {
                Step::Fail => {}
                other => return Ok(other),
            }
        }
        Ok(Step::Fail)
    }
}

/// Looks for a bijection taking `p (x) q` to a state with marginals
/// `p'` and `q`.
///
/// Rows (catalyst outcomes) with equal targets are interchangeable, as are
/// source cells of equal value, so a solution is a choice of how many rows
/// of each target class use each ordered pattern of values. That integer
/// program is solved by exact LP branch-and-bound.
fn search_bijection(
    p: &Dist,
    pprime: &Dist,
    q: &JointDist,
    budget: u64,
    limits: &Limits,
) -> Result<(AttemptStatus, u64, Option<Vec<usize>>)> {
    let d = p.len();
    let k = q.len();
    let classes = value_classes(p, q);
    let values: Vec<Rational> = classes.iter().map(|(v, _)| v.clone()).collect();
    let counts: Vec<usize> = classes.iter().map(|(_, cells)| cells.len()).collect();

    let mut row_classes: Vec<(Rational, Vec<usize>)> = Vec::new();
    for (c, w) in q.weights().iter().enumerate() {
        match row_classes.iter_mut().find(|(v, _)| v == w) {
            Some((_, rows)) => rows.push(c),
            None => row_classes.push((w.clone(), vec![c])),
        }
    }
    let sized: Vec<(Rational, usize)> =
        row_classes.iter().map(|(v, rows)| (v.clone(), rows.len())).collect();
    let value_counts: Vec<(Rational, usize)> =
        values.iter().cloned().zip(counts.iter().copied()).collect();
    if !relaxation_feasible(&value_counts, &sized, pprime, limits)? {
        return Ok((AttemptStatus::RelaxationInfeasible, 0, None));
    }

    let mut patterns: Vec<(usize, Vec<usize>)> = Vec::new();
    for (g, (target, _)) in row_classes.iter().enumerate() {
        let left = MAX_PATTERNS - patterns.len();
        let Some(found) = row_patterns(&values, &counts, pprime.weights(), target, left) else {
            return Ok((AttemptStatus::BudgetExhausted, 0, None));
        };
        if found.is_empty() {
            return Ok((AttemptStatus::NoAssignment, 0, None));
        }
        patterns.extend(found.into_iter().map(|t| (g, t)));
    }

    let mut base = LinearProgram::new(patterns.len());
    for (g, (_, rows)) in row_classes.iter().enumerate() {
        let terms: Vec<_> = patterns
            .iter()
            .enumerate()
            .filter(|(_, (pg, _))| *pg == g)
            .map(|(i, _)| (i, Rational::one()))
            .collect();
        base.add_constraint(terms, Relation::Eq, rational::int(rows.len() as i64));
    }
    for (v, count) in counts.iter().enumerate() {
        let terms: Vec<_> = patterns
            .iter()
            .enumerate()
            .filter_map(|(i, (_, t))| {
                let uses = t.iter().filter(|&&x| x == v).count();
                (uses > 0).then(|| (i, rational::int(uses as i64)))
            })
            .collect();
        base.add_constraint(terms, Relation::Eq, rational::int(*count as i64));
    }
    for s in 0..d {
        let terms: Vec<_> = patterns
            .iter()
            .enumerate()
            .filter(|(_, (_, t))| !values[t[s]].is_zero())
            .map(|(i, (_, t))| (i, values[t[s]].clone()))
            .collect();
        base.add_constraint(terms, Relation::Eq, pprime.weights()[s].clone());
    }
    let mut search = PatternSearch {
        base,
        opts: SimplexOptions {
            max_pivots: limits.max_pivots,
            dump_tableau: false,
        },
        nodes: 0,
        budget,
    };
    let usage = match search.branch(&mut Vec::new())? {
        Step::Found(x) => x,
        Step::Fail => return Ok((AttemptStatus::NoAssignment, search.nodes, None)),
        Step::Budget => return Ok((AttemptStatus::BudgetExhausted, search.nodes, None)),
    };

    // hand out rows to patterns, then source cells of each value in order
    let mut pools: Vec<std::vec::IntoIter<usize>> =
        classes.into_iter().map(|(_, cells)| cells.into_iter()).collect();
    let mut free_rows: Vec<std::vec::IntoIter<usize>> = row_classes
        .into_iter()
        .map(|(_, rows)| rows.into_iter())
        .collect();
    let mut bijection = vec![usize::MAX; d * k];
    for ((g, pattern), times) in patterns.iter().zip(&usage) {
        let times = times.to_integer().to_usize().unwrap_or(0);
        for _ in 0..times {
            let c = free_rows[*g].next().expect("class sizes match the LP");
            for (s, &v) in pattern.iter().enumerate() {
                let src = pools[v].next().expect("value counts match the LP");
                bijection[src] = s * k + c;
            }
        }
    }
    Ok((AttemptStatus::Found, search.nodes, Some(bijection)))
}
