//! Distances to H-polytopes and the ball-coverage implication: if every
//! point of an open ball `B_y(delta)` lies within `eps < delta/2` of a convex
//! set `C`, then `y` is in `C`.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::{self, Rational};
use crate::sn::{self, SnMembershipProblem, SnOptions};

const ACTIVE_SET_MAX_ITERS: usize = 500;
const KKT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    L1,
    /// half the L1 norm
    Trace,
}

/// `{x : A x <= b}` over `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
}

impl Polytope {
    pub fn new(dim: usize, rows: Vec<Vec<Rational>>, rhs: Vec<Rational>) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(Error::arg("row and right-hand-side counts differ"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::arg(format!("row of length {} in dimension {dim}", r.len())));
        }
        Ok(Polytope { dim, rows, rhs })
    }

    /// `{x : a . x <= b}`.
    pub fn halfspace(a: Vec<Rational>, b: Rational) -> Result<Self> {
        Polytope::new(a.len(), vec![a], vec![b])
    }

    /// The probability simplex written as inequalities.
    pub fn simplex(dim: usize) -> Self {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..dim {
            let mut r = vec![Rational::zero(); dim];
            r[i] = -Rational::one();
            rows.push(r);
            rhs.push(Rational::zero());
        }
        rows.push(vec![Rational::one(); dim]);
        rhs.push(Rational::one());
        rows.push(vec![-Rational::one(); dim]);
        rhs.push(-Rational::one());
        Polytope { dim, rows, rhs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim
            && self
                .rows
                .iter()
                .zip(&self.rhs)
                .all(|(a, b)| dot(a, x) <= *b)
    }

    /// Membership of a fixed point as an LP, so a non-member comes with a
    /// Farkas certificate.
    pub fn membership_lp(&self, x: &[Rational]) -> Result<LpOutcome> {
        self.check_dim(x.len())?;
        let mut lp = self.variable_lp();
        for (i, xi) in x.iter().enumerate() {
            lp.add_constraint([(i, Rational::one())], Relation::Eq, xi.clone());
        }
        lp::solve(&lp)
    }

    pub fn feasible_point(&self) -> Result<Option<Vec<Rational>>> {
        Ok(lp::solve(&self.variable_lp())?.point().map(|p| p.to_vec()))
    }

    /// Largest Euclidean ball around `y` inside every halfspace; negative
    /// when `y` violates some row.
    pub fn interior_radius(&self, y: &[Rational]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| rational::to_f64(&(b - dot(a, y))) / norm2(&to_f64s(a)))
            .fold(f64::INFINITY, f64::min)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::arg(format!(
                "point of dimension {len} against a polytope in dimension {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// LP over free variables `0..dim` constrained to the polytope.
    fn variable_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim);
        for i in 0..self.dim {
            lp.set_free(i);
        }
        for (a, b) in self.rows.iter().zip(&self.rhs) {
            lp.add_dense(a, Relation::Le, b.clone());
        }
        lp
    }

    fn to_float(&self) -> FloatPolytope {
        FloatPolytope {
            rows: self.rows.iter().map(|r| to_f64s(r)).collect(),
            rhs: to_f64s(&self.rhs),
        }
    }
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

fn to_f64s(v: &[Rational]) -> Vec<f64> {
    v.iter().map(rational::to_f64).collect()
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dotf(a, a).sqrt()
}

#[derive(Debug, Clone)]
struct FloatPolytope {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

/// Solves `G x = r` by Gaussian elimination with partial pivoting.
fn solve_dense(mut g: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))?;
        if g[piv][col].abs() < 1e-13 {
            return None;
        }
        g.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = g[row][col] / g[col][col];
            for k in col..n {
                g[row][k] -= f * g[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| g[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / g[i][i];
    }
    Some(x)
}

/// Orthogonal projection of `g` onto `{p : a_i . p = 0, i in set}` and the
/// multipliers with `g = p + sum lambda_i a_i`.
fn project_null(rows: &[Vec<f64>], set: &[usize], g: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let gram = set
        .iter()
        .map(|&i| set.iter().map(|&j| dotf(&rows[i], &rows[j])).collect())
        .collect();
    let rhs = set.iter().map(|&i| dotf(&rows[i], g)).collect();
    let lambda = solve_dense(gram, rhs)?;
    let mut p = g.to_vec();
    for (l, &i) in lambda.iter().zip(set) {
        for (pk, ak) in p.iter_mut().zip(&rows[i]) {
            *pk -= l * ak;
        }
    }
    Some((p, lambda))
}

impl FloatPolytope {
    /// Primal active-set method for `min |z - x|^2` from a feasible start.
    fn project_active_set(&self, x: &[f64], start: &[f64]) -> Option<Vec<f64>> {
        let mut z = start.to_vec();
        let mut work: Vec<usize> = Vec::new();
        let scale = 1.0 + norm2(x);
        for _ in 0..ACTIVE_SET_MAX_ITERS {
            let g: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
            let (p, lambda) = project_null(&self.rows, &work, &g)?;
            if norm2(&p) <= KKT_TOL * scale {
                match lambda
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                {
                    Some((k, &l)) if l < -KKT_TOL * scale => {
                        work.remove(k);
                    }
                    _ => return Some(z),
                }
                continue;
            }
            let mut alpha = 1.0;
            let mut block = None;
            for (i, (a, b)) in self.rows.iter().zip(&self.rhs).enumerate() {
                if work.contains(&i) {
                    continue;
                }
                let ap = dotf(a, &p);
                if ap > 1e-15 {
                    let s = ((b - dotf(a, &z)) / ap).max(0.0);
                    if s < alpha {
                        alpha = s;
                        block = Some(i);
                    }
                }
            }
            for (zk, pk) in z.iter_mut().zip(&p) {
                *zk += alpha * pk;
            }
            if let Some(i) = block {
                work.push(i);
            }
        }
        None
    }

    /// Projection by trying every active set of size at most `dim`.
    fn project_enumerate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let dim = x.len();
        let m = self.rows.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut set = Vec::new();
        fn rec(
            poly: &FloatPolytope,
            x: &[f64],
            start: usize,
            set: &mut Vec<usize>,
            dim: usize,
            m: usize,
            best: &mut Option<(f64, Vec<f64>)>,
        ) {
            // point on the affine hull of `set` closest to x
            let shift: Vec<f64> = set
                .iter()
                .map(|&i| poly.rhs[i] - dotf(&poly.rows[i], x))
                .collect();
            let gram = set
                .iter()
                .map(|&i| set.iter().map(|&j| dotf(&poly.rows[i], &poly.rows[j])).collect())
                .collect();
            if let Some(mu) = solve_dense(gram, shift) {
                let mut z = x.to_vec();
                for (mu, &i) in mu.iter().zip(set.iter()) {
                    for (zk, ak) in z.iter_mut().zip(&poly.rows[i]) {
                        *zk += mu * ak;
                    }
                }
                let feasible = poly
                    .rows
                    .iter()
                    .zip(&poly.rhs)
                    .all(|(a, b)| dotf(a, &z) <= b + 1e-9 * (1.0 + b.abs()));
                if feasible {
                    let diff: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
                    let dist = norm2(&diff);
                    if best.as_ref().map_or(true, |(d, _)| dist < *d) {
                        *best = Some((dist, z));
                    }
                }
            }
            if set.len() == dim {
                return;
            }
            for i in start..m {
                set.push(i);
                rec(poly, x, i + 1, set, dim, m, best);
                set.pop();
            }
        }
        rec(self, x, 0, &mut set, dim, m, &mut best);
        best.map(|(_, z)| z)
    }

    fn project(&self, x: &[f64], start: &[f64]) -> Result<Vec<f64>> {
        self.project_active_set(x, start)
            .or_else(|| self.project_enumerate(x))
            .ok_or_else(|| Error::Internal("Euclidean projection did not converge".into()))
    }

    fn distance(&self, x: &[f64], start: &[f64]) -> Result<f64> {
        let z = self.project(x, start)?;
        Ok(x.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceReport {
    pub norm: Norm,
    pub value: f64,
    /// Exact value for the L1 and trace norms.
    #[serde(with = "rational::serde_rational_opt")]
    pub exact: Option<Rational>,
    /// Certified lower bound from a supporting hyperplane (Euclidean only).
    pub lower_bound: Option<f64>,
    pub nearest: Vec<f64>,
}

/// Distance from `x` to `c` in the given norm.
pub fn distance_to_polytope(x: &[Rational], c: &Polytope, norm: Norm) -> Result<DistanceReport> {
    c.check_dim(x.len())?;
    let start = c
        .feasible_point()?
        .ok_or_else(|| Error::pre("distance to an empty polytope is undefined"))?;
    match norm {
        Norm::Euclidean => {
            let xf = to_f64s(x);
            let fp = c.to_float();
            let nearest = fp.project(&xf, &to_f64s(&start))?;
            let normal: Vec<f64> = xf.iter().zip(&nearest).map(|(a, b)| a - b).collect();
            let value = norm2(&normal);
            let lower_bound = if value == 0.0 {
                Some(0.0)
            } else {
                supporting_lower_bound(x, c, &normal)?
            };
            Ok(DistanceReport {
                norm,
                value,
                exact: None,
                lower_bound,
                nearest,
            })
        }
        Norm::L1 | Norm::Trace => {
            let (l1, nearest) = l1_distance(x, c)?;
            let exact = if norm == Norm::Trace {
                l1 / rational::int(2)
            } else {
                l1
            };
            Ok(DistanceReport {
                norm,
                value: rational::to_f64(&exact),
                exact: Some(exact),
                lower_bound: None,
                nearest: to_f64s(&nearest),
            })
        }
    }
}

/// `(u . x - max_{z in C} u . z) / |u|` for a rounded normal `u`.
fn supporting_lower_bound(x: &[Rational], c: &Polytope, normal: &[f64]) -> Result<Option<f64>> {
    let scale = 1.0 / normal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let u: Vec<Rational> = normal
        .iter()
        .map(|v| rational::rat((v * scale * 1048576.0).round() as i64, 1048576))
        .collect();
    let mut lp = c.variable_lp();
    lp.set_objective(
        Sense::Maximize,
        u.iter().enumerate().map(|(i, a)| (i, a.clone())),
    );
    match lp::solve(&lp)? {
        LpOutcome::Optimal { value, .. } => {
            let gap = rational::to_f64(&(dot(&u, x) - value));
            Ok(Some((gap / norm2(&to_f64s(&u))).max(0.0)))
        }
        _ => Ok(None),
    }
}

/// Exact L1 distance and a nearest point.
fn l1_distance(x: &[Rational], c: &Polytope) -> Result<(Rational, Vec<Rational>)> {
    let m = c.dim;
    let mut lp = c.variable_lp();
    let mut objective = Vec::new();
    for (i, xi) in x.iter().enumerate() {
        let u = lp.add_var();
        let v = lp.add_var();
        // z_i - u_i + v_i = x_i
        lp.add_constraint(
            [(i, Rational::one()), (u, -Rational::one()), (v, Rational::one())],
            Relation::Eq,
            xi.clone(),
        );
        objective.push((u, Rational::one()));
        objective.push((v, Rational::one()));
    }
    lp.set_objective(Sense::Minimize, objective);
    match lp::solve(&lp)? {
        LpOutcome::Optimal { point, value } => Ok((value, point[..m].to_vec())),
        LpOutcome::Infeasible { .. } => Err(Error::pre("distance to an empty polytope is undefined")),
        other => Err(Error::Internal(format!("L1 distance LP returned {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    #[serde(with = "rational::serde_rational_vec")]
    pub center: Vec<Rational>,
    #[serde(with = "rational::serde_rational")]
    pub radius: Rational,
    pub norm: Norm,
}

impl BallSpec {
    pub fn new(center: Vec<Rational>, radius: Rational, norm: Norm) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::arg("ball radius must be positive"));
        }
        Ok(BallSpec { center, radius, norm })
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub hypothesis_holds: bool,
    pub points_checked: usize,
    /// Infinite (written as null) when `C` is empty.
    #[serde(with = "infinite_as_null")]
    pub max_distance: f64,
    /// The sampled point farthest from `C` when it exceeds `eps`.
    pub witness: Option<Vec<f64>>,
    /// LP membership of the center, decided when the hypothesis holds.
    pub center_member: Option<bool>,
    pub conclusion_holds: bool,
}

/// Checks "every point of the ball is within `eps` of `C`" on a sample and,
/// when that holds, that the center lies in `C`.
///
/// Euclidean balls are probed on `sphere_samples` random boundary points,
/// the `2 dim` axis points and the point `y - r (c - y)/|c - y|` opposite the
/// projection `c` of `y`; for `y` outside `C` the latter is at distance more
/// than `r` from `C`. L1 and trace balls are polytopes and the distance is
/// convex, so their vertices settle the hypothesis exactly. An empty `C`
/// fails the hypothesis.
pub fn lemma3_conclusion_check<R: Rng + ?Sized>(
    ball: &BallSpec,
    c: &Polytope,
    eps: &Rational,
    sphere_samples: usize,
    rng: &mut R,
) -> Result<Lemma3Report> {
    c.check_dim(ball.center.len())?;
    if eps.is_negative() || eps * rational::int(2) >= ball.radius {
        return Err(Error::pre("need 0 <= eps < radius/2"));
    }
    let dim = c.dim;
    let Some(start) = c.feasible_point()? else {
        // every point is infinitely far from the empty set
        return Ok(Lemma3Report {
            hypothesis_holds: false,
            points_checked: 0,
            max_distance: f64::INFINITY,
            witness: Some(to_f64s(&ball.center)),
            center_member: None,
            conclusion_holds: true,
        });
    };
    let mut max_distance = 0.0f64;
    let mut witness = None;
    let mut points_checked = 0;
    let mut record = |point: Vec<f64>, dist: f64| {
        points_checked += 1;
        if dist > max_distance {
            max_distance = dist;
            witness = Some(point);
        }
    };
    let epsf = rational::to_f64(eps);
    match ball.norm {
        Norm::Euclidean => {
            let fp = c.to_float();
            let startf = to_f64s(&start);
            let y = to_f64s(&ball.center);
            let r = rational::to_f64(&ball.radius);
            let mut points = Vec::new();
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut x = y.clone();
                    x[i] += s * r;
                    points.push(x);
                }
            }
            while points.len() < 2 * dim + sphere_samples {
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let len = norm2(&v);
                if len > 1e-3 && len <= 1.0 {
                    points.push(y.iter().zip(&v).map(|(a, b)| a + r * b / len).collect());
                }
            }
            if !c.contains(&ball.center) {
                let proj = fp.project(&y, &startf)?;
                let away: Vec<f64> = y.iter().zip(&proj).map(|(a, b)| a - b).collect();
                let len = norm2(&away);
                if len > 0.0 {
                    points.push(y.iter().zip(&away).map(|(a, b)| a + r * b / len).collect());
                }
            }
            for x in points {
                let dist = fp.distance(&x, &startf)?;
                record(x, dist);
            }
        }
        Norm::L1 | Norm::Trace => {
            let reach = if ball.norm == Norm::Trace {
                &ball.radius * rational::int(2)
            } else {
                ball.radius.clone()
            };
            for i in 0..dim {
                for s in [Rational::one(), -Rational::one()] {
                    let mut x = ball.center.clone();
                    x[i] += &s * &reach;
                    let dist = distance_to_polytope(&x, c, ball.norm)?;
                    record(to_f64s(&x), dist.value);
                }
            }
        }
    }
    let hypothesis_holds = max_distance <= epsf;
    let center_member = if hypothesis_holds {
        Some(c.membership_lp(&ball.center)?.is_feasible())
    } else {
        None
    };
    Ok(Lemma3Report {
        hypothesis_holds,
        points_checked,
        max_distance,
        witness: if hypothesis_holds { None } else { witness },
        center_member,
        conclusion_holds: center_member != Some(false),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma3HarnessConfig {
    pub trials: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub seed: u64,
    /// Random sphere points per dimension.
    pub sphere_samples_per_dim: usize,
}

impl Default for Lemma3HarnessConfig {
    fn default() -> Self {
        Lemma3HarnessConfig {
            trials: 10_000,
            min_dim: 2,
            max_dim: 5,
            seed: 0,
            sphere_samples_per_dim: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma3Failure {
    pub trial: usize,
    pub ball: BallSpec,
    #[serde(with = "rational::serde_rational")]
    pub eps: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma3HarnessReport {
    pub trials: usize,
    pub hypothesis_passed: usize,
    pub membership_failures: usize,
    pub failures: Vec<Lemma3Failure>,
}

/// A random instance: center on a 1/16 grid, radius in `[1/8, 1]`, `eps` on
/// a grid below `radius/2`, and 1..=6 halfspaces whose offsets from the
/// center range from slightly negative to well beyond the radius.
pub fn random_lemma3_instance<R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
) -> Result<(BallSpec, Polytope, Rational)> {
    let center: Vec<Rational> = (0..dim)
        .map(|_| rational::rat(rng.gen_range(-32..=32), 16))
        .collect();
    let radius = rational::rat(rng.gen_range(1..=8), 8);
    let eps = &radius / rational::int(2) * rational::rat(rng.gen_range(0..64), 64);
    let delta = rational::to_f64(&radius);
    let facets = rng.gen_range(1..=6);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    while rows.len() < facets {
        let a: Vec<i64> = (0..dim).map(|_| rng.gen_range(-3..=3)).collect();
        if a.iter().all(|&v| v == 0) {
            continue;
        }
        let a: Vec<Rational> = a.into_iter().map(rational::int).collect();
        let offset = rng.gen_range(-0.2..1.5) * delta * norm2(&to_f64s(&a));
        rhs.push(dot(&a, &center) + rational::rat((offset * 1024.0).round() as i64, 1024));
        rows.push(a);
    }
    let poly = Polytope::new(dim, rows, rhs)?;
    Ok((BallSpec::new(center, radius, Norm::Euclidean)?, poly, eps))
}

/// Runs seeded random trials in parallel. Trial `t` draws from stream `t`
/// of a ChaCha generator keyed by the seed, so results do not depend on
/// scheduling.
pub fn lemma3_harness(cfg: &Lemma3HarnessConfig) -> Result<Lemma3HarnessReport> {
    if cfg.min_dim == 0 || cfg.min_dim > cfg.max_dim {
        return Err(Error::arg("need 1 <= min_dim <= max_dim"));
    }
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<(bool, Option<Lemma3Failure>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial as u64);
            let dim = rng.gen_range(cfg.min_dim..=cfg.max_dim);
            let (ball, poly, eps) = random_lemma3_instance(dim, &mut rng)?;
            let report = lemma3_conclusion_check(
                &ball,
                &poly,
                &eps,
                cfg.sphere_samples_per_dim * dim,
                &mut rng,
            )?;
            let failure = (!report.conclusion_holds).then(|| Lemma3Failure { trial, ball, eps });
            Ok((report.hypothesis_holds, failure))
        })
        .collect::<Result<Vec<_>>>()?;
    let hypothesis_passed = outcomes.iter().filter(|(h, _)| *h).count();
    let failures: Vec<Lemma3Failure> = outcomes.into_iter().filter_map(|(_, f)| f).collect();
    Ok(Lemma3HarnessReport {
        trials: cfg.trials,
        hypothesis_passed,
        membership_failures: failures.len(),
        failures,
    })
}

/// A family of convex sets `C_eps` inside a fixed ambient convex set.
pub trait ConvexFamily {
    fn contains(&self, y: &[Rational], eps: &Rational) -> Result<bool>;
    /// Radius of a ball around `y` inside the ambient set.
    fn interior_radius(&self, y: &[Rational]) -> f64;
}

/// `C_eps` given by a polytope generator.
pub struct PolytopeFamily<F> {
    pub generator: F,
    pub ambient: Polytope,
}

impl<F: Fn(&Rational) -> Result<Polytope>> ConvexFamily for PolytopeFamily<F> {
    fn contains(&self, y: &[Rational], eps: &Rational) -> Result<bool> {
        Ok((self.generator)(eps)?.contains(y))
    }

    fn interior_radius(&self, y: &[Rational]) -> f64 {
        self.ambient.interior_radius(y)
    }
}

/// `C_eps = S_{n(eps)}(p)` with `n(eps) = max(1, ceil(log2(1/eps)))`.
pub struct SnFamily {
    pub p: Dist,
    pub max_n: usize,
    pub opts: SnOptions,
}

impl SnFamily {
    pub fn copies(eps: &Rational) -> usize {
        if !eps.is_positive() {
            return usize::MAX;
        }
        let mut n = 0usize;
        let mut scaled = eps.clone();
        while scaled < Rational::one() {
            scaled *= rational::int(2);
            n += 1;
        }
        n.max(1)
    }
}

impl ConvexFamily for SnFamily {
    fn contains(&self, y: &[Rational], eps: &Rational) -> Result<bool> {
        let n = SnFamily::copies(eps);
        if n > self.max_n {
            return Err(Error::Resource(format!(
                "eps {} needs {n} copies, above the cap {}",
                rational::format_rational(eps),
                self.max_n
            )));
        }
        let q = Dist::new(y.to_vec())?;
        let prob = SnMembershipProblem::new(self.p.clone(), q, n, &self.opts.limits)?;
        Ok(sn::sn_member(&prob, &self.opts)?.is_member())
    }

    /// Distance to the boundary of the simplex within its affine hull.
    fn interior_radius(&self, y: &[Rational]) -> f64 {
        let d = y.len() as f64;
        let min = y.iter().map(rational::to_f64).fold(f64::INFINITY, f64::min);
        min / (1.0 - 1.0 / d).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// `y` is a member already at the largest probed `eps`.
    Infinite,
    /// Member at `lower`, not at `upper`.
    Estimate {
        #[serde(with = "rational::serde_rational")]
        lower: Rational,
        #[serde(with = "rational::serde_rational")]
        upper: Rational,
    },
    /// Not a member at any probed `eps` down to `smallest`.
    NotFound {
        #[serde(with = "rational::serde_rational")]
        smallest: Rational,
    },
}

/// Empirical `eps_0` with `y in C_eps` for `eps < eps_0`: halve from
/// `eps_max` until `y` is a member, then bisect `steps` times.
pub fn corollary4_threshold<F: ConvexFamily + ?Sized>(
    y: &[Rational],
    family: &F,
    eps_max: &Rational,
    steps: usize,
) -> Result<Threshold> {
    if family.interior_radius(y) <= 0.0 {
        return Err(Error::pre("y has no interior ball in the ambient set"));
    }
    if !eps_max.is_positive() {
        return Err(Error::arg("eps_max must be positive"));
    }
    if family.contains(y, eps_max)? {
        return Ok(Threshold::Infinite);
    }
    let mut hi = eps_max.clone();
    let mut lo = None;
    for _ in 0..steps {
        let probe = &hi / rational::int(2);
        if family.contains(y, &probe)? {
            lo = Some(probe);
            break;
        }
        hi = probe;
    }
    let Some(mut lo) = lo else {
        return Ok(Threshold::NotFound { smallest: hi });
    };
    for _ in 0..steps {
        let mid = (&lo + &hi) / rational::int(2);
        if family.contains(y, &mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Threshold::Estimate { lower: lo, upper: hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rational::int(x)).collect()
    }

    #[test]
    fn halfspace_distance_in_all_norms() {
        // x_1 >= 1, i.e. -x_1 <= -1
        let c = Polytope::halfspace(ints(&[-1, 0]), rational::int(-1)).unwrap();
        let origin = ints(&[0, 0]);
        let e = distance_to_polytope(&origin, &c, Norm::Euclidean).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!((e.lower_bound.unwrap() - 1.0).abs() < 1e-9);
        let l1 = distance_to_polytope(&origin, &c, Norm::L1).unwrap();
        assert_eq!(l1.exact, Some(rat(1, 1)));
        let tr = distance_to_polytope(&origin, &c, Norm::Trace).unwrap();
        assert_eq!(tr.exact, Some(rat(1, 2)));
        let inside = distance_to_polytope(&ints(&[3, 4]), &c, Norm::Euclidean).unwrap();
        assert_eq!(inside.value, 0.0);
    }

    #[test]
    fn empty_polytope_is_rejected() {
        let c = Polytope::new(1, vec![ints(&[1]), ints(&[-1])], ints(&[0, -1])).unwrap();
        assert!(matches!(
            distance_to_polytope(&ints(&[0]), &c, Norm::L1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn corner_projection() {
        // unit square, point (2, 3) projects to (1, 1)
        let c = Polytope::new(
            2,
            vec![ints(&[1, 0]), ints(&[0, 1]), ints(&[-1, 0]), ints(&[0, -1])],
            ints(&[1, 1, 0, 0]),
        )
        .unwrap();
        let r = distance_to_polytope(&ints(&[2, 3]), &c, Norm::Euclidean).unwrap();
        assert!((r.value - 5f64.sqrt()).abs() < 1e-12);
        assert!(r.lower_bound.unwrap() <= r.value + 1e-12);
        assert!(r.lower_bound.unwrap() >= r.value - 1e-6);
    }

    #[test]
    fn ball_inside_set_passes_with_zero_eps() {
        let square = Polytope::new(
            2,
            vec![ints(&[1, 0]), ints(&[0, 1]), ints(&[-1, 0]), ints(&[0, -1])],
            ints(&[2, 2, 2, 2]),
        )
        .unwrap();
        let ball = BallSpec::new(ints(&[0, 0]), rat(1, 1), Norm::Euclidean).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = lemma3_conclusion_check(&ball, &square, &rat(0, 1), 64, &mut rng).unwrap();
        assert!(r.hypothesis_holds);
        assert_eq!(r.center_member, Some(true));
    }

    #[test]
    fn far_halfspace_fails_at_ray_point() {
        // y = 0, delta = 1, C = {x_1 >= 1/2 + 1/8}: y outside, the ray point
        // (-1, 0) is at distance 13/8 > eps
        let c = Polytope::halfspace(ints(&[-1, 0]), rat(-5, 8)).unwrap();
        let ball = BallSpec::new(ints(&[0, 0]), rat(1, 1), Norm::Euclidean).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = lemma3_conclusion_check(&ball, &c, &rat(1, 4), 0, &mut rng).unwrap();
        assert!(!r.hypothesis_holds);
        assert!((r.max_distance - 13.0 / 8.0).abs() < 1e-12);
        assert!(r.conclusion_holds);
        assert!(lemma3_conclusion_check(&ball, &c, &rat(1, 2), 0, &mut rng).is_err());
    }

    #[test]
    fn trace_ball_uses_vertices() {
        let c = Polytope::new(
            2,
            vec![ints(&[1, 0]), ints(&[0, 1]), ints(&[-1, 0]), ints(&[0, -1])],
            ints(&[1, 1, 1, 1]),
        )
        .unwrap();
        let ball = BallSpec::new(ints(&[0, 0]), rat(1, 2), Norm::Trace).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = lemma3_conclusion_check(&ball, &c, &rat(0, 1), 0, &mut rng).unwrap();
        assert_eq!(r.points_checked, 4);
        assert!(r.hypothesis_holds);
    }

    #[test]
    fn active_set_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dim = rng.gen_range(2..=4);
            let (ball, poly, _) = random_lemma3_instance(dim, &mut rng).unwrap();
            let Some(start) = poly.feasible_point().unwrap() else { continue };
            let fp = poly.to_float();
            let x: Vec<f64> = to_f64s(&ball.center)
                .iter()
                .map(|v| v + rng.gen_range(-2.0..2.0))
                .collect();
            let a = fp.project_active_set(&x, &to_f64s(&start)).unwrap();
            let b = fp.project_enumerate(&x).unwrap();
            let da = norm2(&x.iter().zip(&a).map(|(p, q)| p - q).collect::<Vec<_>>());
            let db = norm2(&x.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
            assert!((da - db).abs() < 1e-9, "{da} {db}");
        }
    }

    #[test]
    fn small_harness_run() {
        let report = lemma3_harness(&Lemma3HarnessConfig {
            trials: 200,
            seed: 5,
            ..Lemma3HarnessConfig::default()
        })
        .unwrap();
        assert_eq!(report.membership_failures, 0);
        assert!(report.hypothesis_passed > 0);
    }

    #[test]
    fn constant_family_is_infinite() {
        let fam = PolytopeFamily {
            generator: |_: &Rational| Ok(Polytope::simplex(3)),
            ambient: Polytope::simplex(3),
        };
        let y = vec![rat(1, 3), rat(1, 3), rat(1, 3)];
        // the simplex has two opposite equality rows, so its Euclidean
        // interior radius is zero; use the S_n style radius instead
        assert!(fam.interior_radius(&y) <= 0.0);
        let fam = PolytopeFamily {
            generator: |_: &Rational| Ok(Polytope::simplex(3)),
            ambient: Polytope::halfspace(ints(&[1, 1, 1]), rational::int(2)).unwrap(),
        };
        assert_eq!(corollary4_threshold(&y, &fam, &rat(1, 1), 10).unwrap(), Threshold::Infinite);
    }

    #[test]
    fn halfspace_family_threshold() {
        // y = 0, C_eps = {x_1 <= delta/2 - eps} with delta = 1/2
        let fam = PolytopeFamily {
            generator: |eps: &Rational| {
                Polytope::halfspace(ints(&[1, 0]), rat(1, 4) - eps)
            },
            ambient: Polytope::halfspace(ints(&[1, 0]), rational::int(10)).unwrap(),
        };
        match corollary4_threshold(&ints(&[0, 0]), &fam, &rat(1, 1), 20).unwrap() {
            Threshold::Estimate { lower, upper } => {
                assert!(lower <= rat(1, 4) && upper > rat(1, 4));
                assert!(&upper - &lower < rat(1, 1_000_000));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sn_family_copies() {
        assert_eq!(SnFamily::copies(&rat(1, 1)), 1);
        assert_eq!(SnFamily::copies(&rat(1, 2)), 1);
        assert_eq!(SnFamily::copies(&rat(1, 3)), 2);
        assert_eq!(SnFamily::copies(&rat(1, 4)), 2);
        assert_eq!(SnFamily::copies(&rat(1, 5)), 3);
    }
}
