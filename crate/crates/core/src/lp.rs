//! Exact rational linear programming.
//!
//! Dense two-phase tableau simplex, priced by most negative reduced cost
//! with a fallback to Bland's rule. Every answer carries a certificate that
//! is re-checked by substitution before it is returned:
//! feasible/optimal points satisfy all constraints exactly, infeasibility
//! comes with Farkas multipliers, unboundedness with an improving ray.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastq::Q;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Sparse linear expression: `(variable index, coefficient)` pairs.
pub type LinearExpr = Vec<(usize, Rational)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: LinearExpr,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    /// `None` means the variable is free.
    lower_bounds: Vec<Option<Rational>>,
    constraints: Vec<Constraint>,
    objective: Option<(Sense, LinearExpr)>,
}

fn dot(expr: &[(usize, Rational)], x: &[Rational]) -> Rational {
    expr.iter().map(|(j, a)| a * &x[*j]).sum()
}

impl LinearProgram {
    /// `num_vars` variables, all with lower bound 0.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            lower_bounds: vec![Some(Rational::zero()); num_vars],
            constraints: Vec::new(),
            objective: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[Option<Rational>] {
        &self.lower_bounds
    }

    pub fn objective(&self) -> Option<&(Sense, LinearExpr)> {
        self.objective.as_ref()
    }

    /// Adds a variable (lower bound 0) and returns its index.
    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.lower_bounds.push(Some(Rational::zero()));
        self.num_vars - 1
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: Option<Rational>) {
        self.lower_bounds[var] = bound;
    }

    pub fn set_free(&mut self, var: usize) {
        self.lower_bounds[var] = None;
    }

    /// Adds a constraint and returns its index. Zero coefficients are dropped
    /// and repeated indices are merged.
    pub fn add_constraint(
        &mut self,
        coeffs: impl IntoIterator<Item = (usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        let mut merged: LinearExpr = Vec::new();
        let mut raw: Vec<(usize, Rational)> = coeffs.into_iter().collect();
        raw.sort_by_key(|(j, _)| *j);
        for (j, a) in raw {
            match merged.last_mut() {
                Some((k, b)) if *k == j => *b += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|(_, a)| !a.is_zero());
        self.constraints.push(Constraint {
            coeffs: merged,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn add_dense(&mut self, row: &[Rational], relation: Relation, rhs: Rational) -> usize {
        self.add_constraint(
            row.iter().cloned().enumerate(),
            relation,
            rhs,
        )
    }

    pub fn set_objective(&mut self, sense: Sense, coeffs: impl IntoIterator<Item = (usize, Rational)>) {
        let mut expr: LinearExpr = coeffs.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        expr.sort_by_key(|(j, _)| *j);
        self.objective = Some((sense, expr));
    }

    fn validate(&self) -> Result<()> {
        if self.lower_bounds.len() != self.num_vars {
            return Err(Error::arg("lower bound count differs from variable count"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(Error::arg(format!(
                    "constraint {i} references variable {j} of {}",
                    self.num_vars
                )));
            }
        }
        if let Some((_, expr)) = &self.objective {
            if expr.iter().any(|(j, _)| *j >= self.num_vars) {
                return Err(Error::arg("objective references a missing variable"));
            }
        }
        Ok(())
    }

    /// Exact constraint check, including lower bounds.
    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars {
            return false;
        }
        let bounds_ok = self
            .lower_bounds
            .iter()
            .zip(x)
            .all(|(l, v)| l.as_ref().map_or(true, |l| v >= l));
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs = dot(&c.coeffs, x);
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                }
            })
    }

    pub fn objective_value(&self, x: &[Rational]) -> Option<Rational> {
        self.objective.as_ref().map(|(_, c)| dot(c, x))
    }

    /// Checks that `cert` proves the constraint system has no solution.
    pub fn verify_farkas(&self, cert: &FarkasCertificate) -> bool {
        let y = &cert.multipliers;
        if y.len() != self.constraints.len() {
            return false;
        }
        let signs_ok = self.constraints.iter().zip(y).all(|(c, yi)| match c.relation {
            Relation::Le => !yi.is_negative(),
            Relation::Ge => !yi.is_positive(),
            Relation::Eq => true,
        });
        if !signs_ok {
            return false;
        }
        // sum_i y_i a_i x <= sum_i y_i b_i holds for every feasible x
        let mut combo = vec![Rational::zero(); self.num_vars];
        let mut beta = Rational::zero();
        for (c, yi) in self.constraints.iter().zip(y) {
            if yi.is_zero() {
                continue;
            }
            for (j, a) in &c.coeffs {
                combo[*j] += yi * a;
            }
            beta += yi * &c.rhs;
        }
        // minimum of combo.x over the bound box must exceed beta
        let mut floor = Rational::zero();
        for (cj, l) in combo.iter().zip(&self.lower_bounds) {
            match l {
                None if !cj.is_zero() => return false,
                None => {}
                Some(_) if cj.is_negative() => return false,
                Some(l) => floor += cj * l,
            }
        }
        floor > beta
    }

    /// Checks that `ray` is a recession direction that improves the objective.
    pub fn verify_ray(&self, ray: &[Rational]) -> bool {
        let Some((sense, obj)) = &self.objective else {
            return false;
        };
        if ray.len() != self.num_vars {
            return false;
        }
        let bounds_ok = self
            .lower_bounds
            .iter()
            .zip(ray)
            .all(|(l, r)| l.is_none() || !r.is_negative());
        let rows_ok = self.constraints.iter().all(|c| {
            let v = dot(&c.coeffs, ray);
            match c.relation {
                Relation::Le => !v.is_positive(),
                Relation::Ge => !v.is_negative(),
                Relation::Eq => v.is_zero(),
            }
        });
        let gain = dot(obj, ray);
        let improves = match sense {
            Sense::Minimize => gain.is_negative(),
            Sense::Maximize => gain.is_positive(),
        };
        bounds_ok && rows_ok && improves
    }

    /// Re-checks whatever evidence `outcome` carries.
    pub fn verify_outcome(&self, outcome: &LpOutcome) -> bool {
        match outcome {
            LpOutcome::Feasible { point } => self.is_feasible_point(point),
            LpOutcome::Optimal { point, value } => {
                self.is_feasible_point(point)
                    && self.objective_value(point).as_ref() == Some(value)
            }
            LpOutcome::Infeasible { certificate } => self.verify_farkas(certificate),
            LpOutcome::Unbounded { point, ray } => {
                self.is_feasible_point(point) && self.verify_ray(ray)
            }
        }
    }
}

/// Farkas multipliers, one per constraint in insertion order.
///
/// Sign convention: `<=` rows get `y >= 0`, `>=` rows `y <= 0`, equalities
/// are free. The combination `c = sum y_i a_i` is nonnegative on bounded
/// variables and zero on free ones, while `c . l > sum y_i b_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    #[serde(with = "rational::serde_rational_vec")]
    pub multipliers: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LpOutcome {
    Feasible {
        #[serde(with = "rational::serde_rational_vec")]
        point: Vec<Rational>,
    },
    Optimal {
        #[serde(with = "rational::serde_rational_vec")]
        point: Vec<Rational>,
        #[serde(with = "rational::serde_rational")]
        value: Rational,
    },
    Infeasible {
        certificate: FarkasCertificate,
    },
    Unbounded {
        #[serde(with = "rational::serde_rational_vec")]
        point: Vec<Rational>,
        #[serde(with = "rational::serde_rational_vec")]
        ray: Vec<Rational>,
    },
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }

    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            LpOutcome::Feasible { point }
            | LpOutcome::Optimal { point, .. }
            | LpOutcome::Unbounded { point, .. } => Some(point),
            LpOutcome::Infeasible { .. } => None,
        }
    }

    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_pivots: u64,
    /// Keep a JSON snapshot of the final tableau in the report.
    pub dump_tableau: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_pivots: 1_000_000,
            dump_tableau: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outcome: LpOutcome,
    pub pivots: u64,
    pub tableau: Option<serde_json::Value>,
}

/// Solves with default options.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    Ok(solve_with(lp, &SimplexOptions::default())?.outcome)
}

pub fn solve_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<SolveReport> {
    lp.validate()?;
    let mut tab = Tableau::build(lp);
    let outcome = tab.run(lp, opts.max_pivots)?;
    if !lp.verify_outcome(&outcome) {
        return Err(Error::Internal(
            "simplex result failed exact re-verification".into(),
        ));
    }
    Ok(SolveReport {
        outcome,
        pivots: tab.pivots,
        tableau: opts.dump_tableau.then(|| tab.to_json()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

/// Where original variable `j` lives in the standard-form columns.
#[derive(Debug, Clone, Copy)]
struct VarColumns {
    pos: usize,
    neg: Option<usize>,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    /// Constraint index of each live row.
    row_origin: Vec<usize>,
    /// Sign applied to each constraint so that its rhs is nonnegative.
    row_sign: Vec<Q>,
    /// Column that formed the identity for each constraint at start.
    init_col: Vec<usize>,
    var_cols: Vec<VarColumns>,
    reduced: Vec<Q>,
    objective: Q,
    pivots: u64,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let mut kinds = Vec::new();
        let mut var_cols = Vec::with_capacity(lp.num_vars);
        for l in &lp.lower_bounds {
            let pos = kinds.len();
            kinds.push(ColumnKind::Structural);
            let neg = l.is_none().then(|| {
                kinds.push(ColumnKind::Structural);
                kinds.len() - 1
            });
            var_cols.push(VarColumns { pos, neg });
        }
        let mut slack_col = Vec::with_capacity(lp.constraints.len());
        for c in &lp.constraints {
            if c.relation == Relation::Eq {
                slack_col.push(None);
            } else {
                slack_col.push(Some(kinds.len()));
                kinds.push(ColumnKind::Slack);
            }
        }
        let m = lp.constraints.len();
        let mut rhs = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        let mut needs_art = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut b = c.rhs.clone();
            for (j, a) in &c.coeffs {
                if let Some(l) = &lp.lower_bounds[*j] {
                    b -= a * l;
                }
            }
            let sign = if b.is_negative() {
                -Q::one()
            } else {
                Q::one()
            };
            let slack_positive = match (c.relation, sign.is_positive()) {
                (Relation::Le, true) | (Relation::Ge, false) => slack_col[i].is_some(),
                _ => false,
            };
            needs_art.push(!slack_positive);
            rhs.push(&Q::from(&b) * &sign);
            row_sign.push(sign);
        }
        let mut init_col = vec![0; m];
        for i in 0..m {
            if needs_art[i] {
                init_col[i] = kinds.len();
                kinds.push(ColumnKind::Artificial);
            } else {
                init_col[i] = slack_col[i].unwrap();
            }
        }
        let width = kinds.len();
        let mut rows = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let s = &row_sign[i];
            let mut row = vec![Q::zero(); width];
            for (j, a) in &c.coeffs {
                let vc = var_cols[*j];
                row[vc.pos] = &Q::from(a) * s;
                if let Some(neg) = vc.neg {
                    row[neg] = -(&Q::from(a) * s);
                }
            }
            if let Some(sc) = slack_col[i] {
                let unit = if c.relation == Relation::Le {
                    Q::one()
                } else {
                    -Q::one()
                };
                row[sc] = &unit * s;
            }
            if needs_art[i] {
                row[init_col[i]] = Q::one();
            }
            rows.push(row);
        }
        Tableau {
            rows,
            rhs,
            basis: init_col.clone(),
            kinds,
            row_origin: (0..m).collect(),
            row_sign,
            init_col,
            var_cols,
            reduced: vec![Q::zero(); width],
            objective: Q::zero(),
            pivots: 0,
        }
    }

    fn width(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let inv = self.rows[r][q].recip();
        if !inv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[r] *= &inv;
        }
        let nz: Vec<usize> = (0..self.width())
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r].clone());
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][q].is_zero() {
                continue;
            }
            let f = self.rows[i][q].clone();
            let row = &mut self.rows[i];
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        if !self.reduced[q].is_zero() {
            let f = self.reduced[q].clone();
            for &j in &nz {
                self.reduced[j] -= &f * &pivot_row[j];
            }
            self.objective += &f * &pivot_rhs;
        }
        self.basis[r] = q;
        self.pivots += 1;
    }

    /// Loads cost vector `c` (indexed by column) as the objective row.
    fn load_costs(&mut self, c: &[Q]) {
        self.reduced = c.to_vec();
        self.objective = Q::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    self.reduced[j] -= cb * v;
                }
            }
            self.objective += cb * &self.rhs[i];
        }
    }

    /// Pivots until optimal; returns an unbounded column if one appears.
    ///
    /// Prices by most negative reduced cost and falls back to Bland's rule
    /// for the rest of the phase after a run of degenerate pivots, which
    /// rules out cycling.
    fn iterate(&mut self, max_pivots: u64) -> Result<Option<usize>> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let stall_limit = 2 * self.rows.len() + 10;
        loop {
            let candidates = (0..self.width()).filter(|&j| {
                self.kinds[j] != ColumnKind::Artificial && self.reduced[j].is_negative()
            });
            let entering = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.reduced[a].cmp(&self.reduced[b]).then(a.cmp(&b)))
            };
            let Some(q) = entering else {
                return Ok(None);
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][q];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = best else {
                return Ok(Some(q));
            };
            if self.pivots >= max_pivots {
                return Err(Error::Resource(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
            if ratio.is_zero() {
                degenerate_run += 1;
                if degenerate_run > stall_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q);
        }
    }

    fn std_point(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.width()];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs[i].to_rational();
        }
        x
    }

    fn original_point(
        &self,
        lp: &LinearProgram,
        std: &[Rational],
        offset: bool,
    ) -> Vec<Rational> {
        self.var_cols
            .iter()
            .zip(&lp.lower_bounds)
            .map(|(vc, l)| {
                let mut v = std[vc.pos].clone();
                if let Some(neg) = vc.neg {
                    v -= &std[neg];
                }
                match l {
                    Some(l) if offset => v + l,
                    _ => v,
                }
            })
            .collect()
    }

    fn farkas(&self, lp: &LinearProgram) -> FarkasCertificate {
        // Phase-1 simplex multipliers pi_i = c_init - reduced_init; y = -sign * pi.
        let multipliers = (0..lp.constraints.len())
            .map(|i| {
                let col = self.init_col[i];
                let cost = if self.kinds[col] == ColumnKind::Artificial {
                    Q::one()
                } else {
                    Q::zero()
                };
                let pi = &cost - &self.reduced[col];
                (-(pi * self.row_sign[i].clone())).to_rational()
            })
            .collect();
        FarkasCertificate { multipliers }
    }

    fn run(&mut self, lp: &LinearProgram, max_pivots: u64) -> Result<LpOutcome> {
        // Phase 1: minimise the sum of artificials.
        let phase1: Vec<Q> = self
            .kinds
            .iter()
            .map(|k| {
                if *k == ColumnKind::Artificial {
                    Q::one()
                } else {
                    Q::zero()
                }
            })
            .collect();
        self.load_costs(&phase1);
        let unbounded = self.iterate(max_pivots)?;
        debug_assert!(unbounded.is_none(), "phase 1 is bounded below by zero");
        if self.objective.is_positive() {
            return Ok(LpOutcome::Infeasible {
                certificate: self.farkas(lp),
            });
        }
        self.drive_out_artificials();

        let Some((sense, obj)) = &lp.objective else {
            let point = self.original_point(lp, &self.std_point(), true);
            return Ok(LpOutcome::Feasible { point });
        };
        let flip = if *sense == Sense::Maximize {
            -Q::one()
        } else {
            Q::one()
        };
        let mut costs = vec![Q::zero(); self.width()];
        for (j, c) in obj {
            let vc = self.var_cols[*j];
            costs[vc.pos] = &Q::from(c) * &flip;
            if let Some(neg) = vc.neg {
                costs[neg] = -(&Q::from(c) * &flip);
            }
        }
        self.load_costs(&costs);
        let unbounded = self.iterate(max_pivots)?;
        let std = self.std_point();
        let point = self.original_point(lp, &std, true);
        match unbounded {
            Some(q) => {
                let mut dir = vec![Rational::zero(); self.width()];
                dir[q] = Rational::one();
                for (i, &b) in self.basis.iter().enumerate() {
                    dir[b] = -self.rows[i][q].to_rational();
                }
                let ray = self.original_point(lp, &dir, false);
                Ok(LpOutcome::Unbounded { point, ray })
            }
            None => {
                let value = lp.objective_value(&point).unwrap_or_default();
                Ok(LpOutcome::Optimal { point, value })
            }
        }
    }

    /// After a successful phase 1, pivots zero-level artificials out of the
    /// basis and drops rows that turn out to be redundant.
    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.kinds[self.basis[i]] != ColumnKind::Artificial {
                i += 1;
                continue;
            }
            let col = (0..self.width()).find(|&j| {
                self.kinds[j] != ColumnKind::Artificial && !self.rows[i][j].is_zero()
            });
            match col {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                    self.row_origin.remove(i);
                }
            }
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let fmt = |v: &[Q]| -> Vec<String> {
            v.iter()
                .map(|x| rational::format_rational(&x.to_rational()))
                .collect()
        };
        serde_json::json!({
            "basis": self.basis,
            "row_origin": self.row_origin,
            "rows": self.rows.iter().map(|r| fmt(r)).collect::<Vec<_>>(),
            "rhs": fmt(&self.rhs),
            "reduced_costs": fmt(&self.reduced),
            "objective": rational::format_rational(&self.objective.to_rational()),
            "pivots": self.pivots,
        })
    }
}
