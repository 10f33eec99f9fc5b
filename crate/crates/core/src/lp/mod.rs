//! Sparse linear programs in maximisation form and a dense two-phase simplex
//! solver.
//!
//! Dual values follow one convention throughout: for `max c'x` the
//! multiplier of a `<=` row is non-negative, of a `>=` row non-positive and of
//! an equality free, so that `c - A'y` is non-positive on non-negative
//! columns, zero on free ones, and `b'y` equals the optimal value.

mod simplex;
mod text;

pub use text::{export_lp_text, parse_lp_text};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("simplex stalled after {pivots} pivots")]
    Stall { pivots: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarBound {
    NonNegative,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sorted by column, no duplicates, no zeros.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `max c'x` subject to sparse rows and per-variable sign restrictions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub bounds: Vec<VarBound>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, bound: VarBound, cost: f64) -> usize {
        self.var_names.push(name.into());
        self.bounds.push(bound);
        self.objective.push(cost);
        self.objective.len() - 1
    }

    /// Adds a row; repeated columns are summed and zero coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut c: Vec<(usize, f64)> = coeffs.into_iter().collect();
        c.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        for (j, v) in c {
            match merged.last_mut() {
                Some((k, w)) if *k == j => *w += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.constraints.push(Constraint { name: name.into(), coeffs: merged, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.var_names.len() != n || self.bounds.len() != n {
            return Err(LpError::Malformed("names, bounds and objective differ in length".into()));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for r in &self.constraints {
            if !r.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {}: non-finite right-hand side", r.name)));
            }
            for &(j, v) in &r.coeffs {
                if j >= n {
                    return Err(LpError::Malformed(format!("row {}: column {j} out of range", r.name)));
                }
                if !v.is_finite() {
                    return Err(LpError::Malformed(format!("row {}: non-finite coefficient", r.name)));
                }
            }
        }
        Ok(())
    }

    /// Row activity `a_i'x` for every constraint.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Largest violation of the rows and sign restrictions at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, act) in self.constraints.iter().zip(self.activities(x)) {
            let v = match r.relation {
                Relation::Le => act - r.rhs,
                Relation::Ge => r.rhs - act,
                Relation::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (xj, b) in x.iter().zip(&self.bounds) {
            if *b == VarBound::NonNegative {
                worst = worst.max(-xj);
            }
        }
        worst
    }

    /// Largest violation of dual feasibility at `y` (signs and reduced costs).
    pub fn dual_residual(&self, y: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        let mut reduced = self.objective.clone();
        for (r, &yi) in self.constraints.iter().zip(y) {
            let sign_err = match r.relation {
                Relation::Le => -yi,
                Relation::Ge => yi,
                Relation::Eq => 0.0,
            };
            worst = worst.max(sign_err);
            for &(j, v) in &r.coeffs {
                reduced[j] -= v * yi;
            }
        }
        for (d, b) in reduced.iter().zip(&self.bounds) {
            let err = match b {
                VarBound::NonNegative => *d,
                VarBound::Free => d.abs(),
            };
            worst = worst.max(err);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// The dual program written as a maximisation: variables are the row
    /// multipliers (negated for `>=` rows), rows are the columns.
    fn dual(&self) -> LinearProgram {
        let mut d = LinearProgram::new();
        let mut flip = Vec::with_capacity(self.num_rows());
        for r in &self.constraints {
            let (bound, f) = match r.relation {
                Relation::Le => (VarBound::NonNegative, 1.0),
                Relation::Ge => (VarBound::NonNegative, -1.0),
                Relation::Eq => (VarBound::Free, 1.0),
            };
            d.add_var(format!("y_{}", r.name), bound, -f * r.rhs);
            flip.push(f);
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars()];
        for (i, r) in self.constraints.iter().enumerate() {
            for &(j, v) in &r.coeffs {
                cols[j].push((i, flip[i] * v));
            }
        }
        for (j, col) in cols.into_iter().enumerate() {
            let rel = match self.bounds[j] {
                VarBound::NonNegative => Relation::Ge,
                VarBound::Free => Relation::Eq,
            };
            d.add_constraint(format!("x_{}", self.var_names[j]), col, rel, self.objective[j]);
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    #[serde(skip)]
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize, m: usize, pivots: usize) -> Self {
        let value = match status {
            LpStatus::Infeasible => f64::NEG_INFINITY,
            LpStatus::Unbounded => f64::INFINITY,
            LpStatus::Optimal => f64::NAN,
        };
        LpSolution { status, value, primal: vec![0.0; n], dual: vec![0.0; m], pivots }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arithmetic {
    Float,
    /// Exact rational pivoting; inputs are read as exact binary fractions.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pricing {
    /// Smallest-index rule throughout.
    Bland,
    /// Largest reduced cost, falling back to the smallest-index rule during
    /// runs of degenerate pivots.
    Hybrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dualize {
    Never,
    Always,
    /// Solve the dual when rows outnumber columns threefold.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub arithmetic: Arithmetic,
    pub pricing: Pricing,
    pub dualize: Dualize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub max_pivots: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            arithmetic: Arithmetic::Float,
            pricing: Pricing::Hybrid,
            dualize: Dualize::Auto,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            max_pivots: None,
        }
    }
}

/// Largest program accepted in exact mode.
pub const EXACT_MAX_VARS: usize = 500;

/// Tolerance for reporting values computed from a float solve.
pub const REPORT_TOL: f64 = 1e-7;

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if opts.arithmetic == Arithmetic::Exact && lp.num_vars() > EXACT_MAX_VARS {
        return Err(LpError::Malformed(format!(
            "exact mode is limited to {EXACT_MAX_VARS} variables, program has {}",
            lp.num_vars()
        )));
    }
    let use_dual = match opts.dualize {
        Dualize::Never => false,
        Dualize::Always => true,
        Dualize::Auto => lp.num_rows() > 3 * lp.num_vars().max(1) && lp.num_rows() > 60,
    };
    if use_dual {
        if let Some(sol) = solve_via_dual(lp, opts)? {
            return Ok(sol);
        }
    }
    simplex::run(lp, opts)
}

/// Returns `None` when the dual is infeasible, which leaves the primal status open.
fn solve_via_dual(lp: &LinearProgram, opts: &SolverOptions) -> Result<Option<LpSolution>, LpError> {
    let d = lp.dual();
    let ds = simplex::run(&d, opts)?;
    match ds.status {
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Ok(Some(LpSolution::without_point(
            LpStatus::Infeasible,
            lp.num_vars(),
            lp.num_rows(),
            ds.pivots,
        ))),
        LpStatus::Optimal => {
            let primal: Vec<f64> = ds.dual.iter().map(|u| -u).collect();
            let dual: Vec<f64> = lp
                .constraints
                .iter()
                .zip(&ds.primal)
                .map(|(r, &v)| if r.relation == Relation::Ge { -v } else { v })
                .collect();
            Ok(Some(LpSolution {
                status: LpStatus::Optimal,
                value: -ds.value,
                primal,
                dual,
                pivots: ds.pivots,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LinearProgram {
        // max 3x + 2y st x + y <= 4, x + 3y <= 6, x <= 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::NonNegative, 3.0);
        let y = lp.add_var("y", VarBound::NonNegative, 2.0);
        lp.add_constraint("a", [(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_constraint("b", [(x, 1.0), (y, 3.0)], Relation::Le, 6.0);
        lp.add_constraint("c", [(x, 1.0)], Relation::Le, 3.0);
        lp
    }

    #[test]
    fn textbook_optimum_and_duals() {
        let s = solve(&small()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 11.0).abs() < 1e-12);
        assert!((s.primal[0] - 3.0).abs() < 1e-12 && (s.primal[1] - 1.0).abs() < 1e-12);
        assert!((s.dual[0] - 2.0).abs() < 1e-12);
        assert!(s.dual[1].abs() < 1e-12);
        assert!((s.dual[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::NonNegative, 1.0);
        lp.add_constraint("lo", [(x, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint("hi", [(x, 1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::Free, 1.0);
        let y = lp.add_var("y", VarBound::NonNegative, 0.0);
        lp.add_constraint("r", [(x, 1.0), (y, -1.0)], Relation::Eq, 0.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max -x - y st x - y = -2, x >= -5 (x free), y >= 0
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::Free, -1.0);
        let y = lp.add_var("y", VarBound::NonNegative, -1.0);
        lp.add_constraint("e", [(x, 1.0), (y, -1.0)], Relation::Eq, -2.0);
        lp.add_constraint("g", [(x, 1.0)], Relation::Ge, -5.0);
        for opts in [SolverOptions::default(), SolverOptions { arithmetic: Arithmetic::Exact, ..Default::default() }] {
            let s = solve_with(&lp, &opts).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((s.value - 2.0).abs() < 1e-12, "{}", s.value);
            assert!(lp.primal_residual(&s.primal) < 1e-12);
            assert!(lp.dual_residual(&s.dual) < 1e-12);
        }
    }

    #[test]
    fn dual_route_matches_direct() {
        let lp = small();
        let direct = solve_with(&lp, &SolverOptions { dualize: Dualize::Never, ..Default::default() }).unwrap();
        let via = solve_with(&lp, &SolverOptions { dualize: Dualize::Always, ..Default::default() }).unwrap();
        assert!((direct.value - via.value).abs() < 1e-12);
        assert!(lp.primal_residual(&via.primal) < 1e-12);
        assert!(lp.dual_residual(&via.dual) < 1e-12);
    }

    #[test]
    fn stall_reported() {
        let opts = SolverOptions { max_pivots: Some(1), ..Default::default() };
        assert!(matches!(solve_with(&small(), &opts), Err(LpError::Stall { .. })));
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = small();
        lp.constraints[0].coeffs.push((7, 1.0));
        assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn solution_json_shape() {
        let s = solve(&small()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["status"], "optimal");
        assert_eq!(v.as_object().unwrap().len(), 4);
    }
}
