//! Exact desk-scale LP/MILP solving with dual values.
//!
//! The crate provides a dense two-phase simplex ([`solve_lp`]) and a
//! branch-and-bound wrapper for integer variables ([`solve_milp`]), plus an
//! independent result verifier ([`check_solution`]) and an LP-format writer
//! ([`write_lp`]) for cross-checks against external solvers.
//!
//! Outcomes map onto `Result`: an `Ok` solution is optimal; infeasibility
//! and unboundedness are the [`SolveError`] variants, with the offending
//! rows named where phase 1 can identify them.
//!
//! Duals are shadow prices: `dual(row) = ∂objective/∂rhs`. In a
//! minimization, `≥` rows therefore price at `≥ 0` and `≤` rows at `≤ 0`;
//! callers that want a non-negative penalty price for a `≤` row (e.g. a
//! carbon price) negate the raw dual.

mod branch;
mod check;
mod program;
mod simplex;
mod writer;

pub use check::{check_solution, CheckReport, Violation, ViolationKind};
pub use program::{LinearProgram, RowDef, RowId, Sense, VarDef, VarId};
pub use writer::write_lp;

use thiserror::Error;

/// Centralized numeric tolerances. Every feasibility or optimality decision
/// in the crate uses one of these.
pub mod tol {
    /// Absolute primal feasibility tolerance.
    pub const FEASIBILITY: f64 = 1e-7;
    /// Relative strong-duality gap accepted as optimal.
    pub const DUALITY_REL: f64 = 1e-6;
    /// Distance from the nearest integer accepted as integral.
    pub const INTEGRALITY: f64 = 1e-6;
}

/// Errors raised while building a program.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite value in {subject}")]
    NonFinite { subject: String },
    #[error("row {row} references undeclared variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("duplicate constraint tag {tag}")]
    DuplicateTag { tag: String },
    #[error("integer variable {name} must have finite bounds")]
    UnboundedInteger { name: String },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("infeasible: {detail}")]
    Infeasible { rows: Vec<RowId>, detail: String },
    #[error("unbounded along {column}")]
    Unbounded { column: String },
    #[error("model error: {0}")]
    Model(String),
    #[error("numerical failure: {detail}")]
    Numeric { detail: String },
}

impl SolveError {
    /// Rows phase 1 could not satisfy, when the failure was infeasibility.
    pub fn infeasible_rows(&self) -> &[RowId] {
        match self {
            SolveError::Infeasible { rows, .. } => rows,
            _ => &[],
        }
    }
}

/// An optimal solution: primal values, row duals and reduced costs.
#[derive(Debug, Clone)]
pub struct Solution {
    pub objective: f64,
    primal: Vec<f64>,
    duals: Vec<f64>,
    reduced: Vec<f64>,
}

impl Solution {
    pub(crate) fn new(objective: f64, primal: Vec<f64>, duals: Vec<f64>, reduced: Vec<f64>) -> Self {
        Solution {
            objective,
            primal,
            duals,
            reduced,
        }
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.index()]
    }

    /// Shadow price of a row (`∂objective/∂rhs`).
    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.index()]
    }

    pub fn reduced_cost(&self, var: VarId) -> f64 {
        self.reduced[var.index()]
    }

    pub fn primal(&self) -> &[f64] {
        &self.primal
    }

    pub fn duals(&self) -> &[f64] {
        &self.duals
    }

    #[doc(hidden)]
    pub fn perturb_primal_for_test(&mut self, index: usize, delta: f64) {
        self.primal[index] += delta;
    }

    #[doc(hidden)]
    pub fn flip_dual_for_test(&mut self, index: usize) {
        self.duals[index] = -self.duals[index] - 1.0;
    }
}

/// Solves a continuous minimization to optimality with duals.
///
/// Integer flags are rejected; use [`solve_milp`] for those.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution, SolveError> {
    if lp.has_integers() {
        return Err(SolveError::Model(
            "program has integer variables; use solve_milp".into(),
        ));
    }
    let lower: Vec<f64> = lp.vars().map(|(_, v)| v.lower).collect();
    let upper: Vec<f64> = lp.vars().map(|(_, v)| v.upper).collect();
    simplex::Simplex::new(lp, &lower, &upper)?.solve(lp)
}

/// Solves a mixed-integer minimization exactly (gap 0 at desk scale).
pub fn solve_milp(lp: &LinearProgram) -> Result<Solution, SolveError> {
    if !lp.has_integers() {
        return solve_lp(lp);
    }
    branch::branch_and_bound(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn milp_on_continuous_program_matches_lp() {
        let mut lp = LinearProgram::new("plain");
        let x = lp.add_var("x", 0.0, 4.0, -1.0).unwrap();
        lp.add_row("cap", Sense::Le, 3.0, vec![(x, 1.0)]).unwrap();
        let a = solve_lp(&lp).unwrap();
        let b = solve_milp(&lp).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn resolve_is_bit_identical() {
        let mut lp = LinearProgram::new("det");
        let x = lp.add_var("x", 0.0, 9.0, 1.5).unwrap();
        let y = lp.add_var("y", 0.0, 9.0, 2.5).unwrap();
        lp.add_row("need", Sense::Ge, 7.0, vec![(x, 1.0), (y, 1.0)])
            .unwrap();
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        for (va, vb) in a.primal().iter().zip(b.primal()) {
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }
}
