//! Independent verification of a claimed solution against the program data.
//!
//! Works purely from the `LinearProgram` and the `Solution` vectors; it does
//! not share state with the simplex. Checks primal feasibility, integrality,
//! dual sign conventions, complementary slackness and the strong-duality gap
//! (dual objective rebuilt from duals and reduced costs alone).

use crate::program::{LinearProgram, Sense};
use crate::{tol, Solution};

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    RowFeasibility,
    VarBound,
    Integrality,
    DualSign,
    DualInfeasible,
    ComplementarySlackness,
    DualityGap,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
    /// Dual objective reconstructed from `(y, reduced costs)`; equals the
    /// primal objective at a true optimum.
    pub dual_objective: f64,
    pub duality_gap: f64,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies feasibility and, for continuous programs, optimality certificates.
///
/// Integer programs are only checked for primal feasibility and integrality;
/// duality and slackness statements do not apply to them.
pub fn check_solution(lp: &LinearProgram, sol: &Solution) -> CheckReport {
    let mut report = CheckReport::default();
    let x = sol.primal();

    for (id, v) in lp.vars() {
        let xi = x[id.index()];
        let excess = (v.lower - xi).max(xi - v.upper).max(0.0);
        if excess > tol::FEASIBILITY * (1.0 + xi.abs()) {
            report.violations.push(Violation {
                kind: ViolationKind::VarBound,
                subject: v.name.clone(),
                magnitude: excess,
            });
        }
        if v.integer {
            let frac = (xi - xi.round()).abs();
            if frac > tol::INTEGRALITY {
                report.violations.push(Violation {
                    kind: ViolationKind::Integrality,
                    subject: v.name.clone(),
                    magnitude: frac,
                });
            }
        }
    }

    for (id, row) in lp.rows() {
        let activity = lp.row_activity(id, x);
        let scale = 1.0 + row.rhs.abs().max(activity.abs());
        let violation = match row.sense {
            Sense::Le => (activity - row.rhs).max(0.0),
            Sense::Ge => (row.rhs - activity).max(0.0),
            Sense::Eq => (activity - row.rhs).abs(),
        };
        if violation > tol::FEASIBILITY * scale {
            report.violations.push(Violation {
                kind: ViolationKind::RowFeasibility,
                subject: row.tag.clone(),
                magnitude: violation,
            });
        }
    }

    if lp.has_integers() {
        report.dual_objective = sol.objective;
        return report;
    }

    // Dual sign conventions for shadow prices of a minimization.
    for (id, row) in lp.rows() {
        let y = sol.dual(id);
        let bad = match row.sense {
            Sense::Le => y.max(0.0),
            Sense::Ge => (-y).max(0.0),
            Sense::Eq => 0.0,
        };
        if bad > tol::DUALITY_REL * (1.0 + y.abs()) {
            report.violations.push(Violation {
                kind: ViolationKind::DualSign,
                subject: row.tag.clone(),
                magnitude: bad,
            });
        }
        // Complementary slackness: inactive inequality rows carry zero price.
        let activity = lp.row_activity(id, x);
        let slack = match row.sense {
            Sense::Le => row.rhs - activity,
            Sense::Ge => activity - row.rhs,
            Sense::Eq => 0.0,
        };
        let product = (slack * y).abs();
        if product > tol::DUALITY_REL * (1.0 + slack.abs() + y.abs()) {
            report.violations.push(Violation {
                kind: ViolationKind::ComplementarySlackness,
                subject: row.tag.clone(),
                magnitude: product,
            });
        }
    }

    // Dual objective: y'b plus the bound terms of the split reduced costs.
    let mut dual_obj = lp.objective_constant();
    for (id, row) in lp.rows() {
        dual_obj += sol.dual(id) * row.rhs;
    }
    for (id, v) in lp.vars() {
        let r = sol.reduced_cost(id);
        let xi = x[id.index()];
        if r > 0.0 {
            if v.lower.is_finite() {
                dual_obj += r * v.lower;
            } else if r > tol::DUALITY_REL {
                report.violations.push(Violation {
                    kind: ViolationKind::DualInfeasible,
                    subject: v.name.clone(),
                    magnitude: r,
                });
            }
        } else if r < 0.0 {
            if v.upper.is_finite() {
                dual_obj += r * v.upper;
            } else if -r > tol::DUALITY_REL {
                report.violations.push(Violation {
                    kind: ViolationKind::DualInfeasible,
                    subject: v.name.clone(),
                    magnitude: -r,
                });
            }
        }
        // Slackness on bounds: a variable strictly inside its box must have
        // a vanishing reduced cost.
        let lo_gap = xi - v.lower;
        let hi_gap = v.upper - xi;
        let interior = lo_gap.min(hi_gap);
        if interior.is_finite() || (lo_gap.is_infinite() && hi_gap.is_infinite()) {
            let inner = if interior.is_finite() { interior } else { 1.0 };
            let product = (inner.max(0.0) * r).abs();
            if product > tol::DUALITY_REL * (1.0 + inner.abs() + r.abs()) * (1.0 + v.cost.abs()) {
                report.violations.push(Violation {
                    kind: ViolationKind::ComplementarySlackness,
                    subject: v.name.clone(),
                    magnitude: product,
                });
            }
        }
    }
    report.dual_objective = dual_obj;
    report.duality_gap = (sol.objective - dual_obj).abs() / sol.objective.abs().max(1.0);
    if report.duality_gap > tol::DUALITY_REL {
        report.violations.push(Violation {
            kind: ViolationKind::DualityGap,
            subject: lp.name().to_string(),
            magnitude: report.duality_gap,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{LinearProgram, Sense};
    use crate::solve_lp;

    fn two_var_lp() -> LinearProgram {
        let mut lp = LinearProgram::new("check");
        let x = lp.add_var("x", 0.0, 10.0, 2.0).unwrap();
        let y = lp.add_var("y", 0.0, 10.0, 3.0).unwrap();
        lp.add_row("mix", Sense::Ge, 6.0, vec![(x, 1.0), (y, 2.0)])
            .unwrap();
        lp
    }

    #[test]
    fn clean_optimum_passes() {
        let lp = two_var_lp();
        let sol = solve_lp(&lp).unwrap();
        let report = check_solution(&lp, &sol);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.duality_gap <= tol::DUALITY_REL);
    }

    #[test]
    fn perturbed_primal_is_flagged() {
        let lp = two_var_lp();
        let mut sol = solve_lp(&lp).unwrap();
        sol.perturb_primal_for_test(0, -1.0);
        let report = check_solution(&lp, &sol);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::RowFeasibility));
    }

    #[test]
    fn flipped_dual_is_flagged() {
        let lp = two_var_lp();
        let mut sol = solve_lp(&lp).unwrap();
        sol.flip_dual_for_test(0);
        let report = check_solution(&lp, &sol);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::DualSign || v.kind == ViolationKind::DualityGap));
    }
}
