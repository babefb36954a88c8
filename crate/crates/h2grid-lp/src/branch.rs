//! Branch-and-bound over the LP relaxation.
//!
//! Depth-first, floor branch explored first, branching on the most
//! fractional integer column (ties by lowest variable index). Nodes are
//! pruned once their relaxation bound cannot beat the incumbent. The
//! returned solution is the incumbent node's LP solution, so its duals are
//! those of the relaxation with the branching bounds applied; when the root
//! relaxation is already integral it is returned unchanged.

use crate::program::LinearProgram;
use crate::simplex::Simplex;
use crate::{tol, SolveError, Solution};

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub(crate) fn branch_and_bound(lp: &LinearProgram) -> Result<Solution, SolveError> {
    let integer_cols: Vec<usize> = lp
        .vars()
        .filter(|(_, v)| v.integer)
        .map(|(id, _)| id.index())
        .collect();

    let root = Node {
        lower: lp.vars().map(|(_, v)| v.lower).collect(),
        upper: lp.vars().map(|(_, v)| v.upper).collect(),
    };
    let mut stack = vec![root];
    let mut incumbent: Option<Solution> = None;
    let mut root_infeasible: Option<SolveError> = None;
    let mut first_node = true;

    while let Some(node) = stack.pop() {
        let relaxed = match Simplex::new(lp, &node.lower, &node.upper)
            .and_then(|s| s.solve(lp))
        {
            Ok(sol) => sol,
            Err(err @ SolveError::Infeasible { .. }) => {
                if first_node {
                    root_infeasible = Some(err);
                }
                first_node = false;
                continue;
            }
            Err(other) => return Err(other),
        };
        first_node = false;
        if let Some(best) = &incumbent {
            if relaxed.objective >= best.objective - 1e-9 {
                continue;
            }
        }
        match most_fractional(&integer_cols, relaxed.primal()) {
            None => {
                incumbent = Some(relaxed);
            }
            Some((col, value)) => {
                let mut ceil_node = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                };
                ceil_node.lower[col] = value.ceil();
                let mut floor_node = node;
                floor_node.upper[col] = value.floor();
                stack.push(ceil_node);
                stack.push(floor_node);
            }
        }
    }

    match incumbent {
        Some(sol) => Ok(sol),
        None => Err(root_infeasible.unwrap_or(SolveError::Infeasible {
            rows: Vec::new(),
            detail: "no integer-feasible point exists".into(),
        })),
    }
}

/// Most fractional integer column, ties broken by lowest index.
fn most_fractional(integer_cols: &[usize], x: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &col in integer_cols {
        let v = x[col];
        let frac_dist = (v - v.round()).abs();
        if frac_dist > tol::INTEGRALITY {
            let score = (v - v.floor() - 0.5).abs();
            match best {
                Some((_, _, s)) if score >= s => {}
                _ => best = Some((col, v, score)),
            }
        }
    }
    best.map(|(c, v, _)| (c, v))
}
