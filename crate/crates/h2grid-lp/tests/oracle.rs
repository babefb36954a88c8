//! Solver results checked against independent oracles: exhaustive vertex
//! enumeration for LPs and full subset enumeration for integer programs.
//! The oracles share no code with the simplex (their own Gaussian solve).

use h2grid_lp::{check_solution, solve_lp, solve_milp, LinearProgram, Sense, SolveError};
use proptest::prelude::*;

/// Solves the n×n system `M v = rhs` by Gaussian elimination with partial
/// pivoting. Returns `None` for a singular matrix.
fn gauss_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        if m[piv][k].abs() < 1e-10 {
            return None;
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            if f != 0.0 {
                for c in k..n {
                    m[r][c] -= f * m[k][c];
                }
                rhs[r] -= f * rhs[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for c in k + 1..n {
            acc -= m[k][c] * x[c];
        }
        x[k] = acc / m[k][k];
    }
    Some(x)
}

/// Brute-force LP oracle for box-bounded programs: enumerates every vertex
/// (intersection of n active hyperplanes drawn from rows and bounds) and
/// returns the best feasible objective.
fn vertex_enumeration_min(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // Hyperplanes as (normal, offset).
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (_, row) in lp.rows() {
        let mut normal = vec![0.0; n];
        for &(v, a) in &row.terms {
            normal[v.index()] = a;
        }
        planes.push((normal, row.rhs));
    }
    for (id, v) in lp.vars() {
        assert!(
            v.lower.is_finite() && v.upper.is_finite(),
            "oracle needs box bounds"
        );
        let mut lo = vec![0.0; n];
        lo[id.index()] = 1.0;
        planes.push((lo.clone(), v.lower));
        planes.push((lo, v.upper));
    }

    let mut best: Option<f64> = None;
    let k = planes.len();
    let mut pick = vec![0usize; n];
    enumerate_subsets(k, n, &mut pick, 0, 0, &mut |subset| {
        let m: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss_solve(m, rhs) {
            if feasible(lp, &x) {
                let obj = lp.objective_value(&x);
                best = Some(match best {
                    Some(b) => b.min(obj),
                    None => obj,
                });
            }
        }
    });
    best
}

fn enumerate_subsets(
    k: usize,
    n: usize,
    pick: &mut Vec<usize>,
    depth: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == n {
        f(pick);
        return;
    }
    for i in start..k {
        pick[depth] = i;
        enumerate_subsets(k, n, pick, depth + 1, i + 1, f);
    }
}

fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    const EPS: f64 = 1e-7;
    for (id, v) in lp.vars() {
        let xi = x[id.index()];
        if xi < v.lower - EPS || xi > v.upper + EPS {
            return false;
        }
    }
    for (id, row) in lp.rows() {
        let act = lp.row_activity(id, x);
        let ok = match row.sense {
            Sense::Le => act <= row.rhs + EPS,
            Sense::Ge => act >= row.rhs - EPS,
            Sense::Eq => (act - row.rhs).abs() <= EPS,
        };
        if !ok {
            return false;
        }
    }
    true
}

#[test]
fn transport_lp_matches_vertex_oracle() {
    // Two supply routes serving one demand with different costs and caps.
    let mut lp = LinearProgram::new("transport");
    let a = lp.add_var("route_a", 0.0, 8.0, 3.0).unwrap();
    let b = lp.add_var("route_b", 0.0, 8.0, 5.0).unwrap();
    lp.add_row("demand", Sense::Ge, 10.0, vec![(a, 1.0), (b, 1.0)])
        .unwrap();
    let sol = solve_lp(&lp).unwrap();
    let oracle = vertex_enumeration_min(&lp).unwrap();
    assert!((sol.objective - oracle).abs() < 1e-8);
    assert!((sol.objective - 34.0).abs() < 1e-8); // 8·3 + 2·5
    assert!(check_solution(&lp, &sol).is_clean());
}

#[test]
fn knapsack_matches_exhaustive_enumeration() {
    // max 10 z0 + 13 z1 + 7 z2 s.t. 3 z0 + 4 z1 + 2 z2 <= 6
    let values = [10.0, 13.0, 7.0];
    let weights = [3.0, 4.0, 2.0];
    let cap = 6.0;
    let mut lp = LinearProgram::new("knapsack");
    let zs: Vec<_> = (0..3)
        .map(|i| lp.add_binary_var(format!("z{i}"), -values[i]).unwrap())
        .collect();
    lp.add_row(
        "capacity",
        Sense::Le,
        cap,
        zs.iter().zip(weights).map(|(&z, w)| (z, w)),
    )
    .unwrap();

    let mut best = f64::INFINITY;
    for mask in 0u32..8 {
        let w: f64 = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).sum();
        if w <= cap {
            let v: f64 = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).sum();
            best = best.min(-v);
        }
    }
    let sol = solve_milp(&lp).unwrap();
    assert!((sol.objective - best).abs() < 1e-9);
    for &z in &zs {
        let v = sol.value(z);
        assert!((v - v.round()).abs() < 1e-6);
    }
}

#[test]
fn integral_relaxation_skips_branching() {
    // The relaxation optimum is integral, so the MILP answer is the LP answer.
    let mut lp = LinearProgram::new("integral");
    let z = lp.add_integer_var("z", 0.0, 5.0, 1.0).unwrap();
    lp.add_row("floor", Sense::Ge, 3.0, vec![(z, 1.0)]).unwrap();
    let milp = solve_milp(&lp).unwrap();
    assert!((milp.value(z) - 3.0).abs() < 1e-9);

    let mut relaxed = LinearProgram::new("relaxed");
    let x = relaxed.add_var("z", 0.0, 5.0, 1.0).unwrap();
    relaxed.add_row("floor", Sense::Ge, 3.0, vec![(x, 1.0)]).unwrap();
    let lpsol = solve_lp(&relaxed).unwrap();
    assert_eq!(milp.objective.to_bits(), lpsol.objective.to_bits());
}

#[test]
fn integer_infeasible_with_feasible_relaxation() {
    let mut lp = LinearProgram::new("halfsum");
    let a = lp.add_binary_var("a", 0.0).unwrap();
    let b = lp.add_binary_var("b", 0.0).unwrap();
    lp.add_row("half", Sense::Eq, 0.5, vec![(a, 1.0), (b, 1.0)])
        .unwrap();
    match solve_milp(&lp) {
        Err(SolveError::Infeasible { .. }) => {}
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn milp_bound_dominates_relaxation() {
    // Minimization MILP optimum can never beat its own LP relaxation.
    let mut milp = LinearProgram::new("m");
    let mut relax = LinearProgram::new("r");
    for i in 0..3 {
        milp.add_integer_var(format!("z{i}"), 0.0, 3.0, 1.0 + i as f64 * 0.3)
            .unwrap();
        relax
            .add_var(format!("z{i}"), 0.0, 3.0, 1.0 + i as f64 * 0.3)
            .unwrap();
    }
    let terms = |lp: &LinearProgram| {
        lp.vars()
            .map(|(id, _)| (id, 1.7 - id.index() as f64 * 0.4))
            .collect::<Vec<_>>()
    };
    let t = terms(&milp);
    milp.add_row("mix", Sense::Ge, 2.9, t).unwrap();
    let t = terms(&relax);
    relax.add_row("mix", Sense::Ge, 2.9, t).unwrap();
    let mi = solve_milp(&milp).unwrap();
    let re = solve_lp(&relax).unwrap();
    assert!(mi.objective >= re.objective - 1e-9);
}

fn arb_lp() -> impl Strategy<Value = LinearProgram> {
    let nvars = 2usize..=3;
    (nvars.prop_flat_map(move |n| {
        (
            prop::collection::vec((-3i32..=0, 1i32..=4, -4i32..=4), n),
            prop::collection::vec(
                (
                    prop::collection::vec(-3i32..=3, n),
                    0usize..3,
                    -6i32..=6,
                ),
                1..=3,
            ),
        )
    }))
    .prop_map(|(vars, rows)| {
        let mut lp = LinearProgram::new("prop");
        let ids: Vec<_> = vars
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi, c))| {
                lp.add_var(format!("x{i}"), lo as f64, (lo + hi) as f64, c as f64)
                    .unwrap()
            })
            .collect();
        for (r, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
            let sense = match sense {
                0 => Sense::Le,
                1 => Sense::Ge,
                _ => Sense::Eq,
            };
            lp.add_row(
                format!("r{r}"),
                sense,
                rhs as f64,
                coeffs
                    .into_iter()
                    .enumerate()
                    .map(|(i, a)| (ids[i], a as f64)),
            )
            .unwrap();
        }
        lp
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Simplex agrees with vertex enumeration on feasibility and optimum,
    /// and every optimum carries a clean certificate.
    #[test]
    fn random_box_lps_match_oracle(lp in arb_lp()) {
        let oracle = vertex_enumeration_min(&lp);
        match solve_lp(&lp) {
            Ok(sol) => {
                let oracle = oracle.expect("solver optimal but oracle infeasible");
                prop_assert!(
                    (sol.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()),
                    "solver {} vs oracle {}", sol.objective, oracle
                );
                let report = check_solution(&lp, &sol);
                prop_assert!(report.is_clean(), "violations: {:?}", report.violations);
            }
            Err(SolveError::Infeasible { .. }) => {
                prop_assert!(oracle.is_none(), "solver infeasible but oracle found {oracle:?}");
            }
            Err(other) => return Err(TestCaseError::fail(format!("unexpected: {other:?}"))),
        }
    }

    /// Small integer programs agree with exhaustive enumeration.
    #[test]
    fn random_milps_match_enumeration(
        costs in prop::collection::vec(-4i32..=4, 3),
        coeffs in prop::collection::vec(-3i32..=3, 3),
        rhs in -5i32..=8,
    ) {
        let mut lp = LinearProgram::new("milp");
        let ids: Vec<_> = costs
            .iter()
            .enumerate()
            .map(|(i, &c)| lp.add_integer_var(format!("z{i}"), 0.0, 2.0, c as f64).unwrap())
            .collect();
        lp.add_row(
            "mix",
            Sense::Le,
            rhs as f64,
            coeffs.iter().enumerate().map(|(i, &a)| (ids[i], a as f64)),
        )
        .unwrap();

        let mut best: Option<f64> = None;
        for z0 in 0..=2 {
            for z1 in 0..=2 {
                for z2 in 0..=2 {
                    let z = [z0 as f64, z1 as f64, z2 as f64];
                    let act: f64 = coeffs.iter().zip(z).map(|(&a, v)| a as f64 * v).sum();
                    if act <= rhs as f64 + 1e-9 {
                        let obj: f64 = costs.iter().zip(z).map(|(&c, v)| c as f64 * v).sum();
                        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                    }
                }
            }
        }
        match (solve_milp(&lp), best) {
            (Ok(sol), Some(b)) => prop_assert!((sol.objective - b).abs() < 1e-6),
            (Err(SolveError::Infeasible { .. }), None) => {}
            (got, want) => return Err(TestCaseError::fail(format!("solver {got:?} vs enumeration {want:?}"))),
        }
    }
}
