//! Two-phase primal simplex for bounded variables with a dense basis inverse.
//!
//! Internal form: every row `a'x ⋈ b` receives a slack column with bounds
//! encoding the sense (`≤` → `[0, ∞)`, `≥` → `(-∞, 0]`, `=` → `[0, 0]`),
//! giving `A x + s = b` with box bounds on all columns. Phase 1 installs one
//! artificial column per row whose slack cannot absorb the initial residual
//! and minimizes the artificial sum; phase 2 minimizes the true objective
//! from the feasible basis.
//!
//! Dual values are the classic shadow prices `y' = c_B' B⁻¹`, i.e. the
//! sensitivity of the optimal objective to the row's right-hand side. For a
//! minimization this means `≥` rows carry non-negative duals and `≤` rows
//! non-positive ones.
//!
//! Pivoting is Dantzig pricing (most negative scaled reduced cost, ties
//! broken by lowest column index) with a permanent switch to Bland's rule
//! after a long run of degenerate steps, so every solve is deterministic.

use crate::program::{LinearProgram, RowId, Sense, VarId};
use crate::{SolveError, Solution};

/// Scaled threshold below which a reduced cost counts as zero.
fn price_tol(cost: f64) -> f64 {
    1e-9 * (1.0 + cost.abs())
}

/// Minimum magnitude for a usable pivot element.
const PIVOT_TOL: f64 = 1e-8;
/// Ratio-test entries smaller than this are treated as non-blocking.
const RATE_TOL: f64 = 1e-9;
/// Step sizes below this count as degenerate for the cycling guard.
const DEGEN_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 256;
/// Basis inverse is rebuilt from scratch every this many pivots.
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Non-basic free column, held at zero.
    FreeZero,
}

pub(crate) struct Simplex {
    m: usize,
    n_struct: usize,
    /// Columns: structural, then slacks, then artificials.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Phase-2 costs; artificials are costed only in phase 1.
    cost: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<ColStatus>,
    value: Vec<f64>,
    /// Dense row-major B⁻¹.
    binv: Vec<f64>,
    n_artificial: usize,
    pivots: usize,
    degenerate_run: usize,
    bland: bool,
}

enum StepOutcome {
    Optimal,
    Unbounded(usize),
    Pivoted,
}

impl Simplex {
    pub(crate) fn new(
        lp: &LinearProgram,
        lower_override: &[f64],
        upper_override: &[f64],
    ) -> Result<Self, SolveError> {
        let m = lp.num_rows();
        let n_struct = lp.num_vars();
        let n_total = n_struct + m;

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_total];
        for (row_id, row) in lp.rows() {
            for &(var, coeff) in &row.terms {
                if coeff != 0.0 {
                    cols[var.index()].push((row_id.index(), coeff));
                }
            }
        }
        let mut lower = Vec::with_capacity(n_total);
        let mut upper = Vec::with_capacity(n_total);
        let mut cost = Vec::with_capacity(n_total);
        for (id, v) in lp.vars() {
            let lo = lower_override[id.index()];
            let hi = upper_override[id.index()];
            if lo > hi {
                return Err(SolveError::Infeasible {
                    rows: Vec::new(),
                    detail: format!("variable {} has empty domain [{lo}, {hi}]", v.name),
                });
            }
            lower.push(lo);
            upper.push(hi);
            cost.push(v.cost);
        }
        let mut rhs = vec![0.0; m];
        for (row_id, row) in lp.rows() {
            let i = row_id.index();
            rhs[i] = row.rhs;
            cols[n_struct + i].push((i, 1.0));
            let (sl, su) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(sl);
            upper.push(su);
            cost.push(0.0);
        }

        let mut solver = Simplex {
            m,
            n_struct,
            cols,
            lower,
            upper,
            cost,
            rhs,
            basis: vec![0; m],
            status: Vec::new(),
            value: Vec::new(),
            binv: Vec::new(),
            n_artificial: 0,
            pivots: 0,
            degenerate_run: 0,
            bland: false,
        };
        solver.install_start_basis();
        Ok(solver)
    }

    /// Places structural columns at a finite bound (or zero when free),
    /// absorbs what the slacks can, and covers the rest with artificials.
    fn install_start_basis(&mut self) {
        let n_total = self.n_struct + self.m;
        self.status = Vec::with_capacity(n_total);
        self.value = Vec::with_capacity(n_total);
        for j in 0..self.n_struct {
            let (st, v) = initial_position(self.lower[j], self.upper[j]);
            self.status.push(st);
            self.value.push(v);
        }
        // Row residuals once structural columns sit at their initial values.
        let mut residual = self.rhs.clone();
        for j in 0..self.n_struct {
            if self.value[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    residual[i] -= a * self.value[j];
                }
            }
        }
        self.binv = vec![0.0; self.m * self.m];
        // Slack statuses are assigned in place; artificial columns append
        // after all slacks, so their status/value entries are pushed.
        self.status.resize(n_total, ColStatus::AtLower);
        self.value.resize(n_total, 0.0);
        for i in 0..self.m {
            let slack = self.n_struct + i;
            let rho = residual[i];
            let clamped = rho.clamp(self.lower[slack], self.upper[slack]);
            if clamped == rho {
                self.status[slack] = ColStatus::Basic;
                self.value[slack] = rho;
                self.basis[i] = slack;
                self.binv[i * self.m + i] = 1.0;
            } else {
                self.status[slack] = if clamped == self.lower[slack] {
                    ColStatus::AtLower
                } else {
                    ColStatus::AtUpper
                };
                self.value[slack] = clamped;
                let delta = rho - clamped;
                let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
                let art = n_total + self.n_artificial;
                self.n_artificial += 1;
                self.cols.push(vec![(i, sign)]);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.cost.push(0.0);
                self.status.push(ColStatus::Basic);
                self.value.push(delta.abs());
                self.basis[i] = art;
                self.binv[i * self.m + i] = sign;
            }
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.n_struct + self.m
    }

    fn phase_cost(&self, col: usize, phase1: bool) -> f64 {
        if phase1 {
            if self.is_artificial(col) {
                1.0
            } else {
                0.0
            }
        } else {
            self.cost[col]
        }
    }

    /// `y' = c_B' B⁻¹` for the active phase costs.
    fn duals(&self, phase1: bool) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for r in 0..self.m {
            let cb = self.phase_cost(self.basis[r], phase1);
            if cb != 0.0 {
                let row = &self.binv[r * self.m..(r + 1) * self.m];
                for (i, &b) in row.iter().enumerate() {
                    y[i] += cb * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, col: usize, y: &[f64], phase1: bool) -> f64 {
        let mut r = self.phase_cost(col, phase1);
        for &(i, a) in &self.cols[col] {
            r -= y[i] * a;
        }
        r
    }

    /// `d = B⁻¹ A_col`.
    fn ftran(&self, col: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.m];
        for &(i, a) in &self.cols[col] {
            for r in 0..self.m {
                d[r] += self.binv[r * self.m + i] * a;
            }
        }
        d
    }

    /// Rebuilds B⁻¹ by Gauss-Jordan elimination with partial pivoting and
    /// recomputes basic values from the bound positions of non-basic columns.
    fn refactor(&mut self) -> Result<(), SolveError> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        for (r, &col) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[col] {
                mat[i * m + r] = a;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let mut piv_row = k;
            let mut piv_val = mat[k * m + k].abs();
            for r in k + 1..m {
                let v = mat[r * m + k].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return Err(SolveError::Numeric {
                    detail: "singular basis during refactorization".into(),
                });
            }
            if piv_row != k {
                for c in 0..m {
                    mat.swap(piv_row * m + c, k * m + c);
                    inv.swap(piv_row * m + c, k * m + c);
                }
            }
            let p = mat[k * m + k];
            for c in 0..m {
                mat[k * m + c] /= p;
                inv[k * m + c] /= p;
            }
            for r in 0..m {
                if r != k {
                    let f = mat[r * m + k];
                    if f != 0.0 {
                        for c in 0..m {
                            mat[r * m + c] -= f * mat[k * m + c];
                            inv[r * m + c] -= f * inv[k * m + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let mut residual = self.rhs.clone();
        for (j, &st) in self.status.iter().enumerate() {
            if st != ColStatus::Basic && self.value[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    residual[i] -= a * self.value[j];
                }
            }
        }
        for r in 0..self.m {
            let mut v = 0.0;
            let row = &self.binv[r * self.m..(r + 1) * self.m];
            for (i, &b) in row.iter().enumerate() {
                v += b * residual[i];
            }
            self.value[self.basis[r]] = v;
        }
    }

    fn step(&mut self, phase1: bool) -> Result<StepOutcome, SolveError> {
        let y = self.duals(phase1);

        // Pricing: pick the entering column and its direction of movement.
        let mut entering: Option<(usize, f64, f64)> = None; // (col, dir, score)
        for j in 0..self.cols.len() {
            let st = self.status[j];
            if st == ColStatus::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            if !phase1 && self.is_artificial(j) {
                continue;
            }
            let r = self.reduced_cost(j, &y, phase1);
            let tol = price_tol(self.phase_cost(j, phase1));
            let dir = match st {
                ColStatus::AtLower if r < -tol => 1.0,
                ColStatus::AtUpper if r > tol => -1.0,
                ColStatus::FreeZero if r < -tol => 1.0,
                ColStatus::FreeZero if r > tol => -1.0,
                _ => continue,
            };
            if self.bland {
                entering = Some((j, dir, r.abs()));
                break;
            }
            match entering {
                Some((_, _, best)) if r.abs() <= best => {}
                _ => entering = Some((j, dir, r.abs())),
            }
        }
        let (e, dir, _) = match entering {
            Some(t) => t,
            None => return Ok(StepOutcome::Optimal),
        };

        let d = self.ftran(e);

        // Two-pass ratio test. Pass 1 finds the largest step that keeps every
        // basic column within a slightly relaxed bound; pass 2 picks, among
        // the rows whose strict limit fits under that step, the numerically
        // strongest pivot (ties broken by lowest row index).
        let range = self.upper[e] - self.lower[e];
        let t_self = if range.is_finite() { range } else { f64::INFINITY };
        let mut t_max = t_self;
        for r in 0..self.m {
            let rate = -dir * d[r];
            if rate.abs() <= RATE_TOL {
                continue;
            }
            let b = self.basis[r];
            let xb = self.value[b];
            let (room, bound) = if rate > 0.0 {
                (self.upper[b] - xb, self.upper[b])
            } else {
                (xb - self.lower[b], self.lower[b])
            };
            if !room.is_finite() {
                continue;
            }
            let slack = 1e-10 * (1.0 + bound.abs());
            let relaxed = (room.max(0.0) + slack) / rate.abs();
            if relaxed < t_max {
                t_max = relaxed;
            }
        }
        if !t_max.is_finite() {
            return Ok(StepOutcome::Unbounded(e));
        }

        let mut leaving: Option<(usize, bool, f64)> = None; // (row, hits_upper, strict_t)
        for r in 0..self.m {
            let rate = -dir * d[r];
            if rate.abs() <= RATE_TOL {
                continue;
            }
            let b = self.basis[r];
            let xb = self.value[b];
            let (room, hits_upper) = if rate > 0.0 {
                (self.upper[b] - xb, true)
            } else {
                (xb - self.lower[b], false)
            };
            if !room.is_finite() {
                continue;
            }
            let strict = (room / rate.abs()).max(0.0);
            if strict <= t_max {
                let replace = match leaving {
                    None => true,
                    Some((lr, _, _)) => {
                        let cur = d[lr].abs();
                        let cand = d[r].abs();
                        cand > cur + 1e-12
                    }
                };
                if replace {
                    leaving = Some((r, hits_upper, strict));
                }
            }
        }

        let (lr, hits_upper, t) = match leaving {
            Some(found) => found,
            None => {
                // Every row tolerates the full bound-to-bound move: flip.
                debug_assert!(t_self.is_finite());
                for r in 0..self.m {
                    if d[r] != 0.0 {
                        self.value[self.basis[r]] -= dir * t_self * d[r];
                    }
                }
                self.status[e] = match self.status[e] {
                    ColStatus::AtLower => {
                        self.value[e] = self.upper[e];
                        ColStatus::AtUpper
                    }
                    ColStatus::AtUpper => {
                        self.value[e] = self.lower[e];
                        ColStatus::AtLower
                    }
                    other => other,
                };
                self.note_step(t_self);
                return Ok(StepOutcome::Pivoted);
            }
        };
        let lv = self.basis[lr];

        for r in 0..self.m {
            if r != lr && d[r] != 0.0 {
                self.value[self.basis[r]] -= dir * t * d[r];
            }
        }
        self.value[e] += dir * t;
        // Snap the leaving column exactly onto the bound it reached.
        if hits_upper {
            self.value[lv] = self.upper[lv];
            self.status[lv] = ColStatus::AtUpper;
        } else {
            self.value[lv] = self.lower[lv];
            self.status[lv] = ColStatus::AtLower;
        }
        self.pivot_binv(lr, &d)?;
        self.basis[lr] = e;
        self.status[e] = ColStatus::Basic;

        self.note_step(t);
        self.pivots += 1;
        if self.pivots % REFACTOR_EVERY == 0 {
            self.refactor()?;
        }
        Ok(StepOutcome::Pivoted)
    }

    fn note_step(&mut self, t: f64) {
        if t <= DEGEN_TOL {
            self.degenerate_run += 1;
            if self.degenerate_run > BLAND_AFTER {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// Product-form update `B⁻¹ ← E B⁻¹` for a pivot in row `lr`.
    fn pivot_binv(&mut self, lr: usize, d: &[f64]) -> Result<(), SolveError> {
        let p = d[lr];
        if p.abs() < 1e-12 {
            return Err(SolveError::Numeric {
                detail: "vanishing pivot element".into(),
            });
        }
        let m = self.m;
        for c in 0..m {
            self.binv[lr * m + c] /= p;
        }
        for r in 0..m {
            if r != lr {
                let f = d[r];
                if f != 0.0 {
                    for c in 0..m {
                        self.binv[r * m + c] -= f * self.binv[lr * m + c];
                    }
                }
            }
        }
        Ok(())
    }

    fn run_phase(&mut self, phase1: bool) -> Result<Option<usize>, SolveError> {
        let limit = 2000 + 40 * (self.cols.len() + self.m);
        for _ in 0..limit {
            match self.step(phase1)? {
                StepOutcome::Optimal => return Ok(None),
                StepOutcome::Unbounded(col) => return Ok(Some(col)),
                StepOutcome::Pivoted => {}
            }
        }
        Err(SolveError::Numeric {
            detail: format!(
                "iteration limit reached ({} columns, {} rows)",
                self.cols.len(),
                self.m
            ),
        })
    }

    fn infeasibility(&self) -> f64 {
        (0..self.n_artificial)
            .map(|k| self.value[self.n_struct + self.m + k].abs())
            .sum()
    }

    /// Pins artificials to zero and pivots basic ones out where a usable
    /// pivot exists; rows without one are redundant and keep their pinned
    /// artificial in the basis.
    fn retire_artificials(&mut self) -> Result<(), SolveError> {
        for k in 0..self.n_artificial {
            let col = self.n_struct + self.m + k;
            self.lower[col] = 0.0;
            self.upper[col] = 0.0;
            if self.status[col] != ColStatus::Basic {
                self.value[col] = 0.0;
            }
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if !self.is_artificial(b) {
                continue;
            }
            let row = self.binv[r * self.m..(r + 1) * self.m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n_struct + self.m {
                if self.status[j] == ColStatus::Basic {
                    continue;
                }
                let mut alpha = 0.0;
                for &(i, a) in &self.cols[j] {
                    alpha += row[i] * a;
                }
                if alpha.abs() > PIVOT_TOL {
                    match best {
                        Some((_, v)) if alpha.abs() <= v => {}
                        _ => best = Some((j, alpha.abs())),
                    }
                }
            }
            if let Some((j, _)) = best {
                let d = self.ftran(j);
                self.pivot_binv(r, &d)?;
                // Degenerate exchange: values are unchanged, the incoming
                // column keeps its current bound value as a basic value.
                self.status[b] = ColStatus::AtLower;
                self.value[b] = 0.0;
                self.basis[r] = j;
                self.status[j] = ColStatus::Basic;
            }
        }
        Ok(())
    }

    pub(crate) fn solve(mut self, lp: &LinearProgram) -> Result<Solution, SolveError> {
        if self.n_artificial > 0 {
            if let Some(_col) = self.run_phase(true)? {
                return Err(SolveError::Numeric {
                    detail: "phase 1 reported an unbounded ray".into(),
                });
            }
            self.refactor()?;
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if self.infeasibility() > crate::tol::FEASIBILITY * scale {
                let mut rows: Vec<RowId> = Vec::new();
                for r in 0..self.m {
                    let b = self.basis[r];
                    if self.is_artificial(b) && self.value[b].abs() > crate::tol::FEASIBILITY {
                        rows.push(RowId(r));
                    }
                }
                let detail = rows
                    .iter()
                    .map(|r| lp.row(*r).tag.clone())
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(SolveError::Infeasible {
                    rows,
                    detail: format!("no feasible point; unresolved rows: [{detail}]"),
                });
            }
            self.retire_artificials()?;
            self.refactor()?;
        }

        self.bland = false;
        self.degenerate_run = 0;
        if let Some(col) = self.run_phase(false)? {
            let name = if col < self.n_struct {
                lp.var(VarId(col)).name.clone()
            } else {
                format!("slack of {}", lp.row(RowId(col - self.n_struct)).tag)
            };
            return Err(SolveError::Unbounded { column: name });
        }
        self.refactor()?;

        let y = self.duals(false);
        let primal: Vec<f64> = (0..self.n_struct).map(|j| self.value[j]).collect();
        let reduced: Vec<f64> = (0..self.n_struct)
            .map(|j| self.reduced_cost(j, &y, false))
            .collect();
        let objective = lp.objective_value(&primal);
        Ok(Solution::new(objective, primal, y, reduced))
    }
}

fn initial_position(lower: f64, upper: f64) -> (ColStatus, f64) {
    if lower.is_finite() {
        (ColStatus::AtLower, lower)
    } else if upper.is_finite() {
        (ColStatus::AtUpper, upper)
    } else {
        (ColStatus::FreeZero, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use crate::program::{LinearProgram, Sense};
    use crate::solve_lp;

    #[test]
    fn single_lower_bound_constraint() {
        let mut lp = LinearProgram::new("min-x");
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
        let r = lp.add_row("floor", Sense::Ge, 3.0, vec![(x, 1.0)]).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value(x) - 3.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.dual(r) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new("bad");
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0).unwrap();
        lp.add_row("ge", Sense::Ge, 1.0, vec![(x, 1.0)]).unwrap();
        lp.add_row("le", Sense::Le, 0.0, vec![(x, 1.0)]).unwrap();
        match solve_lp(&lp) {
            Err(crate::SolveError::Infeasible { .. }) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new("ray");
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
        lp.add_row("cap", Sense::Le, 5.0, vec![(x, 1.0)]).unwrap();
        match solve_lp(&lp) {
            Err(crate::SolveError::Unbounded { .. }) => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn bound_flip_path() {
        // max x1 + x2 with x in [0,1]^2 and x1 + x2 <= 1.5
        let mut lp = LinearProgram::new("flip");
        let x1 = lp.add_var("x1", 0.0, 1.0, -1.0).unwrap();
        let x2 = lp.add_var("x2", 0.0, 1.0, -1.0).unwrap();
        lp.add_row("cap", Sense::Le, 1.5, vec![(x1, 1.0), (x2, 1.0)])
            .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective + 1.5).abs() < 1e-9);
        assert!((sol.value(x1) + sol.value(x2) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn equality_row_with_negative_rhs() {
        let mut lp = LinearProgram::new("neg");
        let x = lp.add_var("x", f64::NEG_INFINITY, 0.0, -1.0).unwrap();
        let r = lp.add_row("fix", Sense::Eq, -4.0, vec![(x, 2.0)]).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value(x) + 2.0).abs() < 1e-9);
        assert!((sol.dual(r) + 0.5).abs() < 1e-9);
    }
}
