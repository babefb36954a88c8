//! Problem representation: variables with bounds, tagged constraint rows and
//! a linear minimization objective.
//!
//! Rows are addressed by stable string tags (e.g. `balance:bus3:t17`) so that
//! model builders can retrieve dual values without depending on row ordering.

use std::collections::BTreeMap;

use crate::ModelError;

/// Handle to a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub(crate) usize);

impl RowId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Constraint sense relative to the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

#[derive(Debug, Clone)]
pub struct RowDef {
    pub tag: String,
    /// Coefficients sorted by variable index, one entry per variable.
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear minimization program with bounded (optionally integer) variables.
///
/// The objective is always minimized; maximize by negating costs. Objective
/// value is `Σ cost_j · x_j + objective_constant`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    name: String,
    vars: Vec<VarDef>,
    rows: Vec<RowDef>,
    tags: BTreeMap<String, RowId>,
    objective_constant: f64,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        LinearProgram {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds a continuous variable. Infinite bounds are allowed; `lower > upper`
    /// is representable and yields an infeasible program.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> Result<VarId, ModelError> {
        self.push_var(name.into(), lower, upper, cost, false)
    }

    /// Adds an integer-constrained variable. Bounds must be finite so that
    /// branch-and-bound terminates.
    pub fn add_integer_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if !lower.is_finite() || !upper.is_finite() {
            return Err(ModelError::UnboundedInteger { name });
        }
        self.push_var(name, lower, upper, cost, true)
    }

    /// Adds a binary variable (integer in `[0, 1]`).
    pub fn add_binary_var(
        &mut self,
        name: impl Into<String>,
        cost: f64,
    ) -> Result<VarId, ModelError> {
        self.add_integer_var(name, 0.0, 1.0, cost)
    }

    fn push_var(
        &mut self,
        name: String,
        lower: f64,
        upper: f64,
        cost: f64,
        integer: bool,
    ) -> Result<VarId, ModelError> {
        if lower.is_nan() || upper.is_nan() || !cost.is_finite() {
            return Err(ModelError::NonFinite {
                subject: format!("variable {name}"),
            });
        }
        let id = VarId(self.vars.len());
        self.vars.push(VarDef {
            name,
            lower,
            upper,
            cost,
            integer,
        });
        Ok(id)
    }

    /// Adds a constraint row. Duplicate variables in `terms` are summed;
    /// the tag must be unique within the program.
    pub fn add_row(
        &mut self,
        tag: impl Into<String>,
        sense: Sense,
        rhs: f64,
        terms: impl IntoIterator<Item = (VarId, f64)>,
    ) -> Result<RowId, ModelError> {
        let tag = tag.into();
        if self.tags.contains_key(&tag) {
            return Err(ModelError::DuplicateTag { tag });
        }
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite {
                subject: format!("rhs of row {tag}"),
            });
        }
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (var, coeff) in terms {
            if var.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable {
                    row: tag,
                    index: var.0,
                });
            }
            if !coeff.is_finite() {
                return Err(ModelError::NonFinite {
                    subject: format!("coefficient of {} in row {tag}", self.vars[var.0].name),
                });
            }
            *merged.entry(var).or_insert(0.0) += coeff;
        }
        let id = RowId(self.rows.len());
        self.rows.push(RowDef {
            tag: tag.clone(),
            terms: merged.into_iter().collect(),
            sense,
            rhs,
        });
        self.tags.insert(tag, id);
        Ok(id)
    }

    /// Constant term added to the objective (e.g. sunk costs kept out of the
    /// variable space).
    pub fn add_objective_constant(&mut self, value: f64) {
        self.objective_constant += value;
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id.0]
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &VarDef)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i), v))
    }

    pub fn row(&self, id: RowId) -> &RowDef {
        &self.rows[id.0]
    }

    pub fn rows(&self) -> impl Iterator<Item = (RowId, &RowDef)> {
        self.rows.iter().enumerate().map(|(i, r)| (RowId(i), r))
    }

    pub fn row_by_tag(&self, tag: &str) -> Option<RowId> {
        self.tags.get(tag).copied()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    /// Objective value of a primal point (including the constant term).
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let linear: f64 = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, xi)| v.cost * xi)
            .sum();
        linear + self.objective_constant
    }

    /// Row activity `Σ a_ij x_j` of a primal point.
    pub fn row_activity(&self, id: RowId, x: &[f64]) -> f64 {
        self.rows[id.0]
            .terms
            .iter()
            .map(|(v, a)| a * x[v.0])
            .sum()
    }
}
