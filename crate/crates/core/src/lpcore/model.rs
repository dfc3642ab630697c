use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Handle to a variable of a [`LinearModel`]. Handles are dense indices and
/// stay valid for the lifetime of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint of a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConId(usize);

impl ConId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(i: usize) -> Self {
        ConId(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("variable `{name}` has inverted bounds [{lower}, {upper}]")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("variable `{0}` has a NaN bound")]
    NanBound(String),
    #[error("constraint `{constraint}` references unknown variable #{index}")]
    UnknownVariable { constraint: String, index: usize },
    #[error("objective references unknown variable #{0}")]
    UnknownObjectiveVariable(usize),
    #[error("non-finite coefficient in `{0}`")]
    NonFiniteCoefficient(String),
    #[error("constraint `{0}` has a non-finite right-hand side")]
    NonFiniteRhs(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Coefficients sorted by variable index, duplicates merged, zeros dropped.
    pub row: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimization LP: `min c'x + k` subject to linear rows and variable bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    objective_constant: f64,
    var_lookup: HashMap<String, VarId>,
    con_lookup: HashMap<String, ConId>,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, ModelError> {
        let name = name.into();
        check_bounds(&name, lower, upper)?;
        if self.var_lookup.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let id = VarId(self.variables.len());
        self.var_lookup.insert(name.clone(), id);
        self.variables.push(Variable { name, lower, upper });
        self.objective.push(0.0);
        Ok(id)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        row: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConId, ModelError> {
        let name = name.into();
        if self.con_lookup.contains_key(&name) {
            return Err(ModelError::DuplicateConstraint(name));
        }
        if !rhs.is_finite() {
            return Err(ModelError::NonFiniteRhs(name));
        }
        let mut entries: Vec<(VarId, f64)> = Vec::new();
        for (var, coef) in row {
            if var.0 >= self.variables.len() {
                return Err(ModelError::UnknownVariable { constraint: name, index: var.0 });
            }
            if !coef.is_finite() {
                return Err(ModelError::NonFiniteCoefficient(name));
            }
            entries.push((var, coef));
        }
        entries.sort_by_key(|&(v, _)| v);
        let mut row: Vec<(VarId, f64)> = Vec::with_capacity(entries.len());
        for (var, coef) in entries {
            match row.last_mut() {
                Some((last, acc)) if *last == var => *acc += coef,
                _ => row.push((var, coef)),
            }
        }
        row.retain(|&(_, c)| c != 0.0);

        let id = ConId(self.constraints.len());
        self.con_lookup.insert(name.clone(), id);
        self.constraints.push(Constraint { name, row, relation, rhs });
        Ok(id)
    }

    /// Replaces the objective with the given sparse cost vector. Repeated
    /// entries for the same variable are summed.
    pub fn set_objective(&mut self, costs: impl IntoIterator<Item = (VarId, f64)>) -> Result<(), ModelError> {
        let mut objective = vec![0.0; self.variables.len()];
        for (var, c) in costs {
            if var.0 >= objective.len() {
                return Err(ModelError::UnknownObjectiveVariable(var.0));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFiniteCoefficient("objective".into()));
            }
            objective[var.0] += c;
        }
        self.objective = objective;
        Ok(())
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.objective[var.0] = cost;
    }

    pub fn set_objective_constant(&mut self, constant: f64) {
        self.objective_constant = constant;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = &mut self.variables[var.0];
        check_bounds(&v.name, lower, upper)?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn lookup_variable(&self, name: &str) -> Option<VarId> {
        self.var_lookup.get(name).copied()
    }

    pub fn lookup_constraint(&self, name: &str) -> Option<ConId> {
        self.con_lookup.get(name).copied()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.row.len()).sum()
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn constraint(&self, con: ConId) -> &Constraint {
        &self.constraints[con.0]
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn con_ids(&self) -> impl Iterator<Item = ConId> {
        (0..self.constraints.len()).map(ConId)
    }

    /// Dense cost vector, one entry per variable.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    /// `c'x + k` for an arbitrary point.
    pub fn evaluate_objective(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_constant
    }

    /// Row activity `a_i'x`.
    pub fn row_activity(&self, con: ConId, x: &[f64]) -> f64 {
        self.constraints[con.0].row.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_primal_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in self.variables.iter().enumerate() {
            worst = worst.max(v.lower - x[j]).max(x[j] - v.upper);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(ConId(i), x);
            let viol = match c.relation {
                Relation::Le => act - c.rhs,
                Relation::Ge => c.rhs - act,
                Relation::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

fn check_bounds(name: &str, lower: f64, upper: f64) -> Result<(), ModelError> {
    if lower.is_nan() || upper.is_nan() {
        return Err(ModelError::NanBound(name.to_string()));
    }
    if lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
        return Err(ModelError::InvertedBounds { name: name.to_string(), lower, upper });
    }
    Ok(())
}
