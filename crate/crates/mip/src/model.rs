// SPDX-License-Identifier: Apache-2.0

//! Model description: variables, linear rows and a minimization objective.

use std::fmt;

use crate::MipError;

/// Index of a variable inside a [`MipModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A mixed-integer linear program in minimization form.
///
/// Integer variables must carry finite bounds. Continuous variables may be
/// unbounded on either side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MipModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
}

impl MipModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integer: bool) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integer,
        });
        self.objective.push(0.0);
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, false)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, true)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, true)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(LinearConstraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] = coefficient;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn max_integrality_violation(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.integer)
            .map(|(_, &x)| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), MipError> {
        if self.objective.len() != self.variables.len() {
            return Err(MipError::InvalidModel(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.variables.len()
            )));
        }
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(MipError::InvalidModel(format!("variable {} has a NaN bound", v.name)));
            }
            if v.integer && !(v.lower.is_finite() && v.upper.is_finite()) {
                return Err(MipError::InvalidModel(format!(
                    "integer variable {} needs finite bounds",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(MipError::InvalidModel(format!("row {} has a non-finite rhs", c.name)));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(MipError::InvalidModel(format!(
                        "row {} references undeclared variable {}",
                        c.name, v
                    )));
                }
                if !a.is_finite() {
                    return Err(MipError::InvalidModel(format!(
                        "row {} has a non-finite coefficient on {}",
                        c.name, v
                    )));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(MipError::InvalidModel("non-finite objective coefficient".into()));
        }
        Ok(())
    }
}
