// SPDX-License-Identifier: Apache-2.0

//! A small mixed-integer linear solver.
//!
//! Models are built with [`MipModel`] and solved with [`solve`]: a dense
//! bounded-variable simplex provides LP relaxations and a best-bound
//! branch-and-bound search enforces integrality. It is meant for the
//! few-dozen-variable models that appear in buffer tuning, not as a
//! replacement for an industrial solver.

mod bnb;
mod lp_format;
mod model;
mod simplex;

pub use lp_format::write_lp;
pub use model::{LinearConstraint, MipModel, Relation, VarId, Variable};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MipError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Numerical tolerances shared by the simplex and the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub integrality: f64,
    pub optimality: f64,
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-6,
            integrality: 1e-6,
            optimality: 1e-9,
            pivot: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    pub max_nodes: usize,
    pub max_lp_iterations: usize,
    pub absolute_gap: f64,
    pub relative_gap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_nodes: 200_000,
            max_lp_iterations: 50_000,
            absolute_gap: 1e-9,
            relative_gap: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// A node or simplex budget ran out. `values` holds the best incumbent,
    /// if any was found.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Lower bound on the optimum proven by the search.
    pub best_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MipSolution {
    fn without_incumbent(status: SolveStatus, best_bound: f64, nodes: usize, lp_iterations: usize) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            best_bound,
            nodes,
            lp_iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

/// Solves `model` to proven optimality, or reports why it could not.
pub fn solve(model: &MipModel, opts: &SolverOptions) -> Result<MipSolution, MipError> {
    bnb::branch_and_bound(model, opts)
}

/// Solves the continuous relaxation only, ignoring integrality flags.
pub fn solve_lp(model: &MipModel, opts: &SolverOptions) -> Result<MipSolution, MipError> {
    model.validate()?;
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let out = simplex::solve_relaxation(model, &lower, &upper, &opts.tolerances, opts.max_lp_iterations);
    let status = match out.status {
        simplex::LpStatus::Optimal => SolveStatus::Optimal,
        simplex::LpStatus::Infeasible => SolveStatus::Infeasible,
        simplex::LpStatus::Unbounded => SolveStatus::Unbounded,
        simplex::LpStatus::IterationLimit => SolveStatus::IterationLimit,
    };
    if status == SolveStatus::Optimal {
        Ok(MipSolution {
            status,
            best_bound: out.objective,
            objective: out.objective,
            values: out.values,
            nodes: 1,
            lp_iterations: out.iterations,
        })
    } else {
        Ok(MipSolution::without_incumbent(status, f64::NAN, 1, out.iterations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn single_integer_lower_bound() {
        let mut m = MipModel::new();
        let x = m.add_integer("x", 0.0, 10.0);
        m.set_objective(x, 1.0);
        m.add_constraint("c", vec![(x, 1.0)], Relation::Ge, 3.0);
        let s = solve(&m, &opts()).unwrap();
        assert!(s.is_optimal());
        assert_eq!(s.value(x), 3.0);
    }

    #[test]
    fn two_binaries_capacity() {
        let mut m = MipModel::new();
        let x = m.add_binary("x");
        let y = m.add_binary("y");
        m.set_objective(x, -1.0);
        m.set_objective(y, -1.0);
        m.add_constraint("cap", vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.5);
        let s = solve(&m, &opts()).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective + 1.0).abs() < 1e-9);
        // Lowest-index tie-breaking is deterministic but either point is optimal.
        assert!((s.value(x) + s.value(y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable_absolute_value() {
        // min |t - 3| + |t - 7| + |t - 4| -> t = 4, objective 4
        let mut m = MipModel::new();
        let t = m.add_continuous("t", f64::NEG_INFINITY, f64::INFINITY);
        for (i, c) in [3.0, 7.0, 4.0].into_iter().enumerate() {
            let e = m.add_continuous(format!("e{i}"), 0.0, f64::INFINITY);
            m.set_objective(e, 1.0);
            m.add_constraint("p", vec![(e, 1.0), (t, -1.0)], Relation::Ge, -c);
            m.add_constraint("n", vec![(e, 1.0), (t, 1.0)], Relation::Ge, c);
        }
        let s = solve(&m, &opts()).unwrap();
        assert!((s.objective - 4.0).abs() < 1e-9);
        assert!((s.value(t) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows() {
        let mut m = MipModel::new();
        let x = m.add_continuous("x", 0.0, 5.0);
        m.add_constraint("a", vec![(x, 1.0)], Relation::Ge, 6.0);
        assert_eq!(solve(&m, &opts()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn integer_infeasible_but_lp_feasible() {
        let mut m = MipModel::new();
        let x = m.add_integer("x", 0.0, 3.0);
        m.add_constraint("a", vec![(x, 2.0)], Relation::Eq, 3.0);
        assert_eq!(solve(&m, &opts()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = MipModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.set_objective(x, -1.0);
        assert_eq!(solve(&m, &opts()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn upper_bounded_only_variable() {
        let mut m = MipModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, 2.5);
        m.set_objective(x, -1.0);
        let s = solve(&m, &opts()).unwrap();
        assert!((s.value(x) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn equality_rows_and_negative_rhs() {
        // min x + 2y s.t. x - y = -2, x >= -5, y in [0, 10]  -> y = x + 2, min 3x + 4 at x = -2
        let mut m = MipModel::new();
        let x = m.add_continuous("x", -5.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.set_objective(x, 1.0);
        m.set_objective(y, 2.0);
        m.add_constraint("eq", vec![(x, 1.0), (y, -1.0)], Relation::Eq, -2.0);
        let s = solve(&m, &opts()).unwrap();
        assert!((s.value(x) + 2.0).abs() < 1e-9, "{:?}", s.values);
        assert!((s.objective + 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unbounded_integer() {
        let mut m = MipModel::new();
        m.add_integer("k", 0.0, f64::INFINITY);
        assert!(matches!(solve(&m, &opts()), Err(MipError::InvalidModel(_))));
    }

    #[test]
    fn deterministic_repeat() {
        let mut m = MipModel::new();
        let vars: Vec<_> = (0..4).map(|i| m.add_integer(format!("x{i}"), 0.0, 3.0)).collect();
        for (i, &v) in vars.iter().enumerate() {
            m.set_objective(v, -(1.0 + i as f64 * 0.5));
        }
        m.add_constraint("w", vars.iter().map(|&v| (v, 2.0)).collect(), Relation::Le, 7.0);
        let a = solve(&m, &opts()).unwrap();
        let b = solve(&m, &opts()).unwrap();
        assert_eq!(a.values, b.values);
    }
}
