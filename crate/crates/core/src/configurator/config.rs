// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use effitest_mip::{solve, MipModel, Relation, SolveStatus, SolverOptions, VarId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing::{BufferAssignment, EdgeId, NodeId, TimingGraph, TuningBuffer};

/// Known range of one path delay for configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRange {
    pub edge: EdgeId,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigFormulation {
    /// Assumed delays eliminated: one row set per distinct shift
    /// `x_src − x_dst`, with `D'` recovered afterwards.
    #[default]
    Reduced,
    /// One assumed delay variable per path.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConfigOptions {
    pub formulation: ConfigFormulation,
    pub solver: SolverOptions,
}

/// Buffer configuration for a designated period.
#[derive(Debug, Clone)]
pub struct ConfigProblem<'a> {
    pub graph: &'a TimingGraph,
    pub period: f64,
    /// One range per required path.
    pub ranges: Vec<EdgeRange>,
    /// `λ` per edge id; every graph path gets a hold row.
    pub hold: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub assignment: BufferAssignment,
    /// `D'` per range, in problem order.
    pub assumed: Vec<f64>,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigOutcome {
    Feasible(Configuration),
    /// No buffer setting meets the period; `tight` lists the paths that
    /// cannot be met on their own, or every path touching a buffer when
    /// the conflict is joint.
    Infeasible { tight: Vec<EdgeId> },
}

impl ConfigOutcome {
    pub fn configuration(&self) -> Option<&Configuration> {
        match self {
            ConfigOutcome::Feasible(c) => Some(c),
            ConfigOutcome::Infeasible { .. } => None,
        }
    }
}

/// Endpoint of a shift: a buffered flip-flop, or `None` for a fixed zero.
type Side = Option<NodeId>;

struct Class {
    max_lower: f64,
    max_upper: f64,
    max_lambda: f64,
}

/// Minimizes `ξ` subject to `T ≥ D' + x_src − x_dst`, `l ≤ D' ≤ u`,
/// `ξ ≥ u − D'`, the buffer grids and `x_src − x_dst ≥ λ`.
pub fn configure_buffers(problem: &ConfigProblem, opts: &ConfigOptions) -> Result<ConfigOutcome> {
    let graph = problem.graph;
    let buffers: BTreeMap<NodeId, TuningBuffer> = graph
        .flip_flops
        .iter()
        .filter_map(|f| f.buffer.map(|b| (f.id, b)))
        .collect();
    let side = |n: NodeId| -> Side { buffers.contains_key(&n).then_some(n) };
    let key = |src: NodeId, dst: NodeId| -> (Side, Side) {
        if src == dst {
            (None, None)
        } else {
            (side(src), side(dst))
        }
    };

    let mut m = MipModel::new();
    let xi = m.add_continuous("xi", 0.0, f64::INFINITY);
    m.set_objective(xi, 1.0);
    let levels: BTreeMap<NodeId, VarId> = buffers
        .iter()
        .map(|(&n, b)| (n, m.add_integer(format!("k{n}"), 0.0, f64::from(b.max_level()))))
        .collect();
    // x_a − x_b as terms + constant.
    let shift = |(a, b): (Side, Side)| -> (Vec<(VarId, f64)>, f64) {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        for (s, sign) in [(a, 1.0), (b, -1.0)] {
            if let Some(n) = s {
                let buf = &buffers[&n];
                terms.push((levels[&n], sign * buf.step()));
                constant += sign * buf.range_start;
            }
        }
        (terms, constant)
    };

    let mut hold_by_class: BTreeMap<(Side, Side), f64> = BTreeMap::new();
    if let Some(lambda) = problem.hold {
        for e in &graph.edges {
            let v = hold_by_class.entry(key(e.src, e.dst)).or_insert(f64::NEG_INFINITY);
            *v = v.max(lambda[e.id]);
        }
    }

    // Rows over fixed shifts are checked directly.
    let mut contradiction = false;
    let mut add_row = |m: &mut MipModel, name: String, terms: Vec<(VarId, f64)>, rel: Relation, rhs: f64| {
        if terms.is_empty() {
            let ok = match rel {
                Relation::Le => 0.0 <= rhs + 1e-9,
                Relation::Ge => 0.0 >= rhs - 1e-9,
                Relation::Eq => rhs.abs() <= 1e-9,
            };
            contradiction |= !ok;
        } else {
            m.add_constraint(name, terms, rel, rhs);
        }
    };
    match opts.formulation {
        ConfigFormulation::Reduced => {
            let mut classes: BTreeMap<(Side, Side), Class> = BTreeMap::new();
            for r in &problem.ranges {
                let e = graph.edge(r.edge);
                let c = classes.entry(key(e.src, e.dst)).or_insert(Class {
                    max_lower: f64::NEG_INFINITY,
                    max_upper: f64::NEG_INFINITY,
                    max_lambda: f64::NEG_INFINITY,
                });
                c.max_lower = c.max_lower.max(r.lower);
                c.max_upper = c.max_upper.max(r.upper);
            }
            for (k, &l) in &hold_by_class {
                classes
                    .entry(*k)
                    .or_insert(Class {
                        max_lower: f64::NEG_INFINITY,
                        max_upper: f64::NEG_INFINITY,
                        max_lambda: f64::NEG_INFINITY,
                    })
                    .max_lambda = l;
            }
            for (k, c) in &classes {
                let (terms, constant) = shift(*k);
                let name = class_name(*k);
                if c.max_lower.is_finite() {
                    // s ≤ T − max l
                    add_row(
                        &mut m,
                        format!("lo_{name}"),
                        terms.clone(),
                        Relation::Le,
                        problem.period - c.max_lower - constant,
                    );
                    // s − ξ ≤ T − max u
                    let mut t = terms.clone();
                    t.push((xi, -1.0));
                    add_row(
                        &mut m,
                        format!("up_{name}"),
                        t,
                        Relation::Le,
                        problem.period - c.max_upper - constant,
                    );
                }
                if c.max_lambda.is_finite() {
                    add_row(&mut m, format!("hold_{name}"), terms, Relation::Ge, c.max_lambda - constant);
                }
            }
        }
        ConfigFormulation::Full => {
            for r in &problem.ranges {
                let e = graph.edge(r.edge);
                let d = m.add_continuous(format!("d{}", r.edge), r.lower, r.upper);
                let (mut terms, constant) = shift(key(e.src, e.dst));
                terms.push((d, 1.0));
                m.add_constraint(format!("setup{}", r.edge), terms, Relation::Le, problem.period - constant);
                m.add_constraint(format!("gap{}", r.edge), vec![(xi, 1.0), (d, 1.0)], Relation::Ge, r.upper);
            }
            if let Some(lambda) = problem.hold {
                for e in &graph.edges {
                    let (terms, constant) = shift(key(e.src, e.dst));
                    add_row(&mut m, format!("hold{}", e.id), terms, Relation::Ge, lambda[e.id] - constant);
                }
            }
        }
    }

    if contradiction {
        return Ok(ConfigOutcome::Infeasible {
            tight: tight_paths(problem, &buffers),
        });
    }
    let sol = solve(&m, &opts.solver)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(ConfigOutcome::Infeasible {
            tight: tight_paths(problem, &buffers),
        }),
        other => {
            return Err(Error::Solver {
                stage: "configuration",
                detail: format!("{other:?} after {} nodes", sol.nodes),
            })
        }
    }
    let mut assignment = vec![0.0; graph.num_nodes()];
    for (&n, &v) in &levels {
        let b = &buffers[&n];
        let k = sol.value(v).round().clamp(0.0, f64::from(b.max_level())) as u32;
        assignment[n] = b.level_value(k);
    }
    let assumed: Vec<f64> = problem
        .ranges
        .iter()
        .map(|r| {
            let e = graph.edge(r.edge);
            let s = if e.src == e.dst {
                0.0
            } else {
                assignment[e.src] - assignment[e.dst]
            };
            r.upper.min(problem.period - s).max(r.lower)
        })
        .collect();
    let xi = problem
        .ranges
        .iter()
        .zip(&assumed)
        .map(|(r, d)| r.upper - d)
        .fold(0.0, f64::max);
    Ok(ConfigOutcome::Feasible(Configuration {
        assignment,
        assumed,
        xi,
    }))
}

fn class_name((a, b): (Side, Side)) -> String {
    let f = |s: Side| s.map_or("z".to_string(), |n| n.to_string());
    format!("{}_{}", f(a), f(b))
}

fn tight_paths(problem: &ConfigProblem, buffers: &BTreeMap<NodeId, TuningBuffer>) -> Vec<EdgeId> {
    let graph = problem.graph;
    let range = |n: NodeId| buffers.get(&n).map_or((0.0, 0.0), |b| (b.min_value(), b.max_value()));
    let alone: Vec<EdgeId> = problem
        .ranges
        .iter()
        .filter(|r| {
            let e = graph.edge(r.edge);
            let best = if e.src == e.dst { 0.0 } else { range(e.src).0 - range(e.dst).1 };
            r.lower + best > problem.period + 1e-9
        })
        .map(|r| r.edge)
        .collect();
    if !alone.is_empty() {
        return alone;
    }
    problem
        .ranges
        .iter()
        .filter(|r| {
            let e = graph.edge(r.edge);
            buffers.contains_key(&e.src) || buffers.contains_key(&e.dst)
        })
        .map(|r| r.edge)
        .collect()
}
