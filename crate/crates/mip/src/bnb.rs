// SPDX-License-Identifier: Apache-2.0

//! Best-bound branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::MipModel;
use crate::simplex::{solve_relaxation, LpOutcome, LpStatus};
use crate::{MipError, MipSolution, SolveStatus, SolverOptions};

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    lp: LpOutcome,
    depth: usize,
    id: usize,
}

impl Node {
    fn bound(&self) -> f64 {
        self.lp.objective
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is popped first. Lowest
    // bound wins, then the deepest node, then the newest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound()
            .total_cmp(&self.bound())
            .then(self.depth.cmp(&other.depth))
            .then(self.id.cmp(&other.id))
    }
}

/// Picks the integer variable whose relaxation value is farthest from an
/// integer. Ties go to the lowest index.
fn most_fractional(model: &MipModel, values: &[f64], tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, v) in model.variables.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let x = values[j];
        let frac = (x - x.floor()).min(x.ceil() - x);
        if frac <= tol {
            continue;
        }
        if best.is_none_or(|(_, _, bf)| frac > bf + 1e-12) {
            best = Some((j, x, frac));
        }
    }
    best.map(|(j, x, _)| (j, x))
}

pub fn branch_and_bound(model: &MipModel, opts: &SolverOptions) -> Result<MipSolution, MipError> {
    model.validate()?;
    let tol = &opts.tolerances;
    let mut lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    // Integer bounds tightened to the nearest integers inside.
    for (j, v) in model.variables.iter().enumerate() {
        if v.integer {
            lower[j] = (lower[j] - tol.integrality).ceil();
            upper[j] = (upper[j] + tol.integrality).floor();
        }
    }

    let mut lp_iterations = 0usize;
    let root = solve_relaxation(model, &lower, &upper, tol, opts.max_lp_iterations);
    lp_iterations += root.iterations;
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(MipSolution::without_incumbent(SolveStatus::Infeasible, f64::INFINITY, 1, lp_iterations))
        }
        LpStatus::Unbounded => {
            return Ok(MipSolution::without_incumbent(
                SolveStatus::Unbounded,
                f64::NEG_INFINITY,
                1,
                lp_iterations,
            ))
        }
        LpStatus::IterationLimit => {
            return Ok(MipSolution::without_incumbent(
                SolveStatus::IterationLimit,
                f64::NEG_INFINITY,
                1,
                lp_iterations,
            ))
        }
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 1usize;
    heap.push(Node {
        lower,
        upper,
        lp: root,
        depth: 0,
        id: 0,
    });

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0usize;
    let mut hit_limit = false;
    let mut global_bound = f64::NEG_INFINITY;

    let prune_at = |inc: &Option<(Vec<f64>, f64)>| -> f64 {
        match inc {
            Some((_, obj)) => obj - opts.absolute_gap.max(opts.relative_gap * obj.abs()),
            None => f64::INFINITY,
        }
    };

    while let Some(node) = heap.pop() {
        let bound = node.bound();
        global_bound = bound;
        if bound >= prune_at(&incumbent) {
            // Best-bound order: every remaining node is at least as bad.
            heap.clear();
            break;
        }
        if nodes >= opts.max_nodes {
            hit_limit = true;
            heap.push(node);
            break;
        }
        nodes += 1;

        let Some((j, x)) = most_fractional(model, &node.lp.values, tol.integrality) else {
            let mut values = node.lp.values.clone();
            for (k, v) in model.variables.iter().enumerate() {
                if v.integer {
                    values[k] = values[k].round();
                }
            }
            let obj = model.evaluate(&values);
            if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                incumbent = Some((values, obj));
            }
            continue;
        };

        let down = x.floor();
        let up = x.ceil();
        for (lo, hi) in [(node.lower[j], down), (up, node.upper[j])] {
            if lo > hi {
                continue;
            }
            let mut cl = node.lower.clone();
            let mut cu = node.upper.clone();
            cl[j] = lo;
            cu[j] = hi;
            let lp = solve_relaxation(model, &cl, &cu, tol, opts.max_lp_iterations);
            lp_iterations += lp.iterations;
            match lp.status {
                LpStatus::Optimal => {
                    if lp.objective < prune_at(&incumbent) {
                        heap.push(Node {
                            lower: cl,
                            upper: cu,
                            lp,
                            depth: node.depth + 1,
                            id: next_id,
                        });
                        next_id += 1;
                    }
                }
                LpStatus::Infeasible => {}
                LpStatus::Unbounded | LpStatus::IterationLimit => hit_limit = true,
            }
        }
    }

    let remaining_bound = heap.iter().map(Node::bound).fold(f64::INFINITY, f64::min);
    let best_bound = match &incumbent {
        Some((_, obj)) if heap.is_empty() && !hit_limit => *obj,
        _ => remaining_bound.min(global_bound.max(f64::NEG_INFINITY)),
    };

    Ok(match incumbent {
        Some((values, objective)) => MipSolution {
            status: if hit_limit { SolveStatus::IterationLimit } else { SolveStatus::Optimal },
            values,
            objective,
            best_bound,
            nodes,
            lp_iterations,
        },
        None => MipSolution::without_incumbent(
            if hit_limit { SolveStatus::IterationLimit } else { SolveStatus::Infeasible },
            best_bound,
            nodes,
            lp_iterations,
        ),
    })
}
