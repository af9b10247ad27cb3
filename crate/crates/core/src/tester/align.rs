// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use effitest_mip::{solve, MipModel, Relation, SolveStatus, SolverOptions, VarId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing::{BufferAssignment, EdgeId, NodeId, TimingGraph, TuningBuffer};

pub const DEFAULT_K0: f64 = 1000.0;
pub const DEFAULT_KD: f64 = 1.0;

/// How the absolute distances are linearized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// `η ≥ g` and `η ≥ −g`; exact because the weights are positive.
    #[default]
    Compact,
    /// Indicator pairs `z^p`, `z^n` with big-M rows.
    BigM,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignOptions {
    pub k0: f64,
    pub kd: f64,
    pub formulation: Formulation,
    #[serde(skip)]
    pub solver: SolverOptions,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            k0: DEFAULT_K0,
            kd: DEFAULT_KD,
            formulation: Formulation::Compact,
            solver: SolverOptions::default(),
        }
    }
}

/// A batch path with its current delay range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignEdge {
    pub edge: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub lower: f64,
    pub upper: f64,
}

impl AlignEdge {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Choice of the next test period and buffer values for a batch.
#[derive(Debug, Clone)]
pub struct AlignmentProblem<'a> {
    pub edges: Vec<AlignEdge>,
    /// Buffers the optimizer may move, with their grids.
    pub adjustable: BTreeMap<NodeId, TuningBuffer>,
    /// Values of every other flip-flop.
    pub fixed: &'a BufferAssignment,
    /// `x_src − x_dst ≥ λ` rows for paths touching an adjustable buffer.
    pub hold_rows: Vec<(EdgeId, NodeId, NodeId, f64)>,
}

impl<'a> AlignmentProblem<'a> {
    /// Builds the problem for `edges`. When `adjust` is set, every buffered
    /// endpoint of a batch path becomes adjustable and, given `hold`
    /// (`λ` per edge id), every graph path touching one of them contributes a
    /// hold row.
    pub fn new(
        graph: &TimingGraph,
        edges: Vec<AlignEdge>,
        fixed: &'a BufferAssignment,
        adjust: bool,
        hold: Option<&[f64]>,
    ) -> Self {
        let mut adjustable = BTreeMap::new();
        if adjust {
            for e in &edges {
                for n in [e.src, e.dst] {
                    if let Some(b) = graph.buffer(n) {
                        adjustable.insert(n, *b);
                    }
                }
            }
        }
        let mut hold_rows = Vec::new();
        if let Some(lambda) = hold {
            if !adjustable.is_empty() {
                for e in &graph.edges {
                    if adjustable.contains_key(&e.src) || adjustable.contains_key(&e.dst) {
                        hold_rows.push((e.id, e.src, e.dst, lambda[e.id]));
                    }
                }
            }
        }
        Self {
            edges,
            adjustable,
            fixed,
            hold_rows,
        }
    }

    pub fn value_range(&self, node: NodeId) -> (f64, f64) {
        match self.adjustable.get(&node) {
            Some(b) => (b.min_value(), b.max_value()),
            None => (self.fixed[node], self.fixed[node]),
        }
    }

    /// Reachable `x_src − x_dst` for a path.
    pub fn shift_range(&self, src: NodeId, dst: NodeId) -> (f64, f64) {
        if src == dst {
            return (0.0, 0.0);
        }
        let (a0, a1) = self.value_range(src);
        let (b0, b1) = self.value_range(dst);
        (a0 - b1, a1 - b0)
    }

    pub fn period_window(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in &self.edges {
            let (s0, s1) = self.shift_range(e.src, e.dst);
            lo = lo.min(e.center() + s0);
            hi = hi.max(e.center() + s1);
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub period: f64,
    /// Full per-node assignment: adjustable buffers at their chosen levels,
    /// everything else as given.
    pub assignment: BufferAssignment,
    pub objective: f64,
    /// Weight of each problem edge, in problem order.
    pub weights: Vec<f64>,
}

/// Weights by rank of the range centers (ties by edge id): the lower-middle
/// rank gets `k0`, each rank further out `k_d` less, never below `k_d`.
pub fn alignment_weights(edges: &[AlignEdge], k0: f64, kd: f64) -> Vec<f64> {
    let n = edges.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        edges[a]
            .center()
            .total_cmp(&edges[b].center())
            .then(edges[a].edge.cmp(&edges[b].edge))
    });
    let mid = n.saturating_sub(1) / 2;
    let mut w = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        w[i] = (k0 - kd * rank.abs_diff(mid) as f64).max(kd);
    }
    w
}

pub fn weighted_distance(problem: &AlignmentProblem, weights: &[f64], period: f64, x: &[f64]) -> f64 {
    problem
        .edges
        .iter()
        .zip(weights)
        .map(|(e, w)| w * (period - (e.center() + x[e.src] - x[e.dst])).abs())
        .sum()
}

/// Solves the alignment model: minimize `Σ k_e·|T − (c_e + x_src − x_dst)|`
/// over a continuous `T` and on-grid adjustable buffers, under the hold rows.
/// The returned period is the lowest minimizer for the chosen buffers.
pub fn compute_frequency(problem: &AlignmentProblem, opts: &AlignOptions) -> Result<Alignment> {
    assert!(!problem.edges.is_empty(), "alignment needs at least one path");
    let weights = alignment_weights(&problem.edges, opts.k0, opts.kd);
    if problem.adjustable.is_empty() {
        return Ok(weighted_median(problem, weights));
    }

    // Hold rows with one adjustable end are level bounds on that buffer.
    let mut level_bounds: BTreeMap<NodeId, (i64, i64)> = problem
        .adjustable
        .iter()
        .map(|(&n, b)| (n, (0, i64::from(b.max_level()))))
        .collect();
    let mut pair_rows = Vec::new();
    for &(edge, src, dst, lambda) in &problem.hold_rows {
        let sa = problem.adjustable.get(&src);
        let da = problem.adjustable.get(&dst);
        match (sa, da) {
            (Some(_), Some(_)) if src != dst => pair_rows.push((edge, src, dst, lambda)),
            (Some(_), Some(_)) => {
                if lambda > 1e-9 {
                    return Err(Error::AlignmentInfeasible { edges: vec![edge] });
                }
            }
            (Some(b), None) => {
                // x_src ≥ λ + x_dst
                let lb = level_at_least(b, lambda + problem.fixed[dst]);
                let e = level_bounds.get_mut(&src).expect("adjustable");
                e.0 = e.0.max(lb);
            }
            (None, Some(b)) => {
                // x_dst ≤ x_src − λ
                let ub = level_at_most(b, problem.fixed[src] - lambda);
                let e = level_bounds.get_mut(&dst).expect("adjustable");
                e.1 = e.1.min(ub);
            }
            (None, None) => {}
        }
    }
    let crossed: BTreeSet<NodeId> = level_bounds.iter().filter(|(_, &(lo, hi))| lo > hi).map(|(&n, _)| n).collect();
    if !crossed.is_empty() {
        let edges = problem
            .hold_rows
            .iter()
            .filter(|r| crossed.contains(&r.1) || crossed.contains(&r.2))
            .map(|r| r.0)
            .collect();
        return Err(Error::AlignmentInfeasible { edges });
    }

    let (t_lo, t_hi) = problem.period_window();
    let mut m = MipModel::new();
    let t = m.add_continuous("T", t_lo, t_hi);
    let mut levels: BTreeMap<NodeId, VarId> = BTreeMap::new();
    for (&n, &(lo, hi)) in &level_bounds {
        levels.insert(n, m.add_integer(format!("k{n}"), lo as f64, hi as f64));
    }
    // g_e = T − x_src + x_dst − c_e written as terms + constant.
    let shift_terms = |src: NodeId, dst: NodeId, sign: f64| -> (Vec<(VarId, f64)>, f64) {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        for (node, s) in [(src, -sign), (dst, sign)] {
            if src == dst {
                break;
            }
            match problem.adjustable.get(&node) {
                Some(b) => {
                    terms.push((levels[&node], s * b.step()));
                    constant += s * b.range_start;
                }
                None => constant += s * problem.fixed[node],
            }
        }
        (terms, constant)
    };

    let max_u = problem
        .edges
        .iter()
        .map(|e| e.upper.abs().max(e.lower.abs()))
        .fold(0.0, f64::max);
    let max_shift = problem
        .edges
        .iter()
        .map(|e| {
            let (a, b) = problem.shift_range(e.src, e.dst);
            a.abs().max(b.abs())
        })
        .fold(0.0, f64::max);
    let big_m = 4.0 * (max_u + max_shift + (t_hi - t_lo));

    for (i, e) in problem.edges.iter().enumerate() {
        let eta = m.add_continuous(format!("eta{}", e.edge), 0.0, f64::INFINITY);
        m.set_objective(eta, weights[i]);
        let (sterms, sconst) = shift_terms(e.src, e.dst, 1.0);
        let constant = sconst - e.center();
        // g as a list of terms; rows below move `constant` to the rhs.
        let mut g = vec![(t, 1.0)];
        g.extend(sterms.iter().copied());
        let neg = |v: &[(VarId, f64)]| -> Vec<(VarId, f64)> { v.iter().map(|&(x, a)| (x, -a)).collect() };
        let with = |v: &[(VarId, f64)], extra: &[(VarId, f64)]| -> Vec<(VarId, f64)> {
            v.iter().chain(extra).copied().collect()
        };
        match opts.formulation {
            Formulation::Compact => {
                m.add_constraint(format!("pos{}", e.edge), with(&g, &[(eta, -1.0)]), Relation::Le, -constant);
                m.add_constraint(format!("neg{}", e.edge), with(&neg(&g), &[(eta, -1.0)]), Relation::Le, constant);
            }
            Formulation::BigM => {
                let zp = m.add_binary(format!("zp{}", e.edge));
                let zn = m.add_binary(format!("zn{}", e.edge));
                // g ≤ M z^p
                m.add_constraint(format!("c8_{}", e.edge), with(&g, &[(zp, -big_m)]), Relation::Le, -constant);
                // g − η ≤ M(1 − z^p)
                m.add_constraint(
                    format!("c9_{}", e.edge),
                    with(&g, &[(eta, -1.0), (zp, big_m)]),
                    Relation::Le,
                    big_m - constant,
                );
                // −g + η ≤ M(1 − z^p)
                m.add_constraint(
                    format!("c10_{}", e.edge),
                    with(&neg(&g), &[(eta, 1.0), (zp, big_m)]),
                    Relation::Le,
                    big_m + constant,
                );
                // −g ≤ M z^n
                m.add_constraint(format!("c11_{}", e.edge), with(&neg(&g), &[(zn, -big_m)]), Relation::Le, constant);
                // −g − η ≤ M(1 − z^n)
                m.add_constraint(
                    format!("c12_{}", e.edge),
                    with(&neg(&g), &[(eta, -1.0), (zn, big_m)]),
                    Relation::Le,
                    big_m + constant,
                );
                // g + η ≤ M(1 − z^n)
                m.add_constraint(
                    format!("c13_{}", e.edge),
                    with(&g, &[(eta, 1.0), (zn, big_m)]),
                    Relation::Le,
                    big_m - constant,
                );
            }
        }
    }
    for &(edge, src, dst, lambda) in &pair_rows {
        // x_src − x_dst ≥ λ
        let (terms, constant) = shift_terms(src, dst, -1.0);
        m.add_constraint(format!("hold{edge}"), terms, Relation::Ge, lambda - constant);
    }

    let sol = solve(&m, &opts.solver)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::AlignmentInfeasible {
                edges: pair_rows.iter().map(|r| r.0).collect(),
            })
        }
        other => {
            return Err(Error::Solver {
                stage: "alignment",
                detail: format!("{other:?} after {} nodes", sol.nodes),
            })
        }
    }
    let mut assignment = problem.fixed.clone();
    for (&n, &v) in &levels {
        let b = &problem.adjustable[&n];
        let k = sol.value(v).round().clamp(0.0, f64::from(b.max_level())) as u32;
        assignment[n] = b.level_value(k);
    }
    // For fixed buffers the best period is a weighted median of the shifted
    // centers. Taking the lowest one puts T on some path's center, which
    // guarantees that path's range is halved.
    let fixed = AlignmentProblem {
        edges: problem.edges.clone(),
        adjustable: BTreeMap::new(),
        fixed: &assignment,
        hold_rows: Vec::new(),
    };
    let mut out = weighted_median(&fixed, weights);
    out.assignment = assignment;
    Ok(out)
}

/// Lowest level whose value is at least `x`, tolerant of rounding. May
/// exceed the top level when none qualifies.
fn level_at_least(b: &TuningBuffer, x: f64) -> i64 {
    let top = i64::from(b.max_level());
    let step = b.step();
    if step <= 0.0 {
        return if b.range_start >= x - 1e-9 { 0 } else { top + 1 };
    }
    let k = ((x - b.range_start) / step - 1e-9).ceil();
    k.clamp(0.0, (top + 1) as f64) as i64
}

/// Highest level whose value is at most `x`; −1 when none qualifies.
fn level_at_most(b: &TuningBuffer, x: f64) -> i64 {
    let top = i64::from(b.max_level());
    let step = b.step();
    if step <= 0.0 {
        return if b.range_start <= x + 1e-9 { 0 } else { -1 };
    }
    let k = ((x - b.range_start) / step + 1e-9).floor();
    k.clamp(-1.0, top as f64) as i64
}

/// With every buffer fixed the model reduces to a weighted median of the
/// shifted centers; the lowest minimizer is returned.
fn weighted_median(problem: &AlignmentProblem, weights: Vec<f64>) -> Alignment {
    let x = problem.fixed;
    let mut pts: Vec<(f64, f64)> = problem
        .edges
        .iter()
        .zip(&weights)
        .map(|(e, &w)| (e.center() + x[e.src] - x[e.dst], w))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut period = pts[0].0;
    for &(c, w) in &pts {
        acc += w;
        period = c;
        if acc >= 0.5 * total {
            break;
        }
    }
    let objective = weighted_distance(problem, &weights, period, x);
    Alignment {
        period,
        assignment: x.clone(),
        objective,
        weights,
    }
}
