// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use super::align::{compute_frequency, AlignEdge, AlignOptions, AlignmentProblem};
use super::log::{EdgeStep, IterationRecord};
use crate::error::{Error, Result};
use crate::scheduler::TestBatch;
use crate::timing::{BufferAssignment, ChipInstance, DelayModel, EdgeId, TimingGraph};

/// Current knowledge `l ≤ D ≤ u` about one path delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBound {
    pub edge: EdgeId,
    pub lower: f64,
    pub upper: f64,
}

impl DelayBound {
    /// The ±3σ window of the path's setup delay.
    pub fn initial(graph: &TimingGraph, model: &DelayModel, edge: EdgeId) -> Self {
        let v = graph.edge(edge).setup_var;
        let (m, s) = (model.mean(v), model.std_dev(v));
        Self {
            edge,
            lower: m - 3.0 * s,
            upper: m + 3.0 * s,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, d: f64) -> bool {
        self.lower <= d && d <= self.upper
    }

    /// Applies a test result at `value = T − x_src + x_dst`. A pass caps the
    /// upper bound, a fail raises the lower bound. A result that contradicts
    /// the range collapses it onto the violated edge; returns whether that
    /// happened.
    pub fn update(&mut self, value: f64, pass: bool) -> bool {
        if pass {
            if value < self.lower {
                self.upper = self.lower;
                return true;
            }
            self.upper = self.upper.min(value);
        } else {
            if value > self.upper {
                self.lower = self.upper;
                return true;
            }
            self.lower = self.lower.max(value);
        }
        false
    }

    /// Done once the range is no wider than `resolution`.
    pub fn resolved(&self, resolution: f64) -> bool {
        self.width() <= resolution * (1.0 + 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TesterConfig {
    /// Stop width `ε` of a delay range.
    pub resolution: f64,
    /// Guard against a non-terminating loop; tripping it is a bug.
    pub max_iterations: usize,
    /// Whether buffers may move during test. When off, all buffers stay at
    /// the base assignment.
    pub align: bool,
    pub align_options: AlignOptions,
}

impl Default for TesterConfig {
    fn default() -> Self {
        Self {
            resolution: 0.01,
            max_iterations: 10_000,
            align: true,
            align_options: AlignOptions::default(),
        }
    }
}

/// `6·σ̄/2⁸` with `σ̄` the mean setup-delay deviation over all paths.
pub fn default_resolution(graph: &TimingGraph, model: &DelayModel) -> f64 {
    if graph.edges.is_empty() {
        return 1e-3;
    }
    let mean_sd = graph.edges.iter().map(|e| model.std_dev(e.setup_var)).sum::<f64>() / graph.num_edges() as f64;
    6.0 * mean_sd / 256.0
}

/// A path passes iff `D + x_src − x_dst ≤ T` on the chip.
pub fn apply_frequency_step(
    graph: &TimingGraph,
    edges: &[EdgeId],
    chip: &ChipInstance,
    period: f64,
    x: &BufferAssignment,
) -> Vec<bool> {
    edges
        .iter()
        .map(|&e| {
            let edge = graph.edge(e);
            chip.true_delays[edge.setup_var] + x[edge.src] - x[edge.dst] <= period
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Final bounds in batch order.
    pub bounds: Vec<DelayBound>,
    pub iterations: usize,
    /// Paths whose true delay turned out to lie outside the initial window.
    pub out_of_window: Vec<EdgeId>,
}

/// Context shared by every batch of one chip.
#[derive(Debug, Clone, Copy)]
pub struct TestSetup<'a> {
    pub graph: &'a TimingGraph,
    pub model: &'a DelayModel,
    /// Buffer values at the start of each batch.
    pub base: &'a BufferAssignment,
    pub config: &'a TesterConfig,
    /// `λ` per edge id, if hold rows apply.
    pub hold: Option<&'a [f64]>,
}

/// Frequency stepping on one batch until every path range is resolved.
pub fn run_batch_test(
    setup: &TestSetup,
    batch: &TestBatch,
    chip: &ChipInstance,
    mut log: Option<&mut Vec<IterationRecord>>,
) -> Result<BatchResult> {
    let graph = setup.graph;
    let cfg = setup.config;
    let mut bounds: Vec<DelayBound> = batch
        .edges
        .iter()
        .map(|&e| DelayBound::initial(graph, setup.model, e))
        .collect();
    let mut active: Vec<usize> = (0..bounds.len())
        .filter(|&i| !bounds[i].resolved(cfg.resolution))
        .collect();
    let mut out_of_window = BTreeSet::new();
    let mut seen_pass = vec![false; bounds.len()];
    let mut seen_fail = vec![false; bounds.len()];
    let mut iterations = 0;
    while !active.is_empty() {
        if iterations >= cfg.max_iterations {
            return Err(Error::IterationGuard {
                chip: chip.chip_id,
                batch: batch.index,
                limit: cfg.max_iterations,
            });
        }
        let problem_edges: Vec<AlignEdge> = active
            .iter()
            .map(|&i| {
                let e = graph.edge(bounds[i].edge);
                AlignEdge {
                    edge: e.id,
                    src: e.src,
                    dst: e.dst,
                    lower: bounds[i].lower,
                    upper: bounds[i].upper,
                }
            })
            .collect();
        let problem = AlignmentProblem::new(graph, problem_edges, setup.base, cfg.align, setup.hold);
        let alignment = compute_frequency(&problem, &cfg.align_options)?;
        let x = alignment.assignment;
        let mut period = alignment.period;

        // x_src − x_dst per active path.
        let shifts: Vec<f64> = active
            .iter()
            .map(|&i| {
                let e = graph.edge(bounds[i].edge);
                x[e.src] - x[e.dst]
            })
            .collect();
        let informative = active.iter().zip(&shifts).any(|(&i, s)| {
            let v = period - s;
            v > bounds[i].lower && v < bounds[i].upper
        });
        if !informative {
            let best = (0..active.len())
                .max_by(|&a, &b| alignment.weights[a].total_cmp(&alignment.weights[b]).then(b.cmp(&a)))
                .expect("non-empty");
            period = bounds[active[best]].center() + shifts[best];
        }

        let ids: Vec<EdgeId> = active.iter().map(|&i| bounds[i].edge).collect();
        let results = apply_frequency_step(graph, &ids, chip, period, &x);
        let mut steps = Vec::with_capacity(active.len());
        for (k, &i) in active.iter().enumerate() {
            let value = period - shifts[k];
            seen_pass[i] |= results[k];
            seen_fail[i] |= !results[k];
            let clamped = bounds[i].update(value, results[k]);
            if clamped && out_of_window.insert(bounds[i].edge) {
                warn!(
                    "chip {} path {}: true delay outside the initial ±3σ window",
                    chip.chip_id, bounds[i].edge
                );
            }
            steps.push(EdgeStep {
                edge: bounds[i].edge,
                pass: results[k],
                lower: bounds[i].lower,
                upper: bounds[i].upper,
                clamped,
            });
        }
        if let Some(log) = log.as_deref_mut() {
            let mut nodes: Vec<usize> = ids.iter().flat_map(|&e| [graph.edge(e).src, graph.edge(e).dst]).collect();
            nodes.sort_unstable();
            nodes.dedup();
            log.push(IterationRecord {
                chip: chip.chip_id,
                batch: batch.index,
                iteration: iterations,
                period,
                buffers: nodes.into_iter().map(|n| (n, x[n])).collect(),
                edges: steps,
            });
        }
        iterations += 1;
        active.retain(|&i| !bounds[i].resolved(cfg.resolution));
    }

    // A range that never saw one of the two outcomes has an unconfirmed end
    // at the window edge; one probe there tells whether the delay lies beyond.
    for i in 0..bounds.len() {
        let probe = match (seen_pass[i], seen_fail[i]) {
            (false, _) => bounds[i].upper,
            (true, false) => bounds[i].lower,
            (true, true) => continue,
        };
        if iterations >= cfg.max_iterations {
            return Err(Error::IterationGuard {
                chip: chip.chip_id,
                batch: batch.index,
                limit: cfg.max_iterations,
            });
        }
        let e = graph.edge(bounds[i].edge);
        let x = setup.base;
        let period = probe + x[e.src] - x[e.dst];
        let pass = apply_frequency_step(graph, &[e.id], chip, period, x)[0];
        let outside = pass != !seen_pass[i];
        bounds[i].update(period - (x[e.src] - x[e.dst]), pass);
        if outside && out_of_window.insert(e.id) {
            warn!(
                "chip {} path {}: true delay outside the initial ±3σ window",
                chip.chip_id, e.id
            );
        }
        if let Some(log) = log.as_deref_mut() {
            let mut nodes = vec![e.src, e.dst];
            nodes.sort_unstable();
            nodes.dedup();
            log.push(IterationRecord {
                chip: chip.chip_id,
                batch: batch.index,
                iteration: iterations,
                period,
                buffers: nodes.into_iter().map(|n| (n, x[n])).collect(),
                edges: vec![EdgeStep {
                    edge: e.id,
                    pass,
                    lower: bounds[i].lower,
                    upper: bounds[i].upper,
                    clamped: outside,
                }],
            });
        }
        iterations += 1;
    }
    Ok(BatchResult {
        bounds,
        iterations,
        out_of_window: out_of_window.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipTestResult {
    /// Bounds of every tested path, batch by batch.
    pub bounds: Vec<DelayBound>,
    /// Total iterations `t_a` of this chip.
    pub iterations: usize,
    pub batch_iterations: Vec<usize>,
    pub out_of_window: Vec<EdgeId>,
}

/// Runs the batches in order. Every batch starts from the base buffer
/// values, so batches do not influence each other.
pub fn run_chip_test(
    setup: &TestSetup,
    batches: &[TestBatch],
    chip: &ChipInstance,
    mut log: Option<&mut Vec<IterationRecord>>,
) -> Result<ChipTestResult> {
    let mut out = ChipTestResult {
        bounds: Vec::new(),
        iterations: 0,
        batch_iterations: Vec::with_capacity(batches.len()),
        out_of_window: Vec::new(),
    };
    for b in batches {
        let r = run_batch_test(setup, b, chip, log.as_deref_mut())?;
        out.iterations += r.iterations;
        out.batch_iterations.push(r.iterations);
        out.bounds.extend(r.bounds);
        out.out_of_window.extend(r.out_of_window);
    }
    Ok(out)
}

/// Path-wise frequency stepping with all buffers at zero: plain bisection
/// of the ±3σ window.
pub fn bisect_path(
    graph: &TimingGraph,
    model: &DelayModel,
    edge: EdgeId,
    chip: &ChipInstance,
    resolution: f64,
    max_iterations: usize,
) -> Result<(DelayBound, usize)> {
    let mut b = DelayBound::initial(graph, model, edge);
    let d = chip.true_delays[graph.edge(edge).setup_var];
    let mut iterations = 0;
    while !b.resolved(resolution) {
        if iterations >= max_iterations {
            return Err(Error::IterationGuard {
                chip: chip.chip_id,
                batch: 0,
                limit: max_iterations,
            });
        }
        let t = b.center();
        b.update(t, d <= t);
        iterations += 1;
    }
    Ok((b, iterations))
}
