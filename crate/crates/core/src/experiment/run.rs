// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchmarkSource, ExperimentConfig, Mode};
use crate::configurator::{
    check_chip, compute_hold_bounds, configure_buffers, critical_delay, empirical_quantile, ideal_configuration,
    ConfigOptions, ConfigProblem, EdgeRange, HoldBounds, HoldOptions,
};
use crate::error::{Error, Result};
use crate::scheduler::{degree_lower_bound, fill_empty_slots, form_batches, TestBatch};
use crate::stats::{plan_test_set, Predictor, TestPlan};
use crate::tester::{
    bisect_path, default_resolution, run_chip_test, DelayBound, IterationRecord, TestSetup, TesterConfig,
};
use crate::timing::{
    default_assignment, zero_assignment, Benchmark, BufferAssignment, ChipInstance, ChipSampler, EdgeId,
};

/// Offline part of a test flow: which paths are tested, in which batches,
/// and how the others are predicted.
#[derive(Debug, Clone)]
pub struct TestFlow {
    pub mode: Mode,
    pub plan: Option<TestPlan>,
    /// Representatives chosen by the grouping, before slot filling.
    pub selected: Vec<EdgeId>,
    /// Paths added to empty batch slots.
    pub filled: Vec<EdgeId>,
    pub batches: Vec<TestBatch>,
    pub predictor: Option<Predictor>,
}

impl TestFlow {
    pub fn plan(mode: Mode, bench: &Benchmark) -> Result<Self> {
        let graph = &bench.graph;
        let model = &bench.model;
        let all = graph.edge_ids();
        match mode {
            Mode::BaselinePathwise => Ok(Self {
                mode,
                plan: None,
                selected: all.clone(),
                filled: Vec::new(),
                batches: all
                    .iter()
                    .enumerate()
                    .map(|(index, &e)| TestBatch { index, edges: vec![e] })
                    .collect(),
                predictor: None,
            }),
            Mode::MultiplexNoAlign | Mode::EffitestNoPrediction => Ok(Self {
                mode,
                plan: None,
                selected: all.clone(),
                filled: Vec::new(),
                batches: form_batches(&all, graph),
                predictor: None,
            }),
            Mode::Effitest => {
                let plan = plan_test_set(&all, model);
                let selected = plan.tested();
                let batches = form_batches(&selected, graph);
                let prior = Predictor::new(model, &plan.groups, &selected)?;
                let (batches, filled) = fill_empty_slots(&batches, &prior.std_devs(), graph);
                let tested: Vec<EdgeId> = selected.iter().chain(&filled).copied().collect();
                let predictor = Predictor::new(model, &plan.groups, &tested)?;
                Ok(Self {
                    mode,
                    plan: Some(plan),
                    selected,
                    filled,
                    batches,
                    predictor: Some(predictor),
                })
            }
        }
    }

    pub fn tested(&self) -> Vec<EdgeId> {
        self.batches.iter().flat_map(|b| b.edges.iter().copied()).collect()
    }

    pub fn tested_count(&self) -> usize {
        self.batches.iter().map(|b| b.edges.len()).sum()
    }

    fn aligns(&self) -> bool {
        matches!(self.mode, Mode::Effitest | Mode::EffitestNoPrediction)
    }
}

/// Measured bounds of one chip under a flow.
#[derive(Debug, Clone)]
pub struct ChipMeasurement {
    pub bounds: Vec<DelayBound>,
    pub iterations: usize,
    pub out_of_window: usize,
}

/// Runs a flow's test on one chip.
pub fn measure_chip(
    flow: &TestFlow,
    bench: &Benchmark,
    tester: &TesterConfig,
    hold: Option<&[f64]>,
    chip: &ChipInstance,
    log: Option<&mut Vec<IterationRecord>>,
) -> Result<ChipMeasurement> {
    let graph = &bench.graph;
    if flow.mode == Mode::BaselinePathwise {
        let mut bounds = Vec::with_capacity(flow.batches.len());
        let mut iterations = 0;
        let mut out_of_window = 0;
        for b in &flow.batches {
            for &e in &b.edges {
                let (bound, it) = bisect_path(graph, &bench.model, e, chip, tester.resolution, tester.max_iterations)?;
                let init = DelayBound::initial(graph, &bench.model, e);
                out_of_window += usize::from(!init.contains(chip.true_delays[graph.edge(e).setup_var]));
                bounds.push(bound);
                iterations += it;
            }
        }
        return Ok(ChipMeasurement {
            bounds,
            iterations,
            out_of_window,
        });
    }
    let base: BufferAssignment = if flow.aligns() {
        default_assignment(graph)
    } else {
        zero_assignment(graph)
    };
    let cfg = TesterConfig {
        align: flow.aligns(),
        ..*tester
    };
    let setup = TestSetup {
        graph,
        model: &bench.model,
        base: &base,
        config: &cfg,
        hold: if flow.aligns() { hold } else { None },
    };
    let r = run_chip_test(&setup, &flow.batches, chip, log)?;
    Ok(ChipMeasurement {
        bounds: r.bounds,
        iterations: r.iterations,
        out_of_window: r.out_of_window.len(),
    })
}

/// Ranges for configuration: measured bounds for tested paths, `μ' ± 3σ'`
/// from the upper bounds for the rest.
pub fn configuration_ranges(flow: &TestFlow, bench: &Benchmark, m: &ChipMeasurement) -> Vec<EdgeRange> {
    let n = bench.graph.num_edges();
    let mut ranges: Vec<Option<EdgeRange>> = vec![None; n];
    let mut observed = vec![f64::NAN; n];
    for b in &m.bounds {
        ranges[b.edge] = Some(EdgeRange {
            edge: b.edge,
            lower: b.lower,
            upper: b.upper,
        });
        observed[b.edge] = b.upper;
    }
    if let Some(p) = &flow.predictor {
        for d in p.predict(&observed) {
            ranges[d.edge] = Some(EdgeRange {
                edge: d.edge,
                lower: d.lower(),
                upper: d.upper(),
            });
        }
    }
    ranges
        .into_iter()
        .enumerate()
        .map(|(e, r)| r.unwrap_or_else(|| panic!("path {e} neither tested nor predicted")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChipVerdict {
    pub chip_id: u64,
    pub feasible: bool,
    pub setup_pass: bool,
    pub hold_pass: bool,
    pub xi: Option<f64>,
    pub iterations: usize,
    pub ideal_pass: bool,
    pub no_buffer_pass: bool,
}

impl ChipVerdict {
    pub fn passes(&self) -> bool {
        self.feasible && self.setup_pass && self.hold_pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub quantile: f64,
    pub period: f64,
    pub y_i: f64,
    pub y_t: f64,
    pub y_r: f64,
    pub no_buffer: f64,
    /// Fraction of chips meeting every hold constraint under the tested
    /// configuration (feasible chips only).
    pub hold_pass: f64,
    pub verdicts: Vec<ChipVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Runtimes {
    /// Offline planning, seconds.
    pub t_p: f64,
    /// Mean test computation per chip, seconds.
    pub t_t: f64,
    /// Mean configuration time per chip and period, seconds.
    pub t_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub circuit: String,
    pub n_s: usize,
    pub n_g: usize,
    pub n_b: usize,
    pub n_p: usize,
    pub n_pt: usize,
    pub t_a: f64,
    pub t_v: f64,
    pub t_a_prime: f64,
    pub t_v_prime: f64,
    pub r_a: f64,
    pub r_v: f64,
    pub runtimes: Runtimes,
}

impl MetricsTable {
    /// Fills the derived columns from the averages.
    #[allow(clippy::too_many_arguments)]
    pub fn new(circuit: String, n_s: usize, n_g: usize, n_b: usize, n_p: usize, n_pt: usize, t_a: f64, t_a_prime: f64) -> Self {
        let t_v = if n_pt > 0 { t_a / n_pt as f64 } else { 0.0 };
        let t_v_prime = if n_p > 0 { t_a_prime / n_p as f64 } else { 0.0 };
        let ratio = |new: f64, old: f64| if old > 0.0 { (old - new) / old * 100.0 } else { 0.0 };
        Self {
            circuit,
            n_s,
            n_g,
            n_b,
            n_p,
            n_pt,
            t_a,
            t_v,
            t_a_prime,
            t_v_prime,
            r_a: ratio(t_a, t_a_prime),
            r_v: ratio(t_v, t_v_prime),
            runtimes: Runtimes::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: Mode,
    pub chips: usize,
    pub tested_paths: usize,
    pub iterations_per_path: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub groups: Vec<Vec<EdgeId>>,
    pub selected: Vec<EdgeId>,
    pub filled: Vec<EdgeId>,
    pub batches: Vec<TestBatch>,
    pub degree_lower_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub resolution: f64,
    pub metrics: MetricsTable,
    pub yields: Vec<YieldReport>,
    pub ablation: Vec<AblationRow>,
    pub plan: PlanSummary,
    pub hold: HoldBounds,
    pub out_of_window: usize,
    #[serde(skip)]
    pub iterations: Vec<IterationRecord>,
}

/// Generates or loads the benchmark and applies the variance scale.
pub fn load_benchmark(cfg: &ExperimentConfig) -> Result<Benchmark> {
    let mut bench = match &cfg.benchmark {
        BenchmarkSource::Generate(g) => Benchmark::generate(g)?,
        BenchmarkSource::File(p) => Benchmark::load(p)?,
    };
    if cfg.std_scale != 1.0 {
        bench.model = bench.model.with_enlarged_std(cfg.std_scale)?;
    }
    Ok(bench)
}

struct PerChip {
    measurement: ChipMeasurement,
    baseline_iterations: usize,
    verdicts: Vec<ChipVerdict>,
    log: Vec<IterationRecord>,
    test_seconds: f64,
    config_seconds: f64,
}

/// The full flow: hold bounds, planning, per-chip test, prediction,
/// configuration and yield at each period, plus the mode comparison.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let bench = load_benchmark(cfg).map_err(|e| e.in_stage("benchmark"))?;
    run_on_benchmark(cfg, &bench)
}

pub fn run_on_benchmark(cfg: &ExperimentConfig, bench: &Benchmark) -> Result<ExperimentResults> {
    cfg.validate()?;
    let graph = &bench.graph;
    let model = &bench.model;
    let resolution = cfg.resolution.unwrap_or_else(|| default_resolution(graph, model));
    let tester = TesterConfig {
        resolution,
        ..TesterConfig::default()
    };
    let config_opts = ConfigOptions::default();

    let t0 = Instant::now();
    let hold = compute_hold_bounds(graph, model, cfg.hold_samples, cfg.hold_target, cfg.hold_seed, &HoldOptions::default())
        .map_err(|e| e.in_stage("hold-bounds"))?;
    let flow = TestFlow::plan(cfg.mode, bench).map_err(|e| e.in_stage("planning"))?;
    let t_p = t0.elapsed().as_secs_f64();
    info!(
        "{}: {} paths, {} tested in {} batches, ε = {resolution:.5}",
        bench.name,
        graph.num_edges(),
        flow.tested_count(),
        flow.batches.len()
    );

    let sampler = ChipSampler::new(model, cfg.chip_seed).map_err(|e| e.in_stage("sampling"))?;
    let chips: Vec<ChipInstance> = (0..cfg.chips as u64).into_par_iter().map(|i| sampler.sample(i)).collect();
    let periods: Vec<f64> = if chips.is_empty() {
        Vec::new()
    } else {
        let crit: Vec<f64> = chips.iter().map(|c| critical_delay(graph, c)).collect();
        cfg.period_quantiles.iter().map(|&q| empirical_quantile(&crit, q)).collect()
    };

    let log_limit = cfg.log_chips.unwrap_or(usize::MAX);
    let lambda = hold.lambda.as_slice();
    let per_chip: Vec<PerChip> = chips
        .par_iter()
        .enumerate()
        .map(|(i, chip)| -> Result<PerChip> {
            let mut log = Vec::new();
            let ts = Instant::now();
            let measurement = measure_chip(&flow, bench, &tester, Some(lambda), chip, (i < log_limit).then_some(&mut log))
                .map_err(|e| e.in_stage("test"))?;
            let test_seconds = ts.elapsed().as_secs_f64();
            let baseline_iterations = if cfg.mode == Mode::BaselinePathwise {
                measurement.iterations
            } else {
                baseline_iterations(bench, &tester, chip)?
            };
            let ranges = configuration_ranges(&flow, bench, &measurement);
            let tc = Instant::now();
            let mut verdicts = Vec::with_capacity(periods.len());
            for &period in &periods {
                let outcome = configure_buffers(
                    &ConfigProblem {
                        graph,
                        period,
                        ranges: ranges.clone(),
                        hold: Some(lambda),
                    },
                    &config_opts,
                )
                .map_err(|e| e.in_stage("configuration"))?;
                let (feasible, check, xi) = match outcome.configuration() {
                    Some(c) => (true, check_chip(graph, chip, &c.assignment, period), Some(c.xi)),
                    None => (false, crate::configurator::PassCheck { setup: false, hold: false }, None),
                };
                let ideal = ideal_configuration(graph, chip, period, Some(lambda), &config_opts)
                    .map_err(|e| e.in_stage("ideal-configuration"))?;
                let ideal_pass = ideal
                    .configuration()
                    .is_some_and(|c| check_chip(graph, chip, &c.assignment, period).passes());
                let no_buffer_pass = check_chip(graph, chip, &zero_assignment(graph), period).passes();
                verdicts.push(ChipVerdict {
                    chip_id: chip.chip_id,
                    feasible,
                    setup_pass: feasible && check.setup,
                    hold_pass: feasible && check.hold,
                    xi,
                    iterations: measurement.iterations,
                    ideal_pass,
                    no_buffer_pass,
                });
            }
            let config_seconds = if periods.is_empty() {
                0.0
            } else {
                tc.elapsed().as_secs_f64() / periods.len() as f64
            };
            Ok(PerChip {
                measurement,
                baseline_iterations,
                verdicts,
                log,
                test_seconds,
                config_seconds,
            })
        })
        .collect::<Result<_>>()?;

    let n = per_chip.len();
    let mean = |f: &dyn Fn(&PerChip) -> f64| if n == 0 { 0.0 } else { per_chip.iter().map(f).sum::<f64>() / n as f64 };
    let mut metrics = MetricsTable::new(
        bench.name.clone(),
        bench.n_s(),
        bench.n_g(),
        bench.n_b(),
        bench.n_p(),
        flow.tested_count(),
        mean(&|c| c.measurement.iterations as f64),
        mean(&|c| c.baseline_iterations as f64),
    );
    metrics.runtimes = Runtimes {
        t_p,
        t_t: mean(&|c| c.test_seconds),
        t_s: mean(&|c| c.config_seconds),
    };

    let yields = periods
        .iter()
        .enumerate()
        .map(|(k, &period)| {
            let verdicts: Vec<ChipVerdict> = per_chip.iter().map(|c| c.verdicts[k]).collect();
            let frac = |f: &dyn Fn(&ChipVerdict) -> bool| verdicts.iter().filter(|v| f(v)).count() as f64 / n as f64;
            let y_i = frac(&|v| v.ideal_pass);
            let y_t = frac(&|v| v.passes());
            let feasible = verdicts.iter().filter(|v| v.feasible).count();
            YieldReport {
                quantile: cfg.period_quantiles[k],
                period,
                y_i,
                y_t,
                y_r: y_i - y_t,
                no_buffer: frac(&|v| v.no_buffer_pass),
                hold_pass: if feasible == 0 {
                    0.0
                } else {
                    verdicts.iter().filter(|v| v.hold_pass).count() as f64 / feasible as f64
                },
                verdicts,
            }
        })
        .collect();

    let ablation = if cfg.ablation_chips == 0 || chips.is_empty() {
        Vec::new()
    } else {
        let sub = &chips[..cfg.ablation_chips.min(chips.len())];
        run_ablation(bench, &tester, lambda, sub, cfg.mode, &flow)?
    };

    let out_of_window = per_chip.iter().map(|c| c.measurement.out_of_window).sum();
    let mut iterations = Vec::new();
    for c in per_chip {
        iterations.extend(c.log);
    }
    Ok(ExperimentResults {
        config: cfg.clone(),
        resolution,
        metrics,
        yields,
        ablation,
        plan: PlanSummary {
            groups: flow
                .plan
                .as_ref()
                .map(|p| p.groups.iter().map(|g| g.members.clone()).collect())
                .unwrap_or_default(),
            selected: flow.selected.clone(),
            filled: flow.filled.clone(),
            degree_lower_bound: degree_lower_bound(&flow.tested(), graph),
            batches: flow.batches.clone(),
        },
        hold,
        out_of_window,
        iterations,
    })
}

fn baseline_iterations(bench: &Benchmark, tester: &TesterConfig, chip: &ChipInstance) -> Result<usize> {
    let mut total = 0;
    for e in bench.graph.edge_ids() {
        total += bisect_path(&bench.graph, &bench.model, e, chip, tester.resolution, tester.max_iterations)?.1;
    }
    Ok(total)
}

/// Mean iterations per tested path of every mode on `chips`.
pub fn run_ablation(
    bench: &Benchmark,
    tester: &TesterConfig,
    hold: &[f64],
    chips: &[ChipInstance],
    main_mode: Mode,
    main_flow: &TestFlow,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for mode in Mode::ALL {
        let planned;
        let flow = if mode == main_mode {
            main_flow
        } else {
            planned = TestFlow::plan(mode, bench).map_err(|e| e.in_stage("ablation"))?;
            &planned
        };
        let tested = flow.tested_count();
        let per_path: Vec<f64> = chips
            .par_iter()
            .map(|c| -> Result<f64> {
                let m = measure_chip(flow, bench, tester, Some(hold), c, None)?;
                Ok(if tested == 0 { 0.0 } else { m.iterations as f64 / tested as f64 })
            })
            .collect::<Result<_>>()
            .map_err(|e: Error| e.in_stage("ablation"))?;
        rows.push(AblationRow {
            mode,
            chips: chips.len(),
            tested_paths: tested,
            iterations_per_path: per_path.iter().sum::<f64>() / chips.len() as f64,
        });
    }
    Ok(rows)
}

/// Paths that appear in more than one batch; empty for a valid flow.
pub fn duplicated_paths(flow: &TestFlow) -> Vec<EdgeId> {
    let mut seen = HashSet::new();
    flow.tested().into_iter().filter(|e| !seen.insert(*e)).collect()
}
