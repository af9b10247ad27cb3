// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs: planning, per-chip test, configuration and reports.

mod config;
mod report;
mod run;

pub use config::{BenchmarkSource, ExperimentConfig, Mode};
pub use report::{emit_reports, load_manifest, load_results, write_manifest, Manifest, MANIFEST_VERSION};
pub use run::{
    configuration_ranges, duplicated_paths, load_benchmark, measure_chip, run_ablation, run_experiment,
    run_on_benchmark, AblationRow, ChipMeasurement, ChipVerdict, ExperimentResults, MetricsTable, PlanSummary,
    Runtimes, TestFlow, YieldReport,
};
