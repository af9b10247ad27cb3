// SPDX-License-Identifier: Apache-2.0

//! The virtual tester: aligned frequency stepping per chip.

mod align;
mod log;
mod stepping;

pub use align::{
    alignment_weights, compute_frequency, weighted_distance, AlignEdge, AlignOptions, Alignment, AlignmentProblem,
    Formulation, DEFAULT_K0, DEFAULT_KD,
};
pub use log::{read_jsonl, write_jsonl, EdgeStep, IterationRecord};
pub use stepping::{
    apply_frequency_step, bisect_path, default_resolution, run_batch_test, run_chip_test, BatchResult,
    ChipTestResult, DelayBound, TestSetup, TesterConfig,
};
