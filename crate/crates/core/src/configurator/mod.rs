// SPDX-License-Identifier: Apache-2.0

//! Post-test buffer configuration, hold bounds and yield evaluation.

mod config;
mod hold;
mod yield_eval;

pub use config::{
    configure_buffers, ConfigFormulation, ConfigOptions, ConfigOutcome, ConfigProblem, Configuration, EdgeRange,
};
pub use hold::{compute_hold_bounds, hold_bounds_from_samples, kept_count, HoldBounds, HoldMethod, HoldOptions};
pub use yield_eval::{
    check_chip, critical_delay, empirical_quantile, evaluate_yield, ideal_configuration, pass_fraction, PassCheck,
};
