// SPDX-License-Identifier: Apache-2.0

//! Aligned post-silicon delay test with statistical prediction.
//!
//! The crate simulates manufactured chips drawn from a correlated Gaussian
//! delay model, measures a few representative paths per chip by frequency
//! stepping with the chip's own tuning buffers aligning several paths at
//! once, predicts the remaining delays from the measurements, and
//! configures the buffers for a target clock period.
//!
//! Module map:
//! - [`timing`]: graph, buffers, delay model, chip sampling, benchmark generator
//! - [`stats`]: path grouping, PCA selection, conditional prediction
//! - [`scheduler`]: test batches and empty-slot filling
//! - [`tester`]: alignment model and frequency stepping per chip
//! - [`configurator`]: hold bounds, buffer configuration, yield
//! - [`experiment`]: end-to-end runs, metrics and reports

pub mod configurator;
pub mod error;
pub mod experiment;
pub mod scheduler;
pub mod stats;
pub mod tester;
pub mod timing;

pub use error::{Error, Result};
