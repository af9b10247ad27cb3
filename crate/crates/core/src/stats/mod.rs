// SPDX-License-Identifier: Apache-2.0

//! Path grouping, representative-path selection and conditional prediction.

mod grouping;
mod pca;
mod predict;

pub use grouping::{extract_paths, plan_test_set, select_paths, PathGroup, TestPlan, PC_MASS};
pub use pca::{pca, PcaResult};
pub use predict::{conditional_gaussian, ConditionalGaussian, PredictedDelay, Predictor};
