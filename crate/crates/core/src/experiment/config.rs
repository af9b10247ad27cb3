// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing::GeneratorConfig;

/// Which test flow produces the main metrics and yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Grouping, selection, multiplexed and aligned test, prediction.
    #[default]
    Effitest,
    /// Every path bisected on its own with all buffers at zero.
    BaselinePathwise,
    /// Every path tested in batches with all buffers at zero.
    MultiplexNoAlign,
    /// Every path tested in batches with buffer alignment.
    EffitestNoPrediction,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::BaselinePathwise,
        Mode::MultiplexNoAlign,
        Mode::EffitestNoPrediction,
        Mode::Effitest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Effitest => "effitest",
            Mode::BaselinePathwise => "baseline-pathwise",
            Mode::MultiplexNoAlign => "multiplex-no-align",
            Mode::EffitestNoPrediction => "effitest-no-prediction",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkSource {
    Generate(GeneratorConfig),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkSource,
    pub chips: usize,
    pub chip_seed: u64,
    /// Seed of the hold-margin samples; kept apart from the chips so the
    /// hold guarantee is measured on fresh data.
    pub hold_seed: u64,
    /// Clock periods as quantiles of the chips' no-buffer critical delay.
    pub period_quantiles: Vec<f64>,
    pub mode: Mode,
    /// Stop width `ε`; derived from the model when absent.
    pub resolution: Option<f64>,
    pub hold_target: f64,
    pub hold_samples: usize,
    /// Multiplies every standard deviation, keeping covariances.
    pub std_scale: f64,
    /// Chips used for the mode comparison; 0 disables it.
    pub ablation_chips: usize,
    /// Chips whose iterations are logged; all when absent.
    pub log_chips: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            benchmark: BenchmarkSource::Generate(GeneratorConfig::default()),
            chips: 1000,
            chip_seed: 2024,
            hold_seed: 7,
            period_quantiles: vec![0.5, 0.8413],
            mode: Mode::Effitest,
            resolution: None,
            hold_target: 0.99,
            hold_samples: 1000,
            std_scale: 1.0,
            ablation_chips: 100,
            log_chips: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (i, q) in self.period_quantiles.iter().enumerate() {
            if !(*q > 0.0 && *q <= 1.0) {
                return bad(format!("period quantile {q} outside (0, 1]"));
            }
            if self.period_quantiles[..i].contains(q) {
                return bad(format!("period quantile {q} listed twice"));
            }
        }
        if let Some(eps) = self.resolution {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(format!("resolution {eps} must be positive"));
            }
        }
        if !(self.hold_target > 0.0 && self.hold_target <= 1.0) {
            return Err(Error::InvalidYieldTarget(self.hold_target));
        }
        if self.hold_samples == 0 {
            return bad("hold_samples must be positive".into());
        }
        if !(self.std_scale > 0.0 && self.std_scale.is_finite()) {
            return bad(format!("std_scale {} must be positive", self.std_scale));
        }
        if let BenchmarkSource::Generate(g) = &self.benchmark {
            g.validate()?;
        }
        Ok(())
    }
}
