// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use super::grouping::PathGroup;
use crate::error::{Error, Result};
use crate::timing::{DelayModel, EdgeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedDelay {
    pub edge: EdgeId,
    pub mean: f64,
    pub std_dev: f64,
}

impl PredictedDelay {
    pub fn lower(&self) -> f64 {
        self.mean - 3.0 * self.std_dev
    }

    pub fn upper(&self) -> f64 {
        self.mean + 3.0 * self.std_dev
    }
}

/// `x_k | x_t` for jointly Gaussian variables, factored once so that many
/// observation vectors can be applied cheaply.
#[derive(Debug, Clone)]
pub struct ConditionalGaussian {
    tested: Vec<usize>,
    targets: Vec<usize>,
    tested_means: Vec<f64>,
    target_means: Vec<f64>,
    /// `Σ_kt Σ_t⁻¹`, one row per target.
    gain: DMatrix<f64>,
    std_devs: Vec<f64>,
}

/// Conditions `targets` on `tested` (model variable indices). A ridge of
/// `1e−8·trace(Σ_t)/|t|` is added to `Σ_t` before factorization.
pub fn conditional_gaussian(model: &DelayModel, tested: &[usize], targets: &[usize]) -> Result<ConditionalGaussian> {
    let nt = tested.len();
    let mut s_t = model.sub_covariance(tested, tested);
    let s_kt = model.sub_covariance(targets, tested);
    let trace = s_t.trace();
    let gain = if nt == 0 || trace <= 0.0 {
        DMatrix::zeros(targets.len(), nt)
    } else {
        let ridge = 1e-8 * trace / nt as f64;
        for i in 0..nt {
            s_t[(i, i)] += ridge;
        }
        let ch = Cholesky::new(s_t).ok_or(Error::SingularCovariance { paths: nt })?;
        // Σ_t is symmetric, so (Σ_t⁻¹ Σ_tk)ᵀ = Σ_kt Σ_t⁻¹.
        let g = ch.solve(&s_kt.transpose()).transpose();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCovariance { paths: nt });
        }
        g
    };
    let std_devs = targets
        .iter()
        .enumerate()
        .map(|(r, &k)| {
            let explained: f64 = (0..nt).map(|c| gain[(r, c)] * s_kt[(r, c)]).sum();
            (model.variance(k) - explained).max(0.0).sqrt()
        })
        .collect();
    Ok(ConditionalGaussian {
        tested: tested.to_vec(),
        targets: targets.to_vec(),
        tested_means: tested.iter().map(|&i| model.mean(i)).collect(),
        target_means: targets.iter().map(|&i| model.mean(i)).collect(),
        gain,
        std_devs,
    })
}

impl ConditionalGaussian {
    pub fn tested(&self) -> &[usize] {
        &self.tested
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Conditional standard deviations; they do not depend on observations.
    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }

    /// Conditional means given `observed[i]` for `tested[i]`.
    pub fn means(&self, observed: &[f64]) -> Vec<f64> {
        assert_eq!(observed.len(), self.tested.len());
        let resid: Vec<f64> = observed.iter().zip(&self.tested_means).map(|(d, m)| d - m).collect();
        (0..self.targets.len())
            .map(|r| self.target_means[r] + (0..resid.len()).map(|c| self.gain[(r, c)] * resid[c]).sum::<f64>())
            .collect()
    }
}

/// Groupwise predictor for every untested path: each group's untested
/// members are conditioned on that group's tested members only.
#[derive(Debug, Clone)]
pub struct Predictor {
    parts: Vec<(Vec<EdgeId>, Vec<EdgeId>, ConditionalGaussian)>,
}

impl Predictor {
    pub fn new(model: &DelayModel, groups: &[PathGroup], tested: &[EdgeId]) -> Result<Self> {
        let tested_set: HashSet<EdgeId> = tested.iter().copied().collect();
        let mut parts = Vec::new();
        for g in groups {
            let t: Vec<EdgeId> = g.members.iter().copied().filter(|e| tested_set.contains(e)).collect();
            let k: Vec<EdgeId> = g.members.iter().copied().filter(|e| !tested_set.contains(e)).collect();
            if k.is_empty() {
                continue;
            }
            let tv: Vec<usize> = t.iter().map(|&e| model.setup_var(e)).collect();
            let kv: Vec<usize> = k.iter().map(|&e| model.setup_var(e)).collect();
            let cg = conditional_gaussian(model, &tv, &kv)?;
            parts.push((t, k, cg));
        }
        Ok(Self { parts })
    }

    /// `(edge, σ')` for every predicted path.
    pub fn std_devs(&self) -> Vec<(EdgeId, f64)> {
        self.parts
            .iter()
            .flat_map(|(_, k, cg)| k.iter().copied().zip(cg.std_devs().iter().copied()))
            .collect()
    }

    /// Predictions from per-edge observations, `observed[edge]` holding the
    /// measured upper bound of each tested path.
    pub fn predict(&self, observed: &[f64]) -> Vec<PredictedDelay> {
        let mut out = Vec::new();
        for (t, k, cg) in &self.parts {
            let obs: Vec<f64> = t.iter().map(|&e| observed[e]).collect();
            let means = cg.means(&obs);
            for (i, &edge) in k.iter().enumerate() {
                out.push(PredictedDelay {
                    edge,
                    mean: means[i],
                    std_dev: cg.std_devs()[i],
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::{VarKind, VarLabel};

    fn model(means: Vec<f64>, cov: DMatrix<f64>) -> DelayModel {
        let labels = (0..means.len())
            .map(|edge| VarLabel {
                edge,
                kind: VarKind::SetupDelay,
            })
            .collect();
        DelayModel::new(means, cov, labels).unwrap()
    }

    #[test]
    fn bivariate_closed_form() {
        let m = model(vec![10.0, 10.0], DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]));
        let cg = conditional_gaussian(&m, &[1], &[0]).unwrap();
        assert!((cg.means(&[11.0])[0] - 10.8).abs() < 1e-6);
        assert!((cg.std_devs()[0].powi(2) - 0.36).abs() < 1e-6);
    }

    #[test]
    fn independence_keeps_prior() {
        let m = model(vec![3.0, 7.0], DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]));
        let cg = conditional_gaussian(&m, &[1], &[0]).unwrap();
        assert_eq!(cg.means(&[100.0])[0], 3.0);
        assert_eq!(cg.std_devs()[0], 2.0);
    }

    #[test]
    fn perfect_correlation_pins_value() {
        let m = model(vec![10.0, 10.0], DMatrix::from_element(2, 2, 1.0));
        let cg = conditional_gaussian(&m, &[1], &[0]).unwrap();
        assert!((cg.means(&[12.0])[0] - 12.0).abs() < 1e-6);
        assert!(cg.std_devs()[0] < 1e-3);
    }

    #[test]
    fn std_dev_ignores_observations() {
        let m = model(vec![1.0, 2.0, 3.0], DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.3, 0.5, 1.0, 0.2, 0.3, 0.2, 1.5]));
        let g = PathGroup {
            index: 0,
            members: vec![0, 1, 2],
            corr_th: 0.0,
        };
        let p = Predictor::new(&m, &[g], &[1]).unwrap();
        let a = p.predict(&[0.0, 5.0, 0.0]);
        let b = p.predict(&[0.0, -5.0, 0.0]);
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.std_dev, y.std_dev);
            assert_ne!(x.mean, y.mean);
        }
    }
}
