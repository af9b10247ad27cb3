// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::graph::EdgeId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarKind {
    SetupDelay,
    HoldMargin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarLabel {
    pub edge: EdgeId,
    pub kind: VarKind,
}

/// Joint Gaussian over every setup delay and hold margin of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    means: Vec<f64>,
    covariance: DMatrix<f64>,
    labels: Vec<VarLabel>,
    index: HashMap<VarLabel, usize>,
}

impl DelayModel {
    /// Validates dimensions, finiteness, symmetry, the diagonal and
    /// positive semi-definiteness (min eigenvalue ≥ −1e−9·max diagonal).
    pub fn new(means: Vec<f64>, covariance: DMatrix<f64>, labels: Vec<VarLabel>) -> Result<Self> {
        let n = means.len();
        if covariance.nrows() != n || covariance.ncols() != n || labels.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} means, {}x{} covariance, {} labels",
                n,
                covariance.nrows(),
                covariance.ncols(),
                labels.len()
            )));
        }
        if means.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite mean or covariance entry".into()));
        }
        let scale = max_diagonal(&covariance).max(f64::MIN_POSITIVE);
        for i in 0..n {
            if covariance[(i, i)] < 0.0 {
                return Err(Error::InvalidModel(format!("negative variance at {i}")));
            }
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidModel(format!("covariance asymmetric at ({i}, {j})")));
                }
            }
        }
        let mut index = HashMap::with_capacity(n);
        for (i, &l) in labels.iter().enumerate() {
            if index.insert(l, i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate label for edge {} ({:?})", l.edge, l.kind)));
            }
        }
        let model = Self {
            means,
            covariance,
            labels,
            index,
        };
        let min_eig = model.min_eigenvalue();
        if min_eig < -1e-9 * scale {
            return Err(Error::InvalidModel(format!(
                "covariance is not positive semi-definite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn labels(&self) -> &[VarLabel] {
        &self.labels
    }

    pub fn var_index(&self, edge: EdgeId, kind: VarKind) -> Option<usize> {
        self.index.get(&VarLabel { edge, kind }).copied()
    }

    /// Variable of the setup delay of `edge`. Panics if the model has none.
    pub fn setup_var(&self, edge: EdgeId) -> usize {
        self.var_index(edge, VarKind::SetupDelay)
            .unwrap_or_else(|| panic!("no setup-delay variable for edge {edge}"))
    }

    /// Variable of the hold margin of `edge`. Panics if the model has none.
    pub fn hold_var(&self, edge: EdgeId) -> usize {
        self.var_index(edge, VarKind::HoldMargin)
            .unwrap_or_else(|| panic!("no hold-margin variable for edge {edge}"))
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance[(i, i)]
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        self.variance(i).max(0.0).sqrt()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[(i, j)]
    }

    /// Correlation coefficient; 0 when either variance vanishes.
    pub fn corr(&self, i: usize, j: usize) -> f64 {
        let d = self.std_dev(i) * self.std_dev(j);
        if d > 0.0 {
            self.cov(i, j) / d
        } else {
            0.0
        }
    }

    pub fn sub_covariance(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.covariance[(rows[a], cols[b])])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.covariance.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Scales every standard deviation by `factor` while leaving the
    /// off-diagonal covariances untouched, so the extra variance is purely
    /// independent.
    pub fn with_enlarged_std(&self, factor: f64) -> Result<Self> {
        let mut cov = self.covariance.clone();
        for i in 0..self.dim() {
            cov[(i, i)] *= factor * factor;
        }
        Self::new(self.means.clone(), cov, self.labels.clone())
    }
}

fn max_diagonal(m: &DMatrix<f64>) -> f64 {
    m.diagonal().iter().copied().fold(0.0, f64::max)
}

/// Clamps negative eigenvalues to zero and re-symmetrizes. Returns whether
/// a change was needed.
pub fn repair_psd(cov: &mut DMatrix<f64>) -> bool {
    let n = cov.nrows();
    if n == 0 {
        return false;
    }
    let scale = max_diagonal(cov).max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().all(|&l| l >= -1e-12 * scale) {
        return false;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let mut repaired = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (repaired[(i, j)] + repaired[(j, i)]);
            repaired[(i, j)] = s;
            repaired[(j, i)] = s;
        }
    }
    *cov = repaired;
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<VarLabel> {
        (0..n)
            .map(|edge| VarLabel {
                edge,
                kind: VarKind::SetupDelay,
            })
            .collect()
    }

    #[test]
    fn rejects_indefinite() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(DelayModel::new(vec![0.0, 0.0], cov, labels(2)).is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        assert!(DelayModel::new(vec![0.0], DMatrix::zeros(2, 2), labels(1)).is_err());
    }

    #[test]
    fn repair_makes_psd() {
        let mut cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        assert!(repair_psd(&mut cov));
        let model = DelayModel::new(vec![0.0; 3], cov.clone(), labels(3)).unwrap();
        assert!(model.min_eigenvalue() >= -1e-12);
        assert_eq!(cov, cov.transpose());
        assert!(!repair_psd(&mut DMatrix::identity(3, 3)));
    }

    #[test]
    fn enlarged_std_keeps_covariances() {
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 1.0]);
        let m = DelayModel::new(vec![0.0; 2], cov, labels(2)).unwrap();
        let e = m.with_enlarged_std(1.1).unwrap();
        assert!((e.std_dev(0) - 2.2).abs() < 1e-12);
        assert_eq!(e.cov(0, 1), 1.0);
    }
}
