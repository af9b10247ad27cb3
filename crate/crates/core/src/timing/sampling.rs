// SPDX-License-Identifier: Apache-2.0

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{repair_psd, DelayModel};
use crate::error::{Error, Result};

/// One manufactured chip: a fixed draw of every model variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipInstance {
    pub chip_id: u64,
    pub true_delays: Vec<f64>,
}

/// Draws chips from `N(μ, Σ)` through a cached factor `L` with `L·Lᵀ = Σ`.
///
/// Chip `i` of seed `s` uses ChaCha8 seeded with `s` on stream `i`, so each
/// chip is reproducible on its own and chips may be drawn in any order.
#[derive(Debug, Clone)]
pub struct ChipSampler {
    means: DVector<f64>,
    factor: DMatrix<f64>,
    seed: u64,
}

impl ChipSampler {
    pub fn new(model: &DelayModel, seed: u64) -> Result<Self> {
        let factor = factorize(model.covariance())?;
        Ok(Self {
            means: DVector::from_column_slice(model.means()),
            factor,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn sample(&self, chip_id: u64) -> ChipInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chip_id);
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(&mut rng));
        let x = &self.means + &self.factor * z;
        ChipInstance {
            chip_id,
            true_delays: x.iter().copied().collect(),
        }
    }
}

/// Cholesky when Σ is positive definite, otherwise `V·√Λ` from the
/// eigen-decomposition of the PSD-repaired matrix.
fn factorize(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if let Some(ch) = Cholesky::new(cov.clone()) {
        let l = ch.unpack();
        if l.iter().all(|v| v.is_finite()) {
            return Ok(l);
        }
    }
    let mut repaired = cov.clone();
    repair_psd(&mut repaired);
    let eig = SymmetricEigen::new(repaired);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let l = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("eigen-decomposition produced non-finite values".into()));
    }
    Ok(l)
}

/// Draws a single chip. Prefer [`ChipSampler`] when sampling many chips.
pub fn sample_chip(model: &DelayModel, seed: u64, chip_id: u64) -> Result<ChipInstance> {
    Ok(ChipSampler::new(model, seed)?.sample(chip_id))
}
