// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigen-decomposition of a covariance matrix, largest eigenvalue first.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// One unit-norm loading vector per column.
    pub components: DMatrix<f64>,
    /// Non-negative, descending.
    pub eigenvalues: Vec<f64>,
    /// Fewest leading components whose eigenvalues reach `mass` of the total.
    pub pc_count: usize,
}

pub fn pca(cov: &DMatrix<f64>, mass: f64) -> PcaResult {
    let n = cov.nrows();
    if n == 0 {
        return PcaResult {
            components: DMatrix::zeros(0, 0),
            eigenvalues: Vec::new(),
            pc_count: 0,
        };
    }
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..n).collect();
    // Stable on ties so equal eigenvalues keep nalgebra's order.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let components = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let total: f64 = eigenvalues.iter().sum();
    let pc_count = if total <= 0.0 {
        1
    } else {
        let target = mass * total * (1.0 - 1e-12);
        let mut acc = 0.0;
        let mut k = 0;
        while k < n {
            acc += eigenvalues[k];
            k += 1;
            if acc >= target {
                break;
            }
        }
        k
    };
    PcaResult {
        components,
        eigenvalues,
        pc_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_needs_one_component() {
        let r = pca(&DMatrix::from_element(3, 3, 2.0), 0.95);
        assert_eq!(r.pc_count, 1);
        assert!((r.eigenvalues[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn independent_equal_variances_need_all() {
        let r = pca(&DMatrix::identity(4, 4), 0.95);
        assert_eq!(r.pc_count, 4);
    }

    #[test]
    fn components_are_orthonormal_and_sorted() {
        let cov = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let r = pca(&cov, 0.95);
        let gram = r.components.transpose() * &r.components;
        assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-8);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
