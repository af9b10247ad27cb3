// SPDX-License-Identifier: Apache-2.0

use effitest::stats::{conditional_gaussian, extract_paths, plan_test_set, select_paths, Predictor};
use effitest::timing::{Benchmark, DelayModel, GeneratorConfig, VarKind, VarLabel};
use nalgebra::DMatrix;

fn labels(n: usize) -> Vec<VarLabel> {
    (0..n)
        .map(|edge| VarLabel {
            edge,
            kind: VarKind::SetupDelay,
        })
        .collect()
}

#[test]
fn bivariate_conditioning() {
    // Means 10, unit variances, ρ = 0.8, observed 11.
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
    let m = DelayModel::new(vec![10.0, 10.0], cov, labels(2)).unwrap();
    let cg = conditional_gaussian(&m, &[0], &[1]).unwrap();
    assert!((cg.means(&[11.0])[0] - 10.8).abs() < 1e-6);
    assert!((cg.std_devs()[0].powi(2) - 0.36).abs() < 1e-6);
}

#[test]
fn independent_target_keeps_its_prior() {
    let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
    let m = DelayModel::new(vec![1.0, 2.0], cov, labels(2)).unwrap();
    let cg = conditional_gaussian(&m, &[0], &[1]).unwrap();
    assert!((cg.means(&[7.0])[0] - 2.0).abs() < 1e-9);
    assert!((cg.std_devs()[0] - 3.0).abs() < 1e-6);
}

/// Two blocks of 5 paths: strong inside a block, weak across.
fn two_clusters() -> DelayModel {
    let n = 10;
    let cov = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i / 5 == j / 5 {
            0.97
        } else {
            0.2
        }
    });
    DelayModel::new(vec![8.0; n], cov, labels(n)).unwrap()
}

#[test]
fn extraction_finds_a_cluster() {
    let m = two_clusters();
    let all: Vec<usize> = (0..10).collect();
    let mut g = extract_paths(&all, &m, 0.95);
    g.sort_unstable();
    assert!(g == vec![0, 1, 2, 3, 4] || g == vec![5, 6, 7, 8, 9], "{g:?}");
    // Below the cross correlation everything joins.
    assert_eq!(extract_paths(&all, &m, 0.1).len(), 10);
}

#[test]
fn plan_splits_clusters_and_counts_components() {
    let m = two_clusters();
    let all: Vec<usize> = (0..10).collect();
    let plan = plan_test_set(&all, &m);
    let mut covered: Vec<usize> = plan.groups.iter().flat_map(|g| g.members.clone()).collect();
    covered.sort_unstable();
    assert_eq!(covered, all);
    let tested = plan.tested();
    assert_eq!(tested.len(), plan.pc_counts().iter().sum::<usize>());
    assert!(tested.len() <= 4, "{tested:?}");
    for g in &plan.groups {
        let sel = select_paths(&g.members, &m);
        assert!(sel.iter().all(|e| g.members.contains(e)));
    }
}

#[test]
fn clustered_benchmark_needs_few_tests() {
    let b = Benchmark::generate(&GeneratorConfig {
        n_p: 300,
        intra_cluster_corr: 0.97,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let plan = plan_test_set(&b.graph.edge_ids(), &b.model);
    assert!(plan.tested().len() * 100 <= 15 * 300);
}

#[test]
fn tested_paths_are_predicted_exactly() {
    let m = two_clusters();
    let all: Vec<usize> = (0..10).collect();
    let plan = plan_test_set(&all, &m);
    let tested = plan.tested();
    let p = Predictor::new(&m, &plan.groups, &tested).unwrap();
    let observed: Vec<f64> = (0..10).map(|i| 8.0 + 0.1 * i as f64).collect();
    let predicted = p.predict(&observed);
    assert_eq!(predicted.len(), 10 - tested.len());
    for d in &predicted {
        assert!(!tested.contains(&d.edge));
        assert!(d.std_dev <= 1.0 + 1e-9);
        assert!((d.upper() - d.lower() - 6.0 * d.std_dev).abs() < 1e-9);
    }
}
