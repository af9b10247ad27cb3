// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::pca::pca;
use crate::timing::{DelayModel, EdgeId};

/// Share of a group's eigenvalue mass the retained components must cover.
pub const PC_MASS: f64 = 0.95;

/// Slack on correlation comparisons so that a stored 0.9 still meets a
/// 0.9 threshold after the covariance-to-correlation round trip.
const CORR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGroup {
    pub index: usize,
    /// Ascending edge ids.
    pub members: Vec<EdgeId>,
    pub corr_th: f64,
}

/// Grouping and selection for a whole path set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPlan {
    pub groups: Vec<PathGroup>,
    /// `selections[i]` are the representatives of `groups[i]`, in PC order.
    pub selections: Vec<Vec<EdgeId>>,
}

impl TestPlan {
    /// The union of all selections, group by group.
    pub fn tested(&self) -> Vec<EdgeId> {
        self.selections.iter().flatten().copied().collect()
    }

    pub fn pc_counts(&self) -> Vec<usize> {
        self.selections.iter().map(Vec::len).collect()
    }
}

/// Threshold of round `k`: 0.95, 0.90, ... floored at 0. Integer
/// arithmetic keeps the values exact.
fn threshold(round: usize) -> f64 {
    (95i64 - 5 * round as i64).max(0) as f64 / 100.0
}

/// Takes the most correlated pair of `remaining` as a seed and grows it by
/// every path whose correlation with some member reaches `corr_th`. With
/// no qualifying pair, returns the single path of largest variance.
pub fn extract_paths(remaining: &[EdgeId], model: &DelayModel, corr_th: f64) -> Vec<EdgeId> {
    let paths: Vec<EdgeId> = remaining.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    assert!(!paths.is_empty(), "extract_paths needs at least one path");
    let vars: Vec<usize> = paths.iter().map(|&e| model.setup_var(e)).collect();
    let n = paths.len();
    let corr = |a: usize, b: usize| model.corr(vars[a], vars[b]);

    let mut seed: Option<(usize, usize, f64)> = None;
    for a in 0..n {
        for b in a + 1..n {
            let c = corr(a, b);
            if c >= corr_th - CORR_TOL && seed.is_none_or(|(_, _, best)| c > best) {
                seed = Some((a, b, c));
            }
        }
    }
    let Some((a, b, _)) = seed else {
        let mut best = 0;
        for k in 1..n {
            if model.variance(vars[k]) > model.variance(vars[best]) {
                best = k;
            }
        }
        return vec![paths[best]];
    };

    let mut inside = vec![false; n];
    inside[a] = true;
    inside[b] = true;
    let mut frontier = vec![a, b];
    while let Some(m) = frontier.pop() {
        for k in 0..n {
            if !inside[k] && corr(m, k) >= corr_th - CORR_TOL {
                inside[k] = true;
                frontier.push(k);
            }
        }
    }
    (0..n).filter(|&k| inside[k]).map(|k| paths[k]).collect()
}

/// PCA on the group covariance; for each retained component in turn, the
/// not-yet-chosen path with the largest absolute loading. Ties go to the
/// lower edge id.
pub fn select_paths(members: &[EdgeId], model: &DelayModel) -> Vec<EdgeId> {
    let vars: Vec<usize> = members.iter().map(|&e| model.setup_var(e)).collect();
    let result = pca(&model.sub_covariance(&vars, &vars), PC_MASS);
    let mut chosen: Vec<usize> = Vec::with_capacity(result.pc_count);
    for j in 0..result.pc_count {
        let mut best: Option<(usize, f64)> = None;
        for (k, &edge) in members.iter().enumerate() {
            if chosen.contains(&k) {
                continue;
            }
            let w = result.components[(k, j)].abs();
            let better = match best {
                None => true,
                Some((bk, bw)) => w > bw + 1e-12 || ((w - bw).abs() <= 1e-12 && edge < members[bk]),
            };
            if better {
                best = Some((k, w));
            }
        }
        chosen.extend(best.map(|(k, _)| k));
    }
    chosen.into_iter().map(|k| members[k]).collect()
}

/// Groups every path and selects each group's representatives, lowering
/// the correlation threshold by 0.05 after each extracted group.
pub fn plan_test_set(all_required: &[EdgeId], model: &DelayModel) -> TestPlan {
    let mut remaining: BTreeSet<EdgeId> = all_required.iter().copied().collect();
    let mut groups = Vec::new();
    let mut selections = Vec::new();
    let mut round = 0;
    while !remaining.is_empty() {
        let corr_th = threshold(round);
        let rem: Vec<EdgeId> = remaining.iter().copied().collect();
        let members = extract_paths(&rem, model, corr_th);
        for e in &members {
            remaining.remove(e);
        }
        selections.push(select_paths(&members, model));
        groups.push(PathGroup {
            index: groups.len(),
            members,
            corr_th,
        });
        round += 1;
    }
    TestPlan { groups, selections }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::{VarKind, VarLabel};
    use nalgebra::DMatrix;

    fn corr_model(n: usize, rho: impl Fn(usize, usize) -> f64, sd: impl Fn(usize) -> f64) -> DelayModel {
        let cov = DMatrix::from_fn(n, n, |i, j| if i == j { sd(i) * sd(i) } else { sd(i) * sd(j) * rho(i, j) });
        let labels = (0..n)
            .map(|edge| VarLabel {
                edge,
                kind: VarKind::SetupDelay,
            })
            .collect();
        DelayModel::new(vec![5.0; n], cov, labels).unwrap()
    }

    #[test]
    fn uniform_high_correlation_is_one_group() {
        let m = corr_model(4, |_, _| 0.99, |_| 1.0);
        assert_eq!(extract_paths(&[0, 1, 2, 3], &m, 0.95), vec![0, 1, 2, 3]);
    }

    #[test]
    fn no_qualifying_pair_returns_largest_variance() {
        let m = corr_model(2, |_, _| 0.1, |i| 1.0 + i as f64);
        assert_eq!(extract_paths(&[0, 1], &m, 0.95), vec![1]);
    }

    #[test]
    fn thresholds_are_exact() {
        assert_eq!(threshold(0), 0.95);
        assert_eq!(threshold(1), 0.9);
        assert_eq!(threshold(18), 0.05);
        assert_eq!(threshold(19), 0.0);
        assert_eq!(threshold(40), 0.0);
    }

    #[test]
    fn singleton_and_rank_one_groups() {
        let m = corr_model(3, |_, _| 1.0, |_| 1.0);
        assert_eq!(select_paths(&[2], &m), vec![2]);
        assert_eq!(select_paths(&[0, 1, 2], &m).len(), 1);
        let plan = plan_test_set(&[0, 1, 2], &m);
        assert_eq!(plan.tested().len(), 1);
    }

    #[test]
    fn independent_paths_are_all_tested() {
        let m = corr_model(5, |_, _| 0.0, |i| 1.0 + 0.1 * i as f64);
        let plan = plan_test_set(&[0, 1, 2, 3, 4], &m);
        assert!(plan.groups.iter().all(|g| g.members.len() == 1));
        let mut t = plan.tested();
        t.sort_unstable();
        assert_eq!(t, vec![0, 1, 2, 3, 4]);
    }
}
