// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffers::buffer_defaults;
use super::graph::{FlipFlop, NodeId, TimingEdge, TimingGraph, TuningBuffer};
use super::model::{repair_psd, DelayModel, VarKind, VarLabel};
use crate::error::{Error, Result};

/// Parameters of the synthetic clustered benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub name: String,
    /// Flip-flop count `n_s`.
    pub n_s: usize,
    /// Gate count `n_g`; metadata only.
    pub n_g: usize,
    pub buffer_fraction: f64,
    /// Path count `n_p`.
    pub n_p: usize,
    pub cluster_count: usize,
    pub intra_cluster_corr: f64,
    pub global_corr: f64,
    pub mean_delay_range: [f64; 2],
    pub cv: f64,
    pub seed: u64,
    pub setup_time: f64,
    pub hold_time: f64,
    /// Shortest-path delay as a fraction of the path's mean delay.
    pub min_delay_ratio: f64,
    /// Correlation between a path's setup delay and hold margin is
    /// `−coupling·ρ`.
    pub setup_hold_coupling: f64,
    /// When set, each buffer gets one long side (its incoming or its
    /// outgoing paths, drawn from the upper half of the mean range) and one
    /// short side, which is what makes clock tuning worthwhile.
    pub skewed_buffers: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            n_s: 211,
            n_g: 0,
            buffer_fraction: 0.01,
            n_p: 80,
            cluster_count: 5,
            intra_cluster_corr: 0.9,
            global_corr: 0.25,
            mean_delay_range: [6.0, 10.0],
            cv: 0.10,
            seed: 1,
            setup_time: 0.05,
            hold_time: 0.05,
            min_delay_ratio: 0.3,
            setup_hold_coupling: 0.5,
            skewed_buffers: true,
        }
    }
}

impl GeneratorConfig {
    /// `⌈f·n_s⌉`, with a small allowance so that e.g. `0.02·100` stays 2.
    pub fn buffer_count(&self) -> usize {
        ((self.buffer_fraction * self.n_s as f64) - 1e-9).ceil().max(0.0) as usize
    }

    /// Largest number of distinct directed pairs with a buffered endpoint.
    pub fn edge_capacity(&self) -> usize {
        let n = self.n_s;
        let u = n - self.buffer_count().min(n);
        n * n.saturating_sub(1) - u * u.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_s < 2 {
            return bad(format!("n_s = {} needs at least 2 flip-flops", self.n_s));
        }
        if !(self.buffer_fraction > 0.0 && self.buffer_fraction <= 1.0) {
            return bad(format!("buffer_fraction {} outside (0, 1]", self.buffer_fraction));
        }
        if !(0.0 <= self.global_corr && self.global_corr <= self.intra_cluster_corr && self.intra_cluster_corr <= 1.0) {
            return bad(format!(
                "need 0 <= global_corr ({}) <= intra_cluster_corr ({}) <= 1",
                self.global_corr, self.intra_cluster_corr
            ));
        }
        if !(self.cv > 0.0 && self.cv.is_finite()) {
            return bad(format!("cv {} must be positive", self.cv));
        }
        let [lo, hi] = self.mean_delay_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("mean_delay_range [{lo}, {hi}] must be positive and ordered"));
        }
        if self.cluster_count == 0 {
            return bad("cluster_count must be at least 1".into());
        }
        if !(self.setup_time >= 0.0 && self.hold_time >= 0.0 && self.min_delay_ratio >= 0.0) {
            return bad("setup_time, hold_time and min_delay_ratio must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.setup_hold_coupling) {
            return bad(format!("setup_hold_coupling {} outside [0, 1]", self.setup_hold_coupling));
        }
        let n_b = self.buffer_count();
        if self.n_p + 1 < n_b || self.n_p == 0 {
            return bad(format!(
                "{} paths cannot connect {} buffered flip-flops (need at least {})",
                self.n_p,
                n_b,
                n_b.saturating_sub(1).max(1)
            ));
        }
        if self.n_p > self.edge_capacity() {
            return bad(format!(
                "{} paths exceed the {} distinct buffered pairs of {} flip-flops",
                self.n_p,
                self.edge_capacity(),
                self.n_s
            ));
        }
        Ok(())
    }
}

/// Builds a clustered timing graph and its joint delay model.
///
/// Every path touches at least one buffered flip-flop: each cluster owns a
/// pool of plain flip-flops and a set of home buffers, and its paths join a
/// pool member to a home buffer. A chain of buffer-to-buffer paths ties the
/// clusters together, so the flip-flops that carry paths form one connected
/// component. Flip-flops left without any path are isolated.
///
/// Variable `e` is the setup delay of path `e` and variable `n_p + e` its
/// hold margin.
pub fn generate_benchmark(cfg: &GeneratorConfig) -> Result<(TimingGraph, DelayModel)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_s = cfg.n_s;
    let n_b = cfg.buffer_count();
    let c_count = cfg.cluster_count;

    let mut buffered: Vec<NodeId> = index::sample(&mut rng, n_s, n_b).into_vec();
    buffered.sort_unstable();
    let is_buffered: HashSet<NodeId> = buffered.iter().copied().collect();
    let mut plain: Vec<NodeId> = (0..n_s).filter(|n| !is_buffered.contains(n)).collect();
    plain.shuffle(&mut rng);

    let mut pools: Vec<Vec<NodeId>> = vec![Vec::new(); c_count];
    for (i, &n) in plain.iter().enumerate() {
        pools[i % c_count].push(n);
    }
    let homes: Vec<Vec<NodeId>> = (0..c_count)
        .map(|c| {
            let own: Vec<NodeId> = (0..n_b).filter(|k| k % c_count == c).map(|k| buffered[k]).collect();
            if own.is_empty() {
                vec![buffered[c % n_b]]
            } else {
                own
            }
        })
        .collect();
    // true: the buffer's incoming paths are the long ones.
    let long_inputs: Vec<bool> = (0..n_s).map(|_| rng.random_bool(0.5)).collect();

    let mut used: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut pairs: Vec<(NodeId, NodeId, usize)> = Vec::with_capacity(cfg.n_p);
    for k in 1..n_b {
        let (a, b) = (buffered[k - 1], buffered[k]);
        let pair = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        used.insert(pair);
        pairs.push((pair.0, pair.1, k % c_count));
    }
    let mut counter = 0usize;
    while pairs.len() < cfg.n_p {
        let c = counter % c_count;
        counter += 1;
        let pair = draw_pair(&mut rng, &homes[c], &pools[c], &plain, &buffered, &used)
            .or_else(|| scan_pair(&buffered, n_s, &used))
            .ok_or_else(|| Error::InvalidConfig("ran out of distinct buffered pairs".into()))?;
        used.insert(pair);
        pairs.push((pair.0, pair.1, c));
    }

    let [lo, hi] = cfg.mean_delay_range;
    let mid = 0.5 * (lo + hi);
    let mut nominal = Vec::with_capacity(cfg.n_p);
    for &(src, dst, _) in &pairs {
        let range = if !cfg.skewed_buffers || (is_buffered.contains(&src) && is_buffered.contains(&dst)) {
            (lo, hi)
        } else {
            let long = if is_buffered.contains(&dst) {
                long_inputs[dst]
            } else {
                !long_inputs[src]
            };
            if long {
                (mid, hi)
            } else {
                (lo, mid)
            }
        };
        nominal.push(if range.1 > range.0 {
            rng.random_range(range.0..range.1)
        } else {
            range.0
        });
    }

    let n_p = cfg.n_p;
    let flip_flops: Vec<FlipFlop> = (0..n_s)
        .map(|id| FlipFlop {
            id,
            buffer: is_buffered.contains(&id).then(|| TuningBuffer::new(0.0, 0.0, 2)),
            setup_time: cfg.setup_time,
            hold_time: cfg.hold_time,
        })
        .collect();
    let edges: Vec<TimingEdge> = pairs
        .iter()
        .enumerate()
        .map(|(id, &(src, dst, _))| TimingEdge {
            id,
            src,
            dst,
            setup_var: id,
            hold_var: n_p + id,
        })
        .collect();

    let mut means = vec![0.0; 2 * n_p];
    let mut sd = vec![0.0; 2 * n_p];
    for e in 0..n_p {
        let dst = pairs[e].1;
        means[e] = nominal[e] + flip_flops[dst].setup_time;
        sd[e] = cfg.cv * nominal[e];
        means[n_p + e] = flip_flops[dst].hold_time - cfg.min_delay_ratio * nominal[e];
        sd[n_p + e] = cfg.cv * cfg.min_delay_ratio * nominal[e];
    }
    let rho = |a: usize, b: usize| -> f64 {
        if a == b {
            1.0
        } else if pairs[a].2 == pairs[b].2 {
            cfg.intra_cluster_corr
        } else {
            cfg.global_corr
        }
    };
    let mut cov = DMatrix::from_fn(2 * n_p, 2 * n_p, |i, j| {
        let (ei, hi_) = (i % n_p, i >= n_p);
        let (ej, hj) = (j % n_p, j >= n_p);
        let sign = if hi_ == hj { 1.0 } else { -cfg.setup_hold_coupling };
        sign * sd[i] * sd[j] * rho(ei, ej)
    });
    repair_psd(&mut cov);
    let labels = (0..2 * n_p)
        .map(|i| VarLabel {
            edge: i % n_p,
            kind: if i < n_p {
                VarKind::SetupDelay
            } else {
                VarKind::HoldMargin
            },
        })
        .collect();
    let model = DelayModel::new(means, cov, labels)?;

    let designated_period = model.means()[..n_p].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let graph = TimingGraph {
        flip_flops,
        edges,
        designated_period,
        exclusions: Vec::new(),
    };
    let graph = buffer_defaults(&graph, designated_period);
    graph.validate(Some(model.dim()))?;
    Ok((graph, model))
}

fn draw_pair(
    rng: &mut ChaCha8Rng,
    homes: &[NodeId],
    pool: &[NodeId],
    plain: &[NodeId],
    buffered: &[NodeId],
    used: &HashSet<(NodeId, NodeId)>,
) -> Option<(NodeId, NodeId)> {
    let others = if !pool.is_empty() {
        pool
    } else if !plain.is_empty() {
        plain
    } else {
        buffered
    };
    for _ in 0..64 {
        let h = *homes.choose(rng)?;
        let u = *others.choose(rng)?;
        if u == h {
            continue;
        }
        let pair = if rng.random_bool(0.5) { (u, h) } else { (h, u) };
        if !used.contains(&pair) {
            return Some(pair);
        }
    }
    None
}

/// First unused pair with a buffered endpoint, in a fixed order.
fn scan_pair(buffered: &[NodeId], n_s: usize, used: &HashSet<(NodeId, NodeId)>) -> Option<(NodeId, NodeId)> {
    for &b in buffered {
        for u in 0..n_s {
            if u == b {
                continue;
            }
            for pair in [(u, b), (b, u)] {
                if !used.contains(&pair) {
                    return Some(pair);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_buffer_fraction_scale() {
        let cfg = GeneratorConfig {
            n_s: 211,
            buffer_fraction: 0.009,
            n_p: 80,
            ..Default::default()
        };
        let (g, m) = generate_benchmark(&cfg).unwrap();
        assert_eq!(g.num_nodes(), 211);
        assert_eq!(g.buffered_nodes().len(), 2);
        assert_eq!(g.num_edges(), 80);
        assert_eq!(m.dim(), 160);
    }

    #[test]
    fn rejects_too_few_paths() {
        let cfg = GeneratorConfig {
            n_s: 100,
            buffer_fraction: 0.1,
            n_p: 5,
            ..Default::default()
        };
        assert!(matches!(generate_benchmark(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rejects_too_many_paths() {
        let cfg = GeneratorConfig {
            n_s: 4,
            buffer_fraction: 0.25,
            n_p: 7,
            ..Default::default()
        };
        // One buffer among four nodes admits 3·2 = 6 directed pairs.
        assert_eq!(cfg.edge_capacity(), 6);
        assert!(generate_benchmark(&cfg).is_err());
        let ok = GeneratorConfig { n_p: 6, ..cfg };
        assert_eq!(generate_benchmark(&ok).unwrap().0.num_edges(), 6);
    }

    #[test]
    fn every_path_touches_a_buffer() {
        let (g, _) = generate_benchmark(&GeneratorConfig {
            n_s: 300,
            n_p: 200,
            buffer_fraction: 0.02,
            ..Default::default()
        })
        .unwrap();
        for e in &g.edges {
            assert!(g.buffer(e.src).is_some() || g.buffer(e.dst).is_some());
            assert_ne!(e.src, e.dst);
        }
    }
}
