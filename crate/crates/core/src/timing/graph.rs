// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// A clock-path delay element with a discrete range `r ..= r + τ`.
///
/// Level `k` sits at `r + k·τ/(step_count − 1)`. Every value handed out by
/// this type is computed from an integer level with that one formula, so
/// grid membership can be checked by exact comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningBuffer {
    pub range_start: f64,
    pub range_width: f64,
    pub step_count: u32,
    pub value: f64,
}

impl TuningBuffer {
    /// Builds a buffer with its value on the level nearest zero.
    pub fn new(range_start: f64, range_width: f64, step_count: u32) -> Self {
        let mut b = Self {
            range_start,
            range_width,
            step_count,
            value: range_start,
        };
        b.value = b.snap(0.0);
        b
    }

    pub fn step(&self) -> f64 {
        if self.step_count < 2 {
            0.0
        } else {
            self.range_width / f64::from(self.step_count - 1)
        }
    }

    pub fn max_level(&self) -> u32 {
        self.step_count.saturating_sub(1)
    }

    pub fn level_value(&self, level: u32) -> f64 {
        self.range_start + f64::from(level) * self.step()
    }

    pub fn min_value(&self) -> f64 {
        self.level_value(0)
    }

    pub fn max_value(&self) -> f64 {
        self.level_value(self.max_level())
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.step_count).map(|k| self.level_value(k))
    }

    /// Level closest to `x`; exact midpoints go to the lower level.
    pub fn nearest_level(&self, x: f64) -> u32 {
        let step = self.step();
        if step <= 0.0 {
            return 0;
        }
        let kf = (x - self.range_start) / step;
        let lo = kf.floor();
        let k = if kf - lo <= 0.5 + 1e-9 { lo } else { lo + 1.0 };
        k.clamp(0.0, f64::from(self.max_level())) as u32
    }

    pub fn snap(&self, x: f64) -> f64 {
        self.level_value(self.nearest_level(x))
    }

    pub fn is_on_grid(&self, x: f64) -> bool {
        (x - self.snap(x)).abs() <= 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.step_count >= 2
            && self.range_start.is_finite()
            && self.range_width.is_finite()
            && self.range_width >= 0.0;
        if !ok {
            return Err(Error::InvalidGraph(format!(
                "buffer range r={} τ={} with {} levels",
                self.range_start, self.range_width, self.step_count
            )));
        }
        if !self.is_on_grid(self.value) {
            return Err(Error::InvalidGraph(format!("buffer value {} is off its grid", self.value)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipFlop {
    pub id: NodeId,
    pub buffer: Option<TuningBuffer>,
    pub setup_time: f64,
    pub hold_time: f64,
}

/// A combinational path between two flip-flops. `setup_var` indexes the
/// setup delay `D` and `hold_var` the hold margin `d` in the delay model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingEdge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub setup_var: usize,
    pub hold_var: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingGraph {
    pub flip_flops: Vec<FlipFlop>,
    pub edges: Vec<TimingEdge>,
    pub designated_period: f64,
    /// Unordered pairs of paths that may not share a test batch.
    #[serde(default)]
    pub exclusions: Vec<(EdgeId, EdgeId)>,
}

impl TimingGraph {
    pub fn num_nodes(&self) -> usize {
        self.flip_flops.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: EdgeId) -> &TimingEdge {
        &self.edges[id]
    }

    pub fn buffer(&self, node: NodeId) -> Option<&TuningBuffer> {
        self.flip_flops[node].buffer.as_ref()
    }

    pub fn buffered_nodes(&self) -> Vec<NodeId> {
        self.flip_flops
            .iter()
            .filter(|f| f.buffer.is_some())
            .map(|f| f.id)
            .collect()
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        (0..self.edges.len()).collect()
    }

    pub fn exclusion_set(&self) -> ExclusionSet {
        ExclusionSet::new(&self.exclusions)
    }

    /// Checks ids, endpoints, buffers and the exclusion list. When
    /// `model_dim` is given, edge variables must index into it.
    pub fn validate(&self, model_dim: Option<usize>) -> Result<()> {
        if !(self.designated_period.is_finite() && self.designated_period > 0.0) {
            return Err(Error::InvalidGraph(format!(
                "designated period {} must be positive",
                self.designated_period
            )));
        }
        for (i, f) in self.flip_flops.iter().enumerate() {
            if f.id != i {
                return Err(Error::InvalidGraph(format!("flip-flop at position {i} has id {}", f.id)));
            }
            if !(f.setup_time >= 0.0 && f.hold_time >= 0.0) {
                return Err(Error::InvalidGraph(format!("flip-flop {i} has a negative setup or hold time")));
            }
            if let Some(b) = &f.buffer {
                b.validate()
                    .map_err(|e| Error::InvalidGraph(format!("flip-flop {i}: {e}")))?;
            }
        }
        let n = self.flip_flops.len();
        for (i, e) in self.edges.iter().enumerate() {
            if e.id != i {
                return Err(Error::InvalidGraph(format!("edge at position {i} has id {}", e.id)));
            }
            if e.src >= n || e.dst >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} joins {} -> {} outside {n} flip-flops",
                    e.src, e.dst
                )));
            }
            if let Some(dim) = model_dim {
                if e.setup_var >= dim || e.hold_var >= dim {
                    return Err(Error::InvalidGraph(format!(
                        "edge {i} references model variables {}/{} beyond dimension {dim}",
                        e.setup_var, e.hold_var
                    )));
                }
            }
        }
        for &(a, b) in &self.exclusions {
            if a >= self.edges.len() || b >= self.edges.len() || a == b {
                return Err(Error::InvalidGraph(format!("exclusion pair ({a}, {b}) is invalid")));
            }
        }
        Ok(())
    }
}

/// Symmetric lookup over excluded path pairs.
#[derive(Debug, Clone, Default)]
pub struct ExclusionSet {
    pairs: HashSet<(EdgeId, EdgeId)>,
}

impl ExclusionSet {
    pub fn new(pairs: &[(EdgeId, EdgeId)]) -> Self {
        Self {
            pairs: pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect(),
        }
    }

    pub fn contains(&self, a: EdgeId, b: EdgeId) -> bool {
        self.pairs.contains(&(a.min(b), a.max(b)))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_grid() {
        let b = TuningBuffer::new(-0.5, 1.0, 2);
        assert_eq!(b.levels().collect::<Vec<_>>(), vec![-0.5, 0.5]);
        // Zero is equidistant; the lower level wins.
        assert_eq!(b.value, -0.5);
        assert!(b.is_on_grid(0.5));
        assert!(!b.is_on_grid(0.0));
    }

    #[test]
    fn snapping_clamps_to_range() {
        let b = TuningBuffer::new(0.0, 1.0, 5);
        assert_eq!(b.snap(7.0), 1.0);
        assert_eq!(b.snap(-3.0), 0.0);
        assert_eq!(b.snap(0.3), 0.25);
        assert_eq!(b.nearest_level(0.375), 1);
    }

    #[test]
    fn exclusions_are_unordered() {
        let s = ExclusionSet::new(&[(3, 1)]);
        assert!(s.contains(1, 3));
        assert!(s.contains(3, 1));
        assert!(!s.contains(1, 2));
    }
}
