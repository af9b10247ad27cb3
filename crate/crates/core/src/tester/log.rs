// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::timing::{EdgeId, NodeId};

/// Outcome of one path in one test iteration, with its bounds afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeStep {
    pub edge: EdgeId,
    pub pass: bool,
    pub lower: f64,
    pub upper: f64,
    /// The result contradicted the current range, so the true delay lies
    /// outside the initial ±3σ window and the range collapsed onto its edge.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clamped: bool,
}

/// One tester iteration: a clock period, the buffer values of every
/// endpoint of the active paths, and the per-path results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub chip: u64,
    pub batch: usize,
    pub iteration: usize,
    pub period: f64,
    pub buffers: Vec<(NodeId, f64)>,
    pub edges: Vec<EdgeStep>,
}

impl IterationRecord {
    pub fn buffer_value(&self, node: NodeId) -> Option<f64> {
        self.buffers.iter().find(|(n, _)| *n == node).map(|&(_, x)| x)
    }
}

/// Writes one JSON record per line.
pub fn write_jsonl<W: Write>(mut out: W, records: &[IterationRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> std::io::Result<Vec<IterationRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
