// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::config::{configure_buffers, ConfigOptions, ConfigOutcome, ConfigProblem, EdgeRange};
use crate::error::Result;
use crate::timing::{BufferAssignment, ChipInstance, TimingGraph};

/// Setup and hold outcome of one configured chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCheck {
    pub setup: bool,
    pub hold: bool,
}

impl PassCheck {
    pub fn passes(&self) -> bool {
        self.setup && self.hold
    }
}

/// Checks `D + x_src − x_dst ≤ T` and `x_src − x_dst ≥ d` on every path
/// using the chip's true values.
pub fn check_chip(graph: &TimingGraph, chip: &ChipInstance, x: &BufferAssignment, period: f64) -> PassCheck {
    let mut out = PassCheck { setup: true, hold: true };
    for e in &graph.edges {
        let s = x[e.src] - x[e.dst];
        out.setup &= chip.true_delays[e.setup_var] + s <= period;
        out.hold &= s >= chip.true_delays[e.hold_var];
    }
    out
}

/// Per-chip verdicts and the pass fraction. `None` marks a chip declared
/// failing because its configuration was infeasible.
pub fn evaluate_yield(
    graph: &TimingGraph,
    chips: &[ChipInstance],
    configurations: &[Option<BufferAssignment>],
    period: f64,
) -> (f64, Vec<Option<PassCheck>>) {
    assert_eq!(chips.len(), configurations.len());
    let checks: Vec<Option<PassCheck>> = chips
        .iter()
        .zip(configurations)
        .map(|(c, x)| x.as_ref().map(|x| check_chip(graph, c, x, period)))
        .collect();
    (pass_fraction(&checks), checks)
}

pub fn pass_fraction(checks: &[Option<PassCheck>]) -> f64 {
    if checks.is_empty() {
        return 0.0;
    }
    let n = checks.iter().filter(|c| c.is_some_and(|c| c.passes())).count();
    n as f64 / checks.len() as f64
}

/// Configuration from exact knowledge (`l = u =` true delay).
pub fn ideal_configuration(
    graph: &TimingGraph,
    chip: &ChipInstance,
    period: f64,
    hold: Option<&[f64]>,
    opts: &ConfigOptions,
) -> Result<ConfigOutcome> {
    let ranges = graph
        .edges
        .iter()
        .map(|e| {
            let d = chip.true_delays[e.setup_var];
            EdgeRange {
                edge: e.id,
                lower: d,
                upper: d,
            }
        })
        .collect();
    configure_buffers(
        &ConfigProblem {
            graph,
            period,
            ranges,
            hold,
        },
        opts,
    )
}

/// Largest true setup delay of the chip: its minimum period without buffers.
pub fn critical_delay(graph: &TimingGraph, chip: &ChipInstance) -> f64 {
    graph
        .edges
        .iter()
        .map(|e| chip.true_delays[e.setup_var])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Empirical `q`-quantile: the `⌈qN⌉`-th smallest value.
pub fn empirical_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_indexing() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(empirical_quantile(&v, 0.5), 3.0);
        assert_eq!(empirical_quantile(&v, 0.2), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0), 5.0);
        assert_eq!(empirical_quantile(&v, 0.0), 1.0);
    }

    #[test]
    fn declared_failing_counts_as_loss() {
        let checks = vec![Some(PassCheck { setup: true, hold: true }), None];
        assert_eq!(pass_fraction(&checks), 0.5);
    }
}
