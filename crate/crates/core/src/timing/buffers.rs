// SPDX-License-Identifier: Apache-2.0

use super::graph::{TimingGraph, TuningBuffer};

/// Grid levels per buffer.
pub const DEFAULT_STEP_COUNT: u32 = 20;

/// Per-flip-flop clock shift `x`, indexed by node id. Unbuffered nodes hold 0.
pub type BufferAssignment = Vec<f64>;

/// Resets every buffered flip-flop to a range of width `T_d/8` centred on
/// zero, with 20 levels and the value on the level nearest zero.
pub fn buffer_defaults(graph: &TimingGraph, designated_period: f64) -> TimingGraph {
    let width = designated_period / 8.0;
    let mut out = graph.clone();
    for f in &mut out.flip_flops {
        if f.buffer.is_some() {
            f.buffer = Some(TuningBuffer::new(-width / 2.0, width, DEFAULT_STEP_COUNT));
        }
    }
    out
}

/// The current buffer values of `graph`.
pub fn default_assignment(graph: &TimingGraph) -> BufferAssignment {
    graph
        .flip_flops
        .iter()
        .map(|f| f.buffer.map_or(0.0, |b| b.value))
        .collect()
}

pub fn zero_assignment(graph: &TimingGraph) -> BufferAssignment {
    vec![0.0; graph.num_nodes()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::FlipFlop;

    fn one_buffer_graph() -> TimingGraph {
        TimingGraph {
            flip_flops: vec![
                FlipFlop {
                    id: 0,
                    buffer: Some(TuningBuffer::new(0.0, 0.0, 2)),
                    setup_time: 0.0,
                    hold_time: 0.0,
                },
                FlipFlop {
                    id: 1,
                    buffer: None,
                    setup_time: 0.0,
                    hold_time: 0.0,
                },
            ],
            edges: vec![],
            designated_period: 1.0,
            exclusions: vec![],
        }
    }

    #[test]
    fn period_eight_gives_unit_width() {
        let g = buffer_defaults(&one_buffer_graph(), 8.0);
        let b = g.flip_flops[0].buffer.unwrap();
        assert_eq!(b.range_width, 1.0);
        assert_eq!(b.range_start, -0.5);
        assert_eq!(b.step_count, 20);
        assert!((b.step() - 1.0 / 19.0).abs() < 1e-15);
        // Zero falls between levels 9 and 10; the lower one is kept.
        assert_eq!(b.value, b.level_value(9));
        assert!(b.is_on_grid(b.value));
        assert!(g.flip_flops[1].buffer.is_none());
    }

    #[test]
    fn width_scales_with_period() {
        let g = buffer_defaults(&one_buffer_graph(), 16.0);
        assert_eq!(g.flip_flops[0].buffer.unwrap().range_width, 2.0);
    }

    #[test]
    fn assignments() {
        let g = buffer_defaults(&one_buffer_graph(), 8.0);
        let a = default_assignment(&g);
        assert_eq!(a[0], g.flip_flops[0].buffer.unwrap().value);
        assert_eq!(a[1], 0.0);
        assert_eq!(zero_assignment(&g), vec![0.0, 0.0]);
    }
}
