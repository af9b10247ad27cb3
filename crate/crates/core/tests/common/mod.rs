// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use effitest::timing::{ChipInstance, DelayModel, FlipFlop, TimingEdge, TimingGraph, TuningBuffer, VarKind, VarLabel};
use nalgebra::{DMatrix, DVector};

pub fn graph(buffers: Vec<Option<TuningBuffer>>, pairs: &[(usize, usize)]) -> TimingGraph {
    let k = pairs.len();
    TimingGraph {
        flip_flops: buffers
            .into_iter()
            .enumerate()
            .map(|(id, buffer)| FlipFlop {
                id,
                buffer,
                setup_time: 0.0,
                hold_time: 0.0,
            })
            .collect(),
        edges: pairs
            .iter()
            .enumerate()
            .map(|(id, &(src, dst))| TimingEdge {
                id,
                src,
                dst,
                setup_var: id,
                hold_var: k + id,
            })
            .collect(),
        designated_period: 10.0,
        exclusions: Vec::new(),
    }
}

/// Independent setup delays and hold margins.
pub fn diagonal_model(setup: &[(f64, f64)], hold: &[(f64, f64)]) -> DelayModel {
    let all: Vec<(f64, f64)> = setup.iter().chain(hold).copied().collect();
    let labels = (0..setup.len())
        .map(|edge| VarLabel {
            edge,
            kind: VarKind::SetupDelay,
        })
        .chain((0..hold.len()).map(|edge| VarLabel {
            edge,
            kind: VarKind::HoldMargin,
        }))
        .collect();
    DelayModel::new(
        all.iter().map(|p| p.0).collect(),
        DMatrix::from_diagonal(&DVector::from_iterator(all.len(), all.iter().map(|p| p.1 * p.1))),
        labels,
    )
    .unwrap()
}

/// The four-flip-flop loop with path delays 8, 3, 6 and 5: the loop
/// average 5.5 is the smallest period any skew schedule reaches.
pub fn four_stage_loop() -> (TimingGraph, ChipInstance) {
    let buffers = (0..4).map(|_| Some(TuningBuffer::new(-3.0, 6.0, 13))).collect();
    let g = graph(buffers, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    let chip = ChipInstance {
        chip_id: 0,
        true_delays: vec![8.0, 3.0, 6.0, 5.0, -5.0, -5.0, -5.0, -5.0],
    };
    (g, chip)
}
