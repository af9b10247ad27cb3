// SPDX-License-Identifier: Apache-2.0

//! Timing graph, tuning buffers, statistical delay model and chip sampling.

mod buffers;
mod generator;
mod graph;
mod io;
mod model;
mod sampling;

pub use buffers::{buffer_defaults, default_assignment, zero_assignment, BufferAssignment, DEFAULT_STEP_COUNT};
pub use generator::{generate_benchmark, GeneratorConfig};
pub use graph::{EdgeId, ExclusionSet, FlipFlop, NodeId, TimingEdge, TimingGraph, TuningBuffer};
pub use io::{Benchmark, BENCHMARK_FORMAT_VERSION};
pub use model::{repair_psd, DelayModel, VarKind, VarLabel};
pub use sampling::{sample_chip, ChipInstance, ChipSampler};
