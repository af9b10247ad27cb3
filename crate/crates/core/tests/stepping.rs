// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{diagonal_model, four_stage_loop, graph};
use effitest::configurator::{compute_hold_bounds, HoldOptions};
use effitest::scheduler::{form_batches, TestBatch};
use effitest::tester::{
    apply_frequency_step, bisect_path, default_resolution, run_batch_test, run_chip_test, DelayBound, IterationRecord,
    TestSetup, TesterConfig,
};
use effitest::timing::{default_assignment, zero_assignment, Benchmark, ChipInstance, ChipSampler, GeneratorConfig};

#[test]
fn step_outcomes() {
    let g = graph(vec![None, None], &[(0, 1)]);
    let x = zero_assignment(&g);
    let chip = |d: f64| ChipInstance {
        chip_id: 0,
        true_delays: vec![d, -1.0],
    };
    assert_eq!(apply_frequency_step(&g, &[0], &chip(7.9), 8.0, &x), vec![true]);
    assert_eq!(apply_frequency_step(&g, &[0], &chip(8.1), 8.0, &x), vec![false]);
}

#[test]
fn loop_runs_at_the_average_delay() {
    let (g, chip) = four_stage_loop();
    let ids = [0, 1, 2, 3];
    let zero = zero_assignment(&g);
    assert_eq!(apply_frequency_step(&g, &ids, &chip, 8.0, &zero), vec![true; 4]);
    assert!(apply_frequency_step(&g, &ids, &chip, 7.9, &zero).contains(&false));
    // Skews −2.5, 2.5, −0.5, 0.5 around the loop.
    let x = vec![0.0, 2.5, 0.0, 0.5];
    assert_eq!(apply_frequency_step(&g, &ids, &chip, 5.5, &x), vec![true; 4]);
    assert!(apply_frequency_step(&g, &ids, &chip, 5.4, &x).contains(&false));
}

#[test]
fn bisection_counts() {
    let g = graph(vec![None, None], &[(0, 1)]);
    let sigma = 0.4;
    let m = diagonal_model(&[(10.0, sigma)], &[(-1.0, 0.1)]);
    let s = ChipSampler::new(&m, 1).unwrap();
    for id in 0..200 {
        let chip = s.sample(id);
        if !DelayBound::initial(&g, &m, 0).contains(chip.true_delays[0]) {
            continue;
        }
        for bits in [8u32, 6] {
            let eps = 6.0 * sigma / f64::from(1u32 << bits);
            let (b, it) = bisect_path(&g, &m, 0, &chip, eps, 100).unwrap();
            assert_eq!(it, bits as usize);
            assert!(b.lower <= chip.true_delays[0] && chip.true_delays[0] <= b.upper);
        }
    }
}

#[test]
fn aligned_pair_costs_one_path() {
    let g = graph(vec![None; 4], &[(0, 1), (2, 3)]);
    let sigma = 0.5;
    let m = diagonal_model(&[(9.0, sigma), (9.0, sigma)], &[(-1.0, 0.1), (-1.0, 0.1)]);
    let cfg = TesterConfig {
        resolution: 6.0 * sigma / 256.0,
        ..TesterConfig::default()
    };
    let base = zero_assignment(&g);
    let setup = TestSetup {
        graph: &g,
        model: &m,
        base: &base,
        config: &cfg,
        hold: None,
    };
    let chip = ChipInstance {
        chip_id: 0,
        true_delays: vec![9.3, 9.3, -1.0, -1.0],
    };
    let batch = TestBatch {
        index: 0,
        edges: vec![0, 1],
    };
    let r = run_batch_test(&setup, &batch, &chip, None).unwrap();
    assert_eq!(r.iterations, 8);
    for b in &r.bounds {
        assert!(b.lower <= 9.3 && 9.3 <= b.upper);
    }
}

#[test]
fn out_of_window_delay_clamps() {
    let g = graph(vec![None, None], &[(0, 1)]);
    let m = diagonal_model(&[(10.0, 0.5)], &[(-1.0, 0.1)]);
    let cfg = TesterConfig {
        resolution: 0.01,
        ..TesterConfig::default()
    };
    let base = zero_assignment(&g);
    let setup = TestSetup {
        graph: &g,
        model: &m,
        base: &base,
        config: &cfg,
        hold: None,
    };
    let chip = ChipInstance {
        chip_id: 3,
        true_delays: vec![20.0, -1.0],
    };
    let mut log = Vec::new();
    let r = run_batch_test(&setup, &TestBatch { index: 0, edges: vec![0] }, &chip, Some(&mut log)).unwrap();
    assert_eq!(r.out_of_window, vec![0]);
    assert_eq!(r.bounds[0].upper, 11.5);
    assert!(r.bounds[0].width() < 1e-12);
    assert!(log.iter().any(|rec| rec.edges.iter().any(|s| s.clamped)));
}

#[test]
fn zero_batches_zero_iterations() {
    let g = graph(vec![None, None], &[(0, 1)]);
    let m = diagonal_model(&[(10.0, 0.5)], &[(-1.0, 0.1)]);
    let cfg = TesterConfig::default();
    let base = zero_assignment(&g);
    let setup = TestSetup {
        graph: &g,
        model: &m,
        base: &base,
        config: &cfg,
        hold: None,
    };
    let chip = ChipInstance {
        chip_id: 0,
        true_delays: vec![10.0, -1.0],
    };
    assert_eq!(run_chip_test(&setup, &[], &chip, None).unwrap().iterations, 0);
}

/// Rebuilds every bound from the log and checks it against the stored one,
/// along with monotonicity and the per-path iteration cap.
fn replay(g: &effitest::timing::TimingGraph, m: &effitest::timing::DelayModel, log: &[IterationRecord], eps: f64) {
    use std::collections::HashMap;
    let mut bounds: HashMap<(u64, usize, usize), DelayBound> = HashMap::new();
    let mut visits: HashMap<(u64, usize, usize), usize> = HashMap::new();
    for rec in log {
        for s in &rec.edges {
            let e = g.edge(s.edge);
            let x = |n| rec.buffer_value(n).expect("endpoint logged");
            let key = (rec.chip, rec.batch, s.edge);
            let b = bounds.entry(key).or_insert_with(|| DelayBound::initial(g, m, s.edge));
            let (l0, u0) = (b.lower, b.upper);
            b.update(rec.period - (x(e.src) - x(e.dst)), s.pass);
            assert_eq!((b.lower, b.upper), (s.lower, s.upper));
            assert!(b.lower >= l0 && b.upper <= u0);
            *visits.entry(key).or_default() += 1;
        }
    }
    // Iterations per path of a batch stay within ⌈log₂(6σ_max/ε)⌉ + 1.
    let max_sd = g.edges.iter().map(|e| m.std_dev(e.setup_var)).fold(0.0, f64::max);
    let cap = (6.0 * max_sd / eps).log2().ceil() as usize + 1;
    assert!(!visits.is_empty());
    let mut per_batch: HashMap<(u64, usize), (usize, usize)> = HashMap::new();
    for rec in log {
        per_batch.entry((rec.chip, rec.batch)).or_default().0 += 1;
    }
    for &(chip, batch, _) in visits.keys() {
        per_batch.get_mut(&(chip, batch)).unwrap().1 += 1;
    }
    for (k, (iterations, paths)) in per_batch {
        assert!(iterations <= cap * paths, "{k:?}: {iterations} iterations for {paths} paths");
    }
}

#[test]
fn log_replays_and_brackets() {
    let b = Benchmark::generate(&GeneratorConfig {
        n_p: 50,
        seed: 12,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let (g, m) = (&b.graph, &b.model);
    let hold = compute_hold_bounds(g, m, 500, 0.99, 3, &HoldOptions::default()).unwrap();
    let batches = form_batches(&g.edge_ids(), g);
    let cfg = TesterConfig {
        resolution: default_resolution(g, m),
        ..TesterConfig::default()
    };
    let base = default_assignment(g);
    let setup = TestSetup {
        graph: g,
        model: m,
        base: &base,
        config: &cfg,
        hold: Some(&hold.lambda),
    };
    let s = ChipSampler::new(m, 5).unwrap();
    let mut log = Vec::new();
    for id in 0..30 {
        let chip = s.sample(id);
        let r = run_chip_test(&setup, &batches, &chip, Some(&mut log)).unwrap();
        assert_eq!(r.bounds.len(), g.num_edges());
        for bd in &r.bounds {
            assert!(bd.resolved(cfg.resolution));
            let d = chip.true_delays[g.edge(bd.edge).setup_var];
            if DelayBound::initial(g, m, bd.edge).contains(d) {
                assert!(bd.lower <= d && d <= bd.upper);
            }
        }
        // Every logged buffer value respects the hold rows of its batch.
        for rec in log.iter().filter(|r| r.chip == id) {
            for &(n, x) in &rec.buffers {
                if let Some(buf) = g.buffer(n) {
                    assert!(buf.is_on_grid(x));
                }
            }
        }
    }
    replay(g, m, &log, cfg.resolution);
}

#[test]
fn jsonl_log_round_trips() {
    let (g, chip) = four_stage_loop();
    let m = diagonal_model(
        &[(8.0, 0.3), (3.0, 0.3), (6.0, 0.3), (5.0, 0.3)],
        &[(-5.0, 0.1), (-5.0, 0.1), (-5.0, 0.1), (-5.0, 0.1)],
    );
    let cfg = TesterConfig {
        resolution: 0.01,
        ..TesterConfig::default()
    };
    let base = zero_assignment(&g);
    let setup = TestSetup {
        graph: &g,
        model: &m,
        base: &base,
        config: &cfg,
        hold: None,
    };
    let mut log = Vec::new();
    let batches = form_batches(&[0, 1, 2, 3], &g);
    assert_eq!(batches.len(), 1, "a loop fits in one batch");
    let r = run_chip_test(&setup, &batches, &chip, Some(&mut log)).unwrap();
    for (k, bd) in r.bounds.iter().enumerate() {
        let d = chip.true_delays[k];
        assert!(bd.lower <= d && d <= bd.upper);
    }
    let mut buf = Vec::new();
    effitest::tester::write_jsonl(&mut buf, &log).unwrap();
    let back = effitest::tester::read_jsonl(&buf[..]).unwrap();
    assert_eq!(back, log);
    replay(&g, &m, &log, cfg.resolution);
}
