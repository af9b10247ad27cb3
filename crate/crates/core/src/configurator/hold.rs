// SPDX-License-Identifier: Apache-2.0

use effitest_mip::{solve, MipModel, Relation, SolveStatus, SolverOptions, VarId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing::{ChipSampler, DelayModel, TimingGraph};

/// How the sample selection was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldMethod {
    Exact,
    Greedy,
}

/// Lower bounds `λ` on `x_src − x_dst`, one per edge id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldBounds {
    pub lambda: Vec<f64>,
    pub sample_count: usize,
    pub kept: usize,
    pub target: f64,
    pub method: HoldMethod,
}

/// Caps on the exact model; beyond them the greedy selection is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldOptions {
    pub exact_max_samples: usize,
    pub exact_max_rows: usize,
    pub solver: SolverOptions,
}

impl Default for HoldOptions {
    fn default() -> Self {
        Self {
            exact_max_samples: 300,
            exact_max_rows: 400,
            solver: SolverOptions::default(),
        }
    }
}

/// Number of samples that must be kept: `⌈Y·M⌉`.
pub fn kept_count(samples: usize, target: f64) -> usize {
    ((target * samples as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Draws `samples` joint hold margins (chips `0..samples` of `seed`) and
/// picks `λ` so that at least a fraction `target` of the samples meet every
/// hold constraint while `Σ λ` is as small as possible.
pub fn compute_hold_bounds(
    graph: &TimingGraph,
    model: &DelayModel,
    samples: usize,
    target: f64,
    seed: u64,
    opts: &HoldOptions,
) -> Result<HoldBounds> {
    let sampler = ChipSampler::new(model, seed)?;
    // values[e][k] = d_e in sample k
    let mut values = vec![Vec::with_capacity(samples); graph.num_edges()];
    for k in 0..samples {
        let chip = sampler.sample(k as u64);
        for e in &graph.edges {
            values[e.id].push(chip.true_delays[e.hold_var]);
        }
    }
    hold_bounds_from_samples(&values, target, opts)
}

/// `values[e][k]` is the hold margin of path `e` in sample `k`.
pub fn hold_bounds_from_samples(values: &[Vec<f64>], target: f64, opts: &HoldOptions) -> Result<HoldBounds> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidYieldTarget(target));
    }
    let m = values.first().map_or(0, Vec::len);
    if values.iter().any(|v| v.len() != m) {
        return Err(Error::InvalidModel("hold samples have unequal lengths".into()));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("hold bounds need at least one sample".into()));
    }
    let kept = kept_count(m, target);
    let droppable = m - kept;

    if droppable == 0 {
        return Ok(HoldBounds {
            lambda: values.iter().map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect(),
            sample_count: m,
            kept: m,
            target,
            method: HoldMethod::Exact,
        });
    }
    if m <= opts.exact_max_samples {
        if let Some(lambda) = exact(values, droppable, opts)? {
            return Ok(HoldBounds {
                lambda,
                sample_count: m,
                kept,
                target,
                method: HoldMethod::Exact,
            });
        }
    }
    Ok(HoldBounds {
        lambda: greedy(values, droppable),
        sample_count: m,
        kept,
        target,
        method: HoldMethod::Greedy,
    })
}

/// Exact selection as a MILP over the samples that can matter.
///
/// Whatever is dropped, `λ_e` is at least the `(D+1)`-th largest sample of
/// path `e` (`D` = droppable count). Only samples above that floor need a
/// selector and a row, and the row's big-M can be the distance to the floor.
/// Returns `None` when the reduced model is still too large.
fn exact(values: &[Vec<f64>], droppable: usize, opts: &HoldOptions) -> Result<Option<Vec<f64>>> {
    let m = values[0].len();
    let mut floors = Vec::with_capacity(values.len());
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for (e, v) in values.iter().enumerate() {
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let floor = sorted[droppable];
        floors.push(floor);
        rows.extend((0..m).filter(|&k| v[k] > floor).map(|k| (e, k)));
    }
    if rows.len() > opts.exact_max_rows {
        return Ok(None);
    }
    let mut model = MipModel::new();
    let mut selectors: Vec<Option<VarId>> = vec![None; m];
    for &(_, k) in &rows {
        if selectors[k].is_none() {
            selectors[k] = Some(model.add_binary(format!("y{k}")));
        }
    }
    let used: Vec<VarId> = selectors.iter().flatten().copied().collect();
    let lambdas: Vec<Option<VarId>> = (0..values.len())
        .map(|e| {
            rows.iter().any(|r| r.0 == e).then(|| {
                let v = model.add_continuous(format!("lambda{e}"), floors[e], f64::INFINITY);
                model.set_objective(v, 1.0);
                v
            })
        })
        .collect();
    // At most `droppable` of the candidate samples may be unselected.
    model.add_constraint(
        "keep",
        used.iter().map(|&y| (y, 1.0)).collect(),
        Relation::Ge,
        used.len() as f64 - droppable as f64,
    );
    for &(e, k) in &rows {
        // λ_e − d_ek ≥ M_ek (y_k − 1), M_ek = d_ek − floor_e
        let big_m = values[e][k] - floors[e];
        let y = selectors[k].expect("selector");
        let lam = lambdas[e].expect("lambda");
        model.add_constraint(
            format!("h{e}_{k}"),
            vec![(lam, 1.0), (y, -big_m)],
            Relation::Ge,
            values[e][k] - big_m,
        );
    }
    let sol = solve(&model, &opts.solver)?;
    if sol.status != SolveStatus::Optimal {
        return Ok(None);
    }
    // Rebuild λ from the selection so the values are exact sample maxima.
    let dropped: Vec<bool> = (0..m)
        .map(|k| selectors[k].is_some_and(|y| sol.value(y) < 0.5))
        .collect();
    Ok(Some(maxima(values, &dropped)))
}

fn maxima(values: &[Vec<f64>], dropped: &[bool]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            v.iter()
                .zip(dropped)
                .filter(|(_, &d)| !d)
                .map(|(&x, _)| x)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Repeatedly drops the sample whose removal lowers `Σ λ` the most (ties
/// to the lowest index), stopping early when no removal helps.
fn greedy(values: &[Vec<f64>], droppable: usize) -> Vec<f64> {
    let m = values[0].len();
    let mut dropped = vec![false; m];
    for _ in 0..droppable {
        let mut gain = vec![0.0; m];
        for v in values {
            let mut top: Option<(usize, f64)> = None;
            let mut second = f64::NEG_INFINITY;
            for (k, &x) in v.iter().enumerate() {
                if dropped[k] {
                    continue;
                }
                match top {
                    Some((_, t)) if x <= t => second = second.max(x),
                    Some((_, t)) => {
                        second = t;
                        top = Some((k, x));
                    }
                    None => top = Some((k, x)),
                }
            }
            if let Some((k, t)) = top {
                if second.is_finite() {
                    gain[k] += t - second;
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, &g) in gain.iter().enumerate() {
            if !dropped[k] && g > 0.0 && best.is_none_or(|(_, bg)| g > bg) {
                best = Some((k, g));
            }
        }
        match best {
            Some((k, _)) => dropped[k] = true,
            None => break,
        }
    }
    maxima(values, &dropped)
}
