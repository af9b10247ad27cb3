// SPDX-License-Identifier: Apache-2.0

//! Random instances and brute-force references shared by the solver checks.

#![allow(dead_code)]

use effitest_mip::{MipModel, Relation, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N_INT: usize = 5;
pub const N_CONT: usize = 3;
pub const N_ROWS: usize = 12;

pub struct Instance {
    pub model: MipModel,
    pub ints: Vec<VarId>,
    pub conts: Vec<VarId>,
}

pub fn random_mip(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MipModel::new();
    let ints: Vec<VarId> = (0..N_INT).map(|i| m.add_integer(format!("k{i}"), 0.0, 2.0)).collect();
    let conts: Vec<VarId> = (0..N_CONT)
        .map(|i| m.add_continuous(format!("c{i}"), -3.0, 4.0))
        .collect();
    // A witness point keeps every instance feasible.
    let mut witness: Vec<f64> = ints.iter().map(|_| rng.random_range(0..=2) as f64).collect();
    witness.extend(conts.iter().map(|_| rng.random_range(-3.0..4.0)));
    let all: Vec<VarId> = ints.iter().chain(&conts).copied().collect();
    for r in 0..N_ROWS {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &v in &all {
            if rng.random_bool(0.7) {
                terms.push((v, (rng.random_range(-40..=40) as f64) / 8.0));
            }
        }
        if terms.is_empty() {
            continue;
        }
        let act: f64 = terms.iter().map(|&(v, a)| a * witness[v.index()]).sum();
        let slack = rng.random_range(0.0..3.0);
        if rng.random_bool(0.5) {
            m.add_constraint(format!("r{r}"), terms, Relation::Le, act + slack);
        } else {
            m.add_constraint(format!("r{r}"), terms, Relation::Ge, act - slack);
        }
    }
    for &v in &all {
        m.set_objective(v, (rng.random_range(-30..=30) as f64) / 7.0);
    }
    Instance { model: m, ints, conts }
}

/// Solves a 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let p = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Exhaustive optimum: every integer assignment, continuous part solved by
/// enumerating the vertices of the residual 3-dimensional polytope.
pub fn enumerate(inst: &Instance) -> Option<f64> {
    let m = &inst.model;
    let mut best: Option<f64> = None;
    let n = m.num_vars();
    let assignments = 3usize.pow(N_INT as u32);
    for code in 0..assignments {
        let mut x = vec![0.0; n];
        let mut c = code;
        for &v in &inst.ints {
            x[v.index()] = (c % 3) as f64;
            c /= 3;
        }
        // Hyperplanes in continuous space: rows, then variable bounds.
        let mut planes: Vec<[f64; 4]> = Vec::new();
        for row in &m.constraints {
            let mut p = [0.0; 4];
            let mut rhs = row.rhs;
            for &(v, a) in &row.terms {
                if let Some(k) = inst.conts.iter().position(|&cv| cv == v) {
                    p[k] += a;
                } else {
                    rhs -= a * x[v.index()];
                }
            }
            p[3] = rhs;
            planes.push(p);
        }
        for (k, &v) in inst.conts.iter().enumerate() {
            for bound in [m.var(v).lower, m.var(v).upper] {
                let mut p = [0.0; 4];
                p[k] = 1.0;
                p[3] = bound;
                planes.push(p);
            }
        }
        for i in 0..planes.len() {
            for j in i + 1..planes.len() {
                for k in j + 1..planes.len() {
                    let Some(y) = solve3([planes[i], planes[j], planes[k]]) else {
                        continue;
                    };
                    for (q, &v) in inst.conts.iter().enumerate() {
                        x[v.index()] = y[q];
                    }
                    if m.max_violation(&x) <= 1e-7 {
                        let obj = m.evaluate(&x);
                        if best.is_none_or(|b| obj < b) {
                            best = Some(obj);
                        }
                    }
                }
            }
        }
    }
    best
}

pub struct Lp {
    pub a: Vec<Vec<f64>>,
    pub rel: Vec<Relation>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn random_lp(seed: u64) -> Lp {
    let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
    let n = rng.random_range(3..=8);
    let m = rng.random_range(2..=10);
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
    let x0: Vec<f64> = u.iter().map(|&ub| rng.random_range(0.0..ub)).collect();
    let mut a = Vec::new();
    let mut rel = Vec::new();
    let mut b = Vec::new();
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let act: f64 = row.iter().zip(&x0).map(|(p, q)| p * q).sum();
        let (r, rhs) = match rng.random_range(0..5) {
            0 => (Relation::Eq, act),
            1 | 2 => (Relation::Le, act + rng.random_range(0.0..4.0)),
            _ => (Relation::Ge, act - rng.random_range(0.0..4.0)),
        };
        a.push(row);
        rel.push(r);
        b.push(rhs);
    }
    let c = (0..n).map(|_| rng.random_range(-6.0..6.0)).collect();
    Lp { a, rel, b, c, u }
}

pub fn primal(lp: &Lp) -> MipModel {
    let mut m = MipModel::new();
    let xs: Vec<VarId> = lp
        .u
        .iter()
        .enumerate()
        .map(|(j, &ub)| m.add_continuous(format!("x{j}"), 0.0, ub))
        .collect();
    for (j, &c) in lp.c.iter().enumerate() {
        m.set_objective(xs[j], c);
    }
    for (i, row) in lp.a.iter().enumerate() {
        let terms = row.iter().enumerate().map(|(j, &v)| (xs[j], v)).collect();
        m.add_constraint(format!("r{i}"), terms, lp.rel[i], lp.b[i]);
    }
    m
}

/// Dual of `min c.x, rows, 0 <= x <= u` written as a minimization of the
/// negated dual objective.
pub fn dual(lp: &Lp) -> MipModel {
    let mut m = MipModel::new();
    let ys: Vec<(VarId, f64)> = lp
        .rel
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Relation::Ge => (m.add_continuous(format!("y{i}"), 0.0, f64::INFINITY), 1.0),
            Relation::Le => (m.add_continuous(format!("y{i}"), 0.0, f64::INFINITY), -1.0),
            Relation::Eq => (m.add_continuous(format!("y{i}"), f64::NEG_INFINITY, f64::INFINITY), 1.0),
        })
        .collect();
    let ws: Vec<VarId> = (0..lp.u.len())
        .map(|j| m.add_continuous(format!("w{j}"), 0.0, f64::INFINITY))
        .collect();
    for (i, &(y, s)) in ys.iter().enumerate() {
        m.set_objective(y, -s * lp.b[i]);
    }
    for (j, &w) in ws.iter().enumerate() {
        m.set_objective(w, lp.u[j]);
    }
    for j in 0..lp.u.len() {
        let mut terms: Vec<(VarId, f64)> = ys.iter().enumerate().map(|(i, &(y, s))| (y, s * lp.a[i][j])).collect();
        terms.push((ws[j], -1.0));
        m.add_constraint(format!("col{j}"), terms, Relation::Le, lp.c[j]);
    }
    m
}

