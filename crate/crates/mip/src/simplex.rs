// SPDX-License-Identifier: Apache-2.0

//! Dense bounded-variable primal simplex.
//!
//! Every model variable is rewritten as a non-negative column, possibly with
//! a finite upper bound. Columns sitting at their upper bound are complemented
//! (`y = u - y'`) so that every nonbasic column is at zero in tableau space.
//! Phase one minimizes the sum of artificials; phase two the real objective.
//! Pricing is Dantzig's rule until a run of degenerate pivots is seen, after
//! which Bland's smallest-index rule takes over for the rest of the solve.

use crate::model::{MipModel, Relation};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpOutcome {
    fn failed(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }
}

/// How a model variable maps onto non-negative tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x = offset + y
    Shift { col: usize, offset: f64 },
    /// x = offset - y
    Mirror { col: usize, offset: f64 },
    /// x = y+ - y-
    Split { pos: usize, neg: usize },
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 40;

struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    enterable: Vec<bool>,
    d: Vec<f64>,
    z: f64,
    bland: bool,
    degenerate_run: usize,
    iterations: usize,
}

#[derive(Clone, Copy)]
enum Leave {
    ToZero,
    ToUpper,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    fn flip_nonbasic(&mut self, q: usize) {
        let u = self.upper[q];
        for r in 0..self.rows {
            let idx = r * self.cols + q;
            let a = self.a[idx];
            if a != 0.0 {
                self.b[r] -= a * u;
                self.a[idx] = -a;
            }
        }
        self.z += self.d[q] * u;
        self.d[q] = -self.d[q];
        self.flipped[q] = !self.flipped[q];
    }

    fn complement_basic(&mut self, r: usize) {
        let bv = self.basis[r];
        let u = self.upper[bv];
        let row = &mut self.a[r * self.cols..(r + 1) * self.cols];
        for (c, v) in row.iter_mut().enumerate() {
            if c != bv {
                *v = -*v;
            }
        }
        self.b[r] = u - self.b[r];
        self.flipped[bv] = !self.flipped[bv];
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.a[r * cols + q];
        {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        self.b[r] /= piv;
        let pivot_row: Vec<f64> = self.a[r * cols..(r + 1) * cols].to_vec();
        let br = self.b[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if *p != 0.0 {
                    *v -= f * p;
                }
            }
            row[q] = 0.0;
            self.b[i] -= f * br;
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, p) in self.d.iter_mut().zip(&pivot_row) {
                if *p != 0.0 {
                    *v -= f * p;
                }
            }
            self.d[q] = 0.0;
            self.z += f * br;
        }
        let old = self.basis[r];
        self.basic_row[old] = None;
        self.basis[r] = q;
        self.basic_row[q] = Some(r);
    }

    fn choose_entering(&self, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if !self.enterable[j] || self.basic_row[j].is_some() {
                continue;
            }
            let dj = self.d[j];
            if dj < -tol {
                if self.bland {
                    return Some(j);
                }
                match best {
                    Some((_, bd)) if bd <= dj => {}
                    _ => best = Some((j, dj)),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Runs simplex iterations until optimal, unbounded or out of budget.
    fn iterate(&mut self, tol: &Tolerances, max_iterations: usize) -> LpStatus {
        loop {
            let Some(q) = self.choose_entering(tol.optimality) else {
                return LpStatus::Optimal;
            };
            if self.iterations >= max_iterations {
                return LpStatus::IterationLimit;
            }
            self.iterations += 1;

            let mut best: Option<(f64, usize, Leave, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, q);
                let (t, kind) = if a > tol.pivot {
                    (self.b[r].max(0.0) / a, Leave::ToZero)
                } else if a < -tol.pivot {
                    let ub = self.upper[self.basis[r]];
                    if !ub.is_finite() {
                        continue;
                    }
                    ((ub - self.b[r]).max(0.0) / -a, Leave::ToUpper)
                } else {
                    continue;
                };
                let better = match best {
                    None => true,
                    Some((bt, br, _, ba)) => {
                        if t < bt - 1e-12 {
                            true
                        } else if t <= bt + 1e-12 {
                            if self.bland {
                                self.basis[r] < self.basis[br]
                            } else {
                                a.abs() > ba
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((t, r, kind, a.abs()));
                }
            }

            let own = self.upper[q];
            let step = match best {
                Some((t, ..)) => t.min(own),
                None => own,
            };
            if !step.is_finite() {
                return LpStatus::Unbounded;
            }
            if step <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }

            match best {
                Some((t, r, kind, _)) if t < own => {
                    if let Leave::ToUpper = kind {
                        self.complement_basic(r);
                    }
                    self.pivot(r, q);
                }
                _ => self.flip_nonbasic(q),
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        for (j, v) in y.iter_mut().enumerate() {
            let raw = match self.basic_row[j] {
                Some(r) => self.b[r],
                None => 0.0,
            };
            *v = if self.flipped[j] { self.upper[j] - raw } else { raw };
        }
        y
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let eff = |j: usize| if self.flipped[j] { -cost[j] } else { cost[j] };
        let mut d: Vec<f64> = (0..self.cols).map(eff).collect();
        let mut z = 0.0;
        for j in 0..self.cols {
            if self.flipped[j] {
                z += cost[j] * self.upper[j];
            }
        }
        for r in 0..self.rows {
            let cb = eff(self.basis[r]);
            if cb == 0.0 {
                continue;
            }
            z += cb * self.b[r];
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        for r in 0..self.rows {
            d[self.basis[r]] = 0.0;
        }
        self.d = d;
        self.z = z;
    }
}

/// Solves the LP relaxation of `model` with per-variable bounds overridden by
/// `lower`/`upper`.
pub fn solve_relaxation(
    model: &MipModel,
    lower: &[f64],
    upper: &[f64],
    tol: &Tolerances,
    max_iterations: usize,
) -> LpOutcome {
    let nv = model.num_vars();
    let mut maps = Vec::with_capacity(nv);
    let mut col_upper: Vec<f64> = Vec::new();
    for j in 0..nv {
        let (lo, hi) = (lower[j], upper[j]);
        if lo > hi + tol.feasibility {
            return LpOutcome::failed(LpStatus::Infeasible, 0);
        }
        let col = col_upper.len();
        if lo.is_finite() {
            maps.push(ColMap::Shift { col, offset: lo });
            col_upper.push((hi - lo).max(0.0));
        } else if hi.is_finite() {
            maps.push(ColMap::Mirror { col, offset: hi });
            col_upper.push(f64::INFINITY);
        } else {
            maps.push(ColMap::Split { pos: col, neg: col + 1 });
            col_upper.push(f64::INFINITY);
            col_upper.push(f64::INFINITY);
        }
    }
    let n_struct = col_upper.len();
    let mut struct_cost = vec![0.0; n_struct];
    for (j, m) in maps.iter().enumerate() {
        let c = model.objective[j];
        match *m {
            ColMap::Shift { col, .. } => struct_cost[col] += c,
            ColMap::Mirror { col, .. } => struct_cost[col] -= c,
            ColMap::Split { pos, neg } => {
                struct_cost[pos] += c;
                struct_cost[neg] -= c;
            }
        }
    }

    // Translate rows into column space.
    struct Row {
        coef: Vec<f64>,
        rhs: f64,
        relation: Relation,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(model.constraints.len());
    for c in &model.constraints {
        let mut coef = vec![0.0; n_struct];
        let mut rhs = c.rhs;
        for &(v, a) in &c.terms {
            match maps[v.0] {
                ColMap::Shift { col, offset } => {
                    coef[col] += a;
                    rhs -= a * offset;
                }
                ColMap::Mirror { col, offset } => {
                    coef[col] -= a;
                    rhs -= a * offset;
                }
                ColMap::Split { pos, neg } => {
                    coef[pos] += a;
                    coef[neg] -= a;
                }
            }
        }
        if coef.iter().all(|&a| a == 0.0) {
            let ok = match c.relation {
                Relation::Le => 0.0 <= rhs + tol.feasibility,
                Relation::Ge => 0.0 >= rhs - tol.feasibility,
                Relation::Eq => rhs.abs() <= tol.feasibility,
            };
            if !ok {
                return LpOutcome::failed(LpStatus::Infeasible, 0);
            }
            continue;
        }
        rows.push(Row {
            coef,
            rhs,
            relation: c.relation,
        });
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    // Decide which rows need an artificial after sign normalization.
    let mut needs_art = Vec::with_capacity(m);
    for r in &rows {
        let negate = r.rhs < 0.0;
        let slack_sign = match r.relation {
            Relation::Le => Some(1.0),
            Relation::Ge => Some(-1.0),
            Relation::Eq => None,
        };
        let basic_slack = matches!(slack_sign.map(|s| if negate { -s } else { s }), Some(s) if s > 0.0);
        needs_art.push(!basic_slack);
    }
    let n_art = needs_art.iter().filter(|&&x| x).count();
    let cols = n_struct + n_slack + n_art;

    let mut t = Tableau {
        rows: m,
        cols,
        a: vec![0.0; m * cols],
        b: vec![0.0; m],
        basis: vec![0; m],
        basic_row: vec![None; cols],
        upper: vec![f64::INFINITY; cols],
        flipped: vec![false; cols],
        enterable: vec![true; cols],
        d: vec![0.0; cols],
        z: 0.0,
        bland: false,
        degenerate_run: 0,
        iterations: 0,
    };
    t.upper[..n_struct].copy_from_slice(&col_upper);

    let mut slack_col = n_struct;
    let mut art_col = n_struct + n_slack;
    let mut art_cols = Vec::with_capacity(n_art);
    for (i, r) in rows.iter().enumerate() {
        let sign = if r.rhs < 0.0 { -1.0 } else { 1.0 };
        let base = i * cols;
        for (j, &a) in r.coef.iter().enumerate() {
            t.a[base + j] = sign * a;
        }
        t.b[i] = sign * r.rhs;
        let mut slack = None;
        match r.relation {
            Relation::Le => {
                t.a[base + slack_col] = sign;
                slack = Some(slack_col);
                slack_col += 1;
            }
            Relation::Ge => {
                t.a[base + slack_col] = -sign;
                slack = Some(slack_col);
                slack_col += 1;
            }
            Relation::Eq => {}
        }
        let basic = if needs_art[i] {
            t.a[base + art_col] = 1.0;
            art_cols.push(art_col);
            art_col += 1;
            art_col - 1
        } else {
            slack.expect("row without artificial has a slack")
        };
        t.basis[i] = basic;
        t.basic_row[basic] = Some(i);
    }

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for &c in &art_cols {
            cost[c] = 1.0;
        }
        t.set_costs(&cost);
        let status = t.iterate(tol, max_iterations);
        match status {
            LpStatus::Optimal => {}
            LpStatus::IterationLimit => return LpOutcome::failed(status, t.iterations),
            // Phase one is bounded below by zero.
            _ => return LpOutcome::failed(LpStatus::Infeasible, t.iterations),
        }
        let scale = 1.0 + t.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if t.z > tol.feasibility * scale {
            return LpOutcome::failed(LpStatus::Infeasible, t.iterations);
        }
        // Drive artificials out of the basis where possible.
        for r in 0..m {
            let bv = t.basis[r];
            if bv < n_struct + n_slack {
                continue;
            }
            let mut pick: Option<(usize, f64)> = None;
            for j in 0..n_struct + n_slack {
                if t.basic_row[j].is_some() {
                    continue;
                }
                let a = t.at(r, j).abs();
                if a > 1e-7 && pick.is_none_or(|(_, pa)| a > pa) {
                    pick = Some((j, a));
                }
            }
            if let Some((j, _)) = pick {
                t.pivot(r, j);
            }
        }
        for &c in &art_cols {
            t.upper[c] = 0.0;
            t.enterable[c] = false;
            if t.flipped[c] {
                t.flipped[c] = false;
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n_struct].copy_from_slice(&struct_cost);
    t.set_costs(&cost);
    let status = t.iterate(tol, max_iterations);
    if status != LpStatus::Optimal {
        return LpOutcome::failed(status, t.iterations);
    }

    let y = t.column_values();
    let values: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            ColMap::Shift { col, offset } => offset + y[col],
            ColMap::Mirror { col, offset } => offset - y[col],
            ColMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = model.evaluate(&values);
    LpOutcome {
        status: LpStatus::Optimal,
        values,
        objective,
        iterations: t.iterations,
    }
}
