// SPDX-License-Identifier: Apache-2.0

//! Plain-text LP-style dump for debugging.

use std::fmt::Write;

use crate::model::MipModel;

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    if first {
        let _ = write!(out, " {coef} {name}");
    } else if coef < 0.0 {
        let _ = write!(out, " - {} {name}", -coef);
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

pub fn write_lp(model: &MipModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, &c) in model.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &model.variables[j].name);
            first = false;
        }
    }
    if model.objective_offset != 0.0 || first {
        term(&mut out, first, model.objective_offset, "");
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let name = if c.name.is_empty() { format!("c{i}") } else { c.name.clone() };
        let _ = write!(out, " {name}:");
        for (k, &(v, a)) in c.terms.iter().enumerate() {
            term(&mut out, k == 0, a, &model.variables[v.0].name);
        }
        let _ = writeln!(out, " {} {}", c.relation.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {} free", v.name);
            }
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {} <= {}", v.name, v.upper);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
            }
        }
    }
    let ints: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.integer)
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}
