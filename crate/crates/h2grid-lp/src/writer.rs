//! Export to the industry-standard text LP format, for cross-checking
//! instances against external solvers during development.

use crate::program::{LinearProgram, Sense};

fn sanitize(name: &str, fallback: String) -> String {
    let ok = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if ok {
        name.to_string()
    } else {
        fallback
    }
}

/// Renders the program in CPLEX LP format.
pub fn write_lp(lp: &LinearProgram) -> String {
    let names: Vec<String> = lp
        .vars()
        .map(|(id, v)| sanitize(&v.name, format!("x{}", id.index())))
        .collect();
    let mut out = String::new();
    out.push_str(&format!("\\ {}\n", lp.name()));
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (id, v) in lp.vars() {
        if v.cost != 0.0 {
            push_term(&mut out, &mut first, v.cost, &names[id.index()]);
        }
    }
    if first {
        out.push_str(" 0 ");
        out.push_str(&names.first().cloned().unwrap_or_else(|| "x0".into()));
    }
    out.push('\n');
    out.push_str("Subject To\n");
    for (rid, row) in lp.rows() {
        let tag = sanitize(&row.tag, format!("c{}", rid.index()));
        out.push_str(&format!(" {tag}:"));
        let mut first = true;
        for &(var, coeff) in &row.terms {
            push_term(&mut out, &mut first, coeff, &names[var.index()]);
        }
        if first {
            out.push_str(" 0 ");
            out.push_str(&names.first().cloned().unwrap_or_else(|| "x0".into()));
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        out.push_str(&format!(" {op} {}\n", fmt(row.rhs)));
    }
    out.push_str("Bounds\n");
    for (id, v) in lp.vars() {
        let name = &names[id.index()];
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => out.push_str(&format!(" {} <= {name} <= {}\n", fmt(v.lower), fmt(v.upper))),
            (true, false) => out.push_str(&format!(" {name} >= {}\n", fmt(v.lower))),
            (false, true) => out.push_str(&format!(" -inf <= {name} <= {}\n", fmt(v.upper))),
            (false, false) => out.push_str(&format!(" {name} free\n")),
        }
    }
    let integers: Vec<&String> = lp
        .vars()
        .filter(|(_, v)| v.integer)
        .map(|(id, _)| &names[id.index()])
        .collect();
    if !integers.is_empty() {
        out.push_str("General\n");
        for name in integers {
            out.push_str(&format!(" {name}\n"));
        }
    }
    out.push_str("End\n");
    out
}

fn push_term(out: &mut String, first: &mut bool, coeff: f64, name: &str) {
    if *first {
        if coeff < 0.0 {
            out.push_str(&format!(" - {} {name}", fmt(-coeff)));
        } else {
            out.push_str(&format!(" {} {name}", fmt(coeff)));
        }
        *first = false;
    } else if coeff < 0.0 {
        out.push_str(&format!(" - {} {name}", fmt(-coeff)));
    } else {
        out.push_str(&format!(" + {} {name}", fmt(coeff)));
    }
}

fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}
