//! FSP text for models and property files.

use std::fmt::Write;

use crate::encoder::Lts;
use crate::fltl::{Assertion, FluentDef};

/// Flattened process definition of `lts`: one local process per state in
/// index order, edges in canonical order.
pub fn emit_fsp_model(lts: &Lts, name: &str) -> String {
    let mut out = format!("{name} = S0");
    for s in 0..lts.num_states() as u32 {
        let choices: Vec<String> =
            lts.successors(s).iter().map(|&(l, t)| format!("{} -> S{t}", lts.label(l))).collect();
        if choices.is_empty() {
            let _ = write!(out, ",\nS{s} = STOP");
        } else {
            let _ = write!(out, ",\nS{s} = ({})", choices.join(" | "));
        }
    }
    out.push_str(".\n");
    out
}

/// Turns an arbitrary string (typically a file stem) into an FSP process
/// identifier: upper case, underscores for other characters.
pub fn process_name(stem: &str) -> String {
    let mut name: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    if !name.starts_with(|c: char| c.is_ascii_alphabetic()) {
        name.insert(0, 'P');
    }
    name
}

/// Fluent and assertion declarations, one per line.
pub fn emit_fsp_fluents(fluents: &[FluentDef], assertions: &[Assertion]) -> String {
    let mut out = String::new();
    let set = |xs: &indexmap::IndexSet<crate::model::EventLabel>| {
        xs.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(", ")
    };
    for fl in fluents {
        let _ = write!(out, "fluent {} = <{{{}}}, {{{}}}>", fl.name, set(&fl.initiating), set(&fl.terminating));
        if fl.initially {
            out.push_str(" initially 1");
        }
        out.push('\n');
    }
    for a in assertions {
        let _ = writeln!(out, "assert {} = {}", a.name, a.formula);
    }
    out
}
