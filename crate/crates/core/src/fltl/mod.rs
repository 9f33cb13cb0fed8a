//! Fluent linear temporal logic: formulas, property files, fluent tracking
//! and model checking over an [`Lts`](crate::encoder::Lts).

mod buchi;
mod check;
mod eval;
mod fluent;
mod formula;
mod parse;

pub use buchi::{BuchiAutomaton, BuchiState, Literal};
pub use check::{check, CheckError, CheckOptions, Verdict};
pub use eval::{eval_letters, eval_on_lasso, letter_lasso, Letter, LetterLasso};
pub use fluent::{
    builtin_fluents, executing_name, validate_fluents, with_builtin_fluents, FluentDef, FluentDiagnostic, FluentDiagnosticKind, Tracker,
    MAX_TRACKED_FLUENTS,
};
pub use formula::{is_event_name, Formula};
pub use parse::{parse_formula, parse_props, parse_skeleton, Assertion, Props, PropsError};
