use std::collections::BTreeSet;
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

use crate::encoder::{LabelId, Lts};
use crate::model::{EventLabel, WorkflowSpec};

/// A boolean property set by its initiating events and cleared by its
/// terminating events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentDef {
    pub name: String,
    pub initiating: IndexSet<EventLabel>,
    pub terminating: IndexSet<EventLabel>,
    pub initially: bool,
}

impl FluentDef {
    pub fn new<I, T>(name: &str, initiating: I, terminating: T) -> Self
    where
        I: IntoIterator,
        I::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        FluentDef {
            name: name.to_string(),
            initiating: initiating.into_iter().map(EventLabel::new).collect(),
            terminating: terminating.into_iter().map(EventLabel::new).collect(),
            initially: false,
        }
    }

    pub fn initially(mut self, value: bool) -> Self {
        self.initially = value;
        self
    }

    /// Value after `event`, given the value before it.
    pub fn step(&self, before: bool, event: &EventLabel) -> bool {
        if self.initiating.contains(event) {
            true
        } else if self.terminating.contains(event) {
            false
        } else {
            before
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FluentDiagnosticKind {
    UnknownEvent,
    EmptyInitiating,
    OverlappingSets,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FluentDiagnostic {
    pub kind: FluentDiagnosticKind,
    pub fluent: String,
    pub message: String,
}

impl fmt::Display for FluentDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ERROR\t{}\t{}", self.fluent, self.message)
    }
}

/// Checks each fluent against the model alphabet.
pub fn validate_fluents<'a>(
    fluents: &[FluentDef],
    alphabet: impl IntoIterator<Item = &'a EventLabel>,
) -> Vec<FluentDiagnostic> {
    let alphabet: BTreeSet<&EventLabel> = alphabet.into_iter().collect();
    let mut out = Vec::new();
    for fl in fluents {
        let diag = |kind, message: String| FluentDiagnostic { kind, fluent: fl.name.clone(), message };
        if fl.initiating.is_empty() {
            out.push(diag(FluentDiagnosticKind::EmptyInitiating, "initiating set is empty".into()));
        }
        for e in fl.initiating.iter().chain(&fl.terminating) {
            if !alphabet.contains(e) {
                out.push(diag(FluentDiagnosticKind::UnknownEvent, format!("unknown event {e}")));
            }
        }
        for e in fl.initiating.intersection(&fl.terminating) {
            out.push(diag(
                FluentDiagnosticKind::OverlappingSets,
                format!("event {e} both initiates and terminates"),
            ));
        }
    }
    out
}

/// Name of the builtin fluent that holds while the task at `path` runs.
pub fn executing_name(path: &str) -> String {
    format!("Executing_{}", path.replace('.', "_"))
}

/// One `Executing_<task>` fluent per task, initiated by its start and
/// terminated by its end or by completion of any task that cancels it.
pub fn builtin_fluents(spec: &WorkflowSpec) -> Vec<FluentDef> {
    let paths = spec.task_paths();
    let mut terminators: IndexMap<String, IndexSet<EventLabel>> =
        paths.iter().map(|(p, _)| (p.clone(), IndexSet::from([EventLabel::end(p)]))).collect();
    for inst in spec.instances() {
        for task in inst.net.tasks.values() {
            let canceller = EventLabel::end(&inst.qualify(&task.id));
            for member in &task.cancel_set {
                if !inst.net.tasks.contains_key(member) {
                    continue;
                }
                let victim = inst.qualify(member);
                let nested = format!("{victim}.");
                for (p, set) in terminators.iter_mut() {
                    if *p == victim || p.starts_with(&nested) {
                        set.insert(canceller.clone());
                    }
                }
            }
        }
    }
    let mut names: BTreeSet<String> = BTreeSet::new();
    terminators
        .into_iter()
        .map(|(path, mut terminating)| {
            let base = executing_name(&path);
            let mut name = base.clone();
            let mut n = 2;
            while !names.insert(name.clone()) {
                name = format!("{base}_{n}");
                n += 1;
            }
            let start = EventLabel::start(&path);
            terminating.shift_remove(&start);
            FluentDef { name, initiating: IndexSet::from([start]), terminating, initially: false }
        })
        .collect()
}

/// `user` followed by the builtin fluents of `spec` whose names it does not
/// already take.
pub fn with_builtin_fluents(spec: &WorkflowSpec, user: &[FluentDef]) -> Vec<FluentDef> {
    let mut all = user.to_vec();
    for b in builtin_fluents(spec) {
        if !user.iter().any(|f| f.name == b.name) {
            all.push(b);
        }
    }
    all
}

/// Deterministic fluent valuation automaton over an LTS alphabet.
///
/// A valuation is a bitmask: bit `i` is fluent `i`. Events update the
/// valuation before it is observed at their position.
#[derive(Debug, Clone)]
pub struct Tracker {
    names: Vec<String>,
    initial: u64,
    set: Vec<u64>,
    clear: Vec<u64>,
}

pub const MAX_TRACKED_FLUENTS: usize = 64;

impl Tracker {
    /// Tracks `fluents` (at most 64) over the labels of `lts`.
    pub fn new(fluents: &[&FluentDef], lts: &Lts) -> Self {
        assert!(fluents.len() <= MAX_TRACKED_FLUENTS);
        let n = lts.alphabet().len();
        let mut set = vec![0u64; n];
        let mut clear = vec![0u64; n];
        let mut initial = 0u64;
        for (i, fl) in fluents.iter().enumerate() {
            let bit = 1u64 << i;
            if fl.initially {
                initial |= bit;
            }
            for e in &fl.initiating {
                if let Some(l) = lts.label_id(e.as_str()) {
                    set[l as usize] |= bit;
                }
            }
            for e in &fl.terminating {
                if let Some(l) = lts.label_id(e.as_str()) {
                    clear[l as usize] |= bit;
                }
            }
        }
        Tracker { names: fluents.iter().map(|f| f.name.clone()).collect(), initial, set, clear }
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    pub fn step(&self, v: u64, label: LabelId) -> u64 {
        (v & !self.clear[label as usize]) | self.set[label as usize]
    }

    pub fn bit(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}
