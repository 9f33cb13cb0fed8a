//! Per-model state: the parsed workflow, its validated fluents and
//! assertions, and state spaces built on demand.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use flowcheck::encoder::{build_lts, compile, Limits, Lts};
use flowcheck::fltl::{
    builtin_fluents, parse_formula, parse_props, validate_fluents, Assertion, FluentDef, Formula, Props,
};
use flowcheck::fsp::emit_fsp_fluents;
use flowcheck::model::{event_alphabet, normalize, parse_yawl, validate, Diagnostic, EventLabel, ParseError, WorkflowSpec};
use serde::Serialize;

/// A reason a fluent or assertion update was refused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Problem {
    pub kind: String,
    pub name: String,
    pub message: String,
}

impl Problem {
    fn new(kind: &str, name: &str, message: impl Into<String>) -> Self {
        Problem { kind: kind.into(), name: name.into(), message: message.into() }
    }
}

type Built = Result<Arc<Lts>, String>;
type LtsCache = HashMap<(u16, usize), Arc<OnceLock<Built>>>;

pub struct Session {
    pub id: String,
    pub xml: String,
    pub spec: WorkflowSpec,
    pub diagnostics: Vec<Diagnostic>,
    pub alphabet: BTreeSet<EventLabel>,
    pub builtins: Vec<FluentDef>,
    props: RwLock<Props>,
    // one cell per (bound, state limit); concurrent requests wait on the same build
    lts: Mutex<LtsCache>,
}

impl Session {
    pub fn new(id: String, xml: String) -> Result<Self, ParseError> {
        let spec = normalize(&parse_yawl(&xml)?);
        let diagnostics = validate(&spec);
        let alphabet = event_alphabet(&spec);
        let builtins = builtin_fluents(&spec);
        Ok(Session {
            id,
            xml,
            spec,
            diagnostics,
            alphabet,
            builtins,
            props: RwLock::new(Props::default()),
            lts: Mutex::new(HashMap::new()),
        })
    }

    pub fn props(&self) -> Props {
        self.props.read().unwrap().clone()
    }

    /// User fluents followed by the builtins they do not shadow.
    pub fn all_fluents(&self, props: &Props) -> Vec<FluentDef> {
        let mut all = props.fluents.clone();
        all.extend(self.builtins.iter().filter(|b| props.fluent(&b.name).is_none()).cloned());
        all
    }

    /// True if `name` is an event of the model or a fluent usable in a formula.
    pub fn knows(&self, props: &Props, name: &str) -> bool {
        self.alphabet.iter().any(|e| e.as_str() == name)
            || props.fluent(name).is_some()
            || self.builtins.iter().any(|b| b.name == name)
    }

    pub fn set_fluents(&self, fluents: Vec<FluentDef>) -> Result<(), Vec<Problem>> {
        self.update(|p| p.fluents = fluents)
    }

    pub fn set_assertions(&self, assertions: Vec<Assertion>) -> Result<(), Vec<Problem>> {
        self.update(|p| p.assertions = assertions)
    }

    /// Appends an assertion, suffixing its name if it is already taken.
    pub fn add_assertion(&self, base: &str, formula: Formula) -> Result<Assertion, Vec<Problem>> {
        let mut guard = self.props.write().unwrap();
        let taken = |n: &str| guard.fluent(n).is_some() || guard.assertion(n).is_some();
        let mut name = base.to_string();
        let mut k = 2;
        while taken(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        let assertion = Assertion { name, formula };
        let mut next = guard.clone();
        next.assertions.push(assertion.clone());
        self.admit(&next)?;
        *guard = next;
        Ok(assertion)
    }

    fn update(&self, edit: impl FnOnce(&mut Props)) -> Result<(), Vec<Problem>> {
        let mut guard = self.props.write().unwrap();
        let mut next = guard.clone();
        edit(&mut next);
        self.admit(&next)?;
        *guard = next;
        Ok(())
    }

    fn admit(&self, props: &Props) -> Result<(), Vec<Problem>> {
        let problems = self.check_props(props);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    /// Everything that would stop `props` from being stored.
    pub fn check_props(&self, props: &Props) -> Vec<Problem> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let names = props.fluents.iter().map(|f| &f.name).chain(props.assertions.iter().map(|a| &a.name));
        for name in names {
            if parse_formula(name).ok() != Some(Formula::Fluent(name.clone())) {
                out.push(Problem::new("invalid_name", name, format!("{name:?} is not a valid identifier")));
            } else if !seen.insert(name.as_str()) {
                out.push(Problem::new("duplicate_name", name, format!("name {name} is used twice")));
            }
        }
        for d in validate_fluents(&props.fluents, &self.alphabet) {
            let kind = serde_json::to_value(d.kind).ok().and_then(|v| v.as_str().map(String::from));
            out.push(Problem::new(kind.as_deref().unwrap_or("fluent"), &d.fluent, d.message));
        }
        for a in &props.assertions {
            if let Some(p) = a.formula.params().into_iter().next() {
                out.push(Problem::new("unbound_placeholder", &a.name, format!("unbound placeholder ${p}")));
            }
            for e in a.formula.events() {
                if !self.alphabet.contains(e) {
                    out.push(Problem::new("unknown_event", &a.name, format!("unknown event {e}")));
                }
            }
            for f in a.formula.fluents() {
                if !self.knows(props, f) {
                    out.push(Problem::new("unknown_fluent", &a.name, format!("unknown fluent {f}")));
                }
            }
        }
        out
    }

    /// Builds the state space for `bound` once; later and concurrent callers
    /// share the result.
    pub fn lts(&self, bound: u16, max_states: usize) -> Built {
        let cell = self.lts.lock().unwrap().entry((bound, max_states)).or_default().clone();
        cell.get_or_init(|| {
            let net = compile(&self.spec, bound).map_err(|e| e.to_string())?;
            let lts = build_lts(&net, Limits { max_states }).map_err(|e| e.to_string())?;
            Ok(Arc::new(lts))
        })
        .clone()
    }

    pub fn export_flp(&self) -> String {
        let props = self.props();
        emit_fsp_fluents(&props.fluents, &props.assertions)
    }

    /// Writes `model.yawl` and `props.flp` under `dir/<id>`.
    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let dir = dir.join(&self.id);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("model.yawl"), &self.xml)?;
        std::fs::write(dir.join("props.flp"), self.export_flp())
    }

    /// Reads a session saved by [`save`](Self::save).
    pub fn load(dir: &Path) -> Result<Self, String> {
        let id = dir.file_name().and_then(|n| n.to_str()).ok_or("bad session directory")?.to_string();
        let xml = std::fs::read_to_string(dir.join("model.yawl")).map_err(|e| e.to_string())?;
        let session = Session::new(id, xml).map_err(|e| e.to_string())?;
        if let Ok(text) = std::fs::read_to_string(dir.join("props.flp")) {
            let props = parse_props(&text).map_err(|e| e.to_string())?;
            session.admit(&props).map_err(|p| format!("{} stored declarations rejected", p.len()))?;
            *session.props.write().unwrap() = props;
        }
        Ok(session)
    }
}
