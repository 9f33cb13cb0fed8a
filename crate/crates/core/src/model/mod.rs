//! In-memory YAWL control-flow model.
//!
//! A [`WorkflowSpec`] is a root [`Net`] plus the subnets that composite tasks
//! decompose into. Only control flow is represented: conditions, tasks, arcs,
//! join/split codes, cancellation sets, multiple-instance parameters and
//! subnet references.

mod alphabet;
mod emit;
mod normalize;
mod parse;
mod validate;

use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

pub use alphabet::{event_alphabet, EventLabel, DEADLOCK, TERMINATE};
pub use emit::emit_yawl;
pub use normalize::normalize;
pub use parse::{parse_yawl, ParseError};
pub use validate::{validate, Diagnostic, DiagnosticKind, Severity};

/// Path separator used in qualified node ids and event labels.
pub const PATH_SEP: char = '.';

/// Identifier of a task or condition, unique within its net.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    /// Checks the local-id rules: non-empty, no whitespace, no path separator.
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidNodeId> {
        let id = id.into();
        if id.is_empty() {
            return Err(InvalidNodeId { id, reason: "empty identifier" });
        }
        if id.chars().any(char::is_whitespace) {
            return Err(InvalidNodeId { id, reason: "identifier contains whitespace" });
        }
        if id.contains(PATH_SEP) {
            return Err(InvalidNodeId { id, reason: "'.' is reserved as the path separator" });
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid node id {id:?}: {reason}")]
pub struct InvalidNodeId {
    pub id: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Input,
    Output,
    Plain,
    /// Synthesized by [`normalize`] for a direct task-to-task arc.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub id: NodeId,
    pub kind: ConditionKind,
}

/// Join or split connective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    And,
    Xor,
    Or,
}

impl Gate {
    pub fn code(self) -> &'static str {
        match self {
            Gate::And => "and",
            Gate::Xor => "xor",
            Gate::Or => "or",
        }
    }

    pub fn from_code(code: &str) -> Option<Gate> {
        match code.trim().to_ascii_lowercase().as_str() {
            "and" => Some(Gate::And),
            "xor" => Some(Gate::Xor),
            "or" => Some(Gate::Or),
            _ => None,
        }
    }
}

/// Static multiple-instance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MiParams {
    pub min: u32,
    pub max: u32,
    pub threshold: u32,
}

impl MiParams {
    pub fn is_well_formed(&self) -> bool {
        1 <= self.min && self.min <= self.max && 1 <= self.threshold && self.threshold <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: NodeId,
    pub join: Gate,
    pub split: Gate,
    /// Conditions and tasks of the same net emptied when this task completes.
    pub cancel_set: IndexSet<NodeId>,
    /// Cancelled task-to-task arcs, resolved to implicit conditions by [`normalize`].
    pub cancel_flows: Vec<(NodeId, NodeId)>,
    pub mi: Option<MiParams>,
    /// Decomposition id of the subnet for composite tasks.
    pub subnet: Option<String>,
}

impl Task {
    /// An atomic AND-join/AND-split task.
    pub fn atomic(id: NodeId) -> Self {
        Task {
            id,
            join: Gate::And,
            split: Gate::And,
            cancel_set: IndexSet::new(),
            cancel_flows: Vec::new(),
            mi: None,
            subnet: None,
        }
    }

    pub fn is_composite(&self) -> bool {
        self.subnet.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flow {
    pub from: NodeId,
    pub to: NodeId,
}

impl Flow {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Flow { from, to }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub id: String,
    pub conditions: IndexMap<NodeId, Condition>,
    pub tasks: IndexMap<NodeId, Task>,
    pub flows: IndexSet<Flow>,
}

impl Net {
    pub fn new(id: impl Into<String>) -> Self {
        Net {
            id: id.into(),
            conditions: IndexMap::new(),
            tasks: IndexMap::new(),
            flows: IndexSet::new(),
        }
    }

    pub fn input_condition(&self) -> Option<&Condition> {
        self.conditions.values().find(|c| c.kind == ConditionKind::Input)
    }

    pub fn output_condition(&self) -> Option<&Condition> {
        self.conditions.values().find(|c| c.kind == ConditionKind::Output)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.conditions.contains_key(id) || self.tasks.contains_key(id)
    }

    /// Sources of arcs entering `id`, in arc order.
    pub fn preset(&self, id: &NodeId) -> Vec<&NodeId> {
        self.flows.iter().filter(|f| &f.to == id).map(|f| &f.from).collect()
    }

    /// Targets of arcs leaving `id`, in arc order.
    pub fn postset(&self, id: &NodeId) -> Vec<&NodeId> {
        self.flows.iter().filter(|f| &f.from == id).map(|f| &f.to).collect()
    }
}

/// A parsed workflow: root net plus subnets keyed by decomposition id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowSpec {
    pub root: Net,
    pub subnets: IndexMap<String, Net>,
}

/// A net reached from the root through a chain of composite tasks.
#[derive(Debug, Clone)]
pub struct NetInstance<'a> {
    /// Qualified path of the composite task that owns this instance; `None` for the root.
    pub path: Option<String>,
    pub net: &'a Net,
}

impl NetInstance<'_> {
    /// Qualifies a local node id with this instance's path.
    pub fn qualify(&self, id: &NodeId) -> String {
        qualify(self.path.as_deref(), id.as_str())
    }
}

pub(crate) fn qualify(path: Option<&str>, local: &str) -> String {
    match path {
        Some(p) => format!("{p}{PATH_SEP}{local}"),
        None => local.to_string(),
    }
}

impl WorkflowSpec {
    pub fn new(root: Net) -> Self {
        WorkflowSpec { root, subnets: IndexMap::new() }
    }

    pub fn net(&self, id: &str) -> Option<&Net> {
        if self.root.id == id {
            Some(&self.root)
        } else {
            self.subnets.get(id)
        }
    }

    /// All net instances reachable from the root, depth-first in task order.
    ///
    /// Composite tasks whose subnet is missing or already on the current
    /// unfolding stack are skipped, so this terminates on invalid specs too.
    pub fn instances(&self) -> Vec<NetInstance<'_>> {
        let mut out = Vec::new();
        let mut stack = vec![self.root.id.as_str()];
        self.unfold(&self.root, None, &mut stack, &mut out);
        out
    }

    fn unfold<'a>(
        &'a self,
        net: &'a Net,
        path: Option<String>,
        stack: &mut Vec<&'a str>,
        out: &mut Vec<NetInstance<'a>>,
    ) {
        out.push(NetInstance { path: path.clone(), net });
        for task in net.tasks.values() {
            let Some(sub) = task.subnet.as_deref().and_then(|id| self.subnets.get(id)) else {
                continue;
            };
            if stack.contains(&sub.id.as_str()) {
                continue;
            }
            stack.push(sub.id.as_str());
            self.unfold(sub, Some(qualify(path.as_deref(), task.id.as_str())), stack, out);
            stack.pop();
        }
    }

    /// Qualified path of every task in every reachable net instance.
    pub fn task_paths(&self) -> Vec<(String, &Task)> {
        self.instances()
            .into_iter()
            .flat_map(|inst| inst.net.tasks.values().map(move |t| (inst.qualify(&t.id), t)))
            .collect()
    }
}
