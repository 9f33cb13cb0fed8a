use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::{Net, NodeId, WorkflowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("ERROR"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    MissingInputCondition,
    MissingOutputCondition,
    /// Node not on any path from the input to the output condition.
    Unreachable,
    NoInput,
    NoOutput,
    /// Direct task-to-task arc left in a net that should be normalized.
    TaskToTaskArc,
    DanglingFlow,
    DanglingCancel,
    DanglingSubnet,
    RecursiveComposition,
    CompositeMi,
    InvalidMiParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub net: String,
    pub node: String,
    pub message: String,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind, net: &Net, node: impl fmt::Display, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            kind,
            net: net.id.clone(),
            node: node.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{} (net {})", self.severity, self.node, self.message, self.net)
    }
}

/// Reports every violation of the structural invariants. An empty result
/// means the spec can be compiled.
pub fn validate(spec: &WorkflowSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    validate_net(spec, &spec.root, &mut out);
    for net in spec.subnets.values() {
        validate_net(spec, net, &mut out);
    }
    check_composition(spec, &mut out);
    out
}

fn validate_net(spec: &WorkflowSpec, net: &Net, out: &mut Vec<Diagnostic>) {
    use DiagnosticKind::*;
    let input = net.input_condition().map(|c| c.id.clone());
    let output = net.output_condition().map(|c| c.id.clone());
    if input.is_none() {
        out.push(Diagnostic::error(MissingInputCondition, net, &net.id, "net has no input condition"));
    }
    if output.is_none() {
        out.push(Diagnostic::error(MissingOutputCondition, net, &net.id, "net has no output condition"));
    }

    for f in &net.flows {
        for end in [&f.from, &f.to] {
            if !net.contains(end) {
                out.push(Diagnostic::error(DanglingFlow, net, end, format!("arc {} -> {} references unknown node", f.from, f.to)));
            }
        }
        if net.tasks.contains_key(&f.from) && net.tasks.contains_key(&f.to) {
            out.push(Diagnostic::error(TaskToTaskArc, net, &f.from, format!("direct arc to task {} (normalize first)", f.to)));
        }
    }

    let forward = reach(net, input.as_ref(), true);
    let backward = reach(net, output.as_ref(), false);
    let nodes = net.conditions.keys().chain(net.tasks.keys());
    for id in nodes {
        if !(forward.contains(id) && backward.contains(id)) {
            out.push(Diagnostic::error(Unreachable, net, id, "not on any path from the input to the output condition"));
        }
        if let Some(task) = net.tasks.get(id) {
            if net.preset(id).is_empty() {
                out.push(Diagnostic::error(NoInput, net, id, "task has no incoming arc"));
            }
            if net.postset(id).is_empty() {
                out.push(Diagnostic::error(NoOutput, net, id, "task has no outgoing arc"));
            }
            for r in &task.cancel_set {
                if !net.contains(r) {
                    out.push(Diagnostic::error(DanglingCancel, net, id, format!("cancellation set references unknown node {r}")));
                }
            }
            if let Some(mi) = task.mi {
                if !mi.is_well_formed() {
                    out.push(Diagnostic::error(InvalidMiParams, net, id, format!(
                        "multiple-instance bounds {}/{}/{} violate 1 <= min <= max, 1 <= threshold <= max",
                        mi.min, mi.max, mi.threshold
                    )));
                }
            }
            if let Some(sub) = &task.subnet {
                if spec.net(sub).is_none() || sub == &spec.root.id {
                    out.push(Diagnostic::error(DanglingSubnet, net, id, format!("subnet {sub} does not resolve")));
                }
                if task.mi.is_some() {
                    out.push(Diagnostic::error(CompositeMi, net, id, "composite task cannot have multiple instances"));
                }
            }
        }
    }
}

fn reach(net: &Net, start: Option<&NodeId>, forward: bool) -> HashSet<NodeId> {
    let mut seen = HashSet::new();
    let Some(start) = start else { return seen };
    let mut queue = VecDeque::from([start.clone()]);
    seen.insert(start.clone());
    while let Some(n) = queue.pop_front() {
        let next = if forward { net.postset(&n) } else { net.preset(&n) };
        for m in next {
            if seen.insert(m.clone()) {
                queue.push_back(m.clone());
            }
        }
    }
    seen
}

/// Flags composite tasks that close a cycle in the net-decomposition graph.
fn check_composition(spec: &WorkflowSpec, out: &mut Vec<Diagnostic>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let nets: Vec<&Net> = std::iter::once(&spec.root).chain(spec.subnets.values()).collect();
    let mut color: HashMap<&str, Color> = nets.iter().map(|n| (n.id.as_str(), Color::White)).collect();

    fn visit<'a>(
        spec: &'a WorkflowSpec,
        net: &'a Net,
        color: &mut HashMap<&'a str, Color>,
        out: &mut Vec<Diagnostic>,
    ) {
        color.insert(&net.id, Color::Grey);
        for task in net.tasks.values() {
            let Some(sub) = task.subnet.as_deref().and_then(|s| spec.net(s)) else { continue };
            match color.get(sub.id.as_str()).copied().unwrap_or(Color::White) {
                Color::Grey => out.push(Diagnostic::error(
                    DiagnosticKind::RecursiveComposition,
                    net,
                    &task.id,
                    format!("decomposition into {} closes a composition cycle", sub.id),
                )),
                Color::White => visit(spec, sub, color, out),
                Color::Black => {}
            }
        }
        color.insert(&net.id, Color::Black);
    }

    for net in nets {
        if color[net.id.as_str()] == Color::White {
            visit(spec, net, &mut color, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Condition, ConditionKind, Flow, MiParams, Task};

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn single(net_id: &str, task: &str) -> Net {
        let mut net = Net::new(net_id);
        net.conditions.insert(id("i"), Condition { id: id("i"), kind: ConditionKind::Input });
        net.conditions.insert(id("o"), Condition { id: id("o"), kind: ConditionKind::Output });
        net.tasks.insert(id(task), Task::atomic(id(task)));
        net.flows.insert(Flow::new(id("i"), id(task)));
        net.flows.insert(Flow::new(id(task), id("o")));
        net
    }

    fn kinds(d: &[Diagnostic]) -> Vec<(DiagnosticKind, &str)> {
        d.iter().map(|d| (d.kind, d.node.as_str())).collect()
    }

    #[test]
    fn valid_single_task() {
        assert!(validate(&WorkflowSpec::new(single("N", "t"))).is_empty());
    }

    #[test]
    fn isolated_task() {
        let mut net = single("N", "t");
        net.tasks.insert(id("x"), Task::atomic(id("x")));
        let d = validate(&WorkflowSpec::new(net));
        assert_eq!(
            kinds(&d),
            [
                (DiagnosticKind::Unreachable, "x"),
                (DiagnosticKind::NoInput, "x"),
                (DiagnosticKind::NoOutput, "x")
            ]
        );
    }

    #[test]
    fn mutual_recursion() {
        let mut a = single("A", "ta");
        a.tasks[0].subnet = Some("B".into());
        let mut b = single("B", "tb");
        b.tasks[0].subnet = Some("C".into());
        let mut c = single("C", "tc");
        c.tasks[0].subnet = Some("B".into());
        let mut spec = WorkflowSpec::new(a);
        spec.subnets.insert("B".into(), b);
        spec.subnets.insert("C".into(), c);
        assert_eq!(kinds(&validate(&spec)), [(DiagnosticKind::RecursiveComposition, "tc")]);
    }

    #[test]
    fn composite_mi_and_dangling_cancel() {
        let mut a = single("A", "ta");
        a.tasks[0].subnet = Some("B".into());
        a.tasks[0].mi = Some(MiParams { min: 1, max: 1, threshold: 1 });
        a.tasks[0].cancel_set.insert(id("ghost"));
        let mut spec = WorkflowSpec::new(a);
        spec.subnets.insert("B".into(), single("B", "tb"));
        assert_eq!(
            kinds(&validate(&spec)),
            [(DiagnosticKind::DanglingCancel, "ta"), (DiagnosticKind::CompositeMi, "ta")]
        );
    }

    #[test]
    fn every_diagnostic_names_a_node() {
        let mut net = Net::new("N");
        net.tasks.insert(id("x"), Task::atomic(id("x")));
        for d in validate(&WorkflowSpec::new(net)) {
            assert!(!d.node.is_empty());
        }
    }
}
