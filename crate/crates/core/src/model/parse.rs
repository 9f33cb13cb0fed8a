use indexmap::IndexMap;
use roxmltree::{Document, Node};
use thiserror::Error;

use super::{
    Condition, ConditionKind, Flow, Gate, InvalidNodeId, MiParams, Net, NodeId, Task, WorkflowSpec,
};

/// Largest static instance count accepted for a multiple-instance task.
pub const MAX_MI_INSTANCES: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("document contains no net decomposition")]
    NoNet,
    #[error("net {net}: missing input condition")]
    MissingInputCondition { net: String },
    #[error("net {net}: missing output condition")]
    MissingOutputCondition { net: String },
    #[error("net {net}: more than one {kind} condition")]
    DuplicateBoundaryCondition { net: String, kind: &'static str },
    #[error("net {net}: duplicate node id {id}")]
    DuplicateId { net: String, id: String },
    #[error("net {net}: {what} of {node} references unknown {target}")]
    DanglingReference { net: String, node: String, target: String, what: &'static str },
    #[error("{node}: unsupported feature: {feature}")]
    UnsupportedFeature { node: String, feature: String },
    #[error("{node}: {message}")]
    InvalidElement { node: String, message: String },
    #[error(transparent)]
    InvalidId(#[from] InvalidNodeId),
}

fn local<'a>(n: &Node<'a, '_>) -> &'a str {
    n.tag_name().name()
}

fn children<'a, 'i>(n: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a
where
    'i: 'a,
{
    n.children().filter(move |c| c.is_element() && local(c) == name)
}

fn child<'a, 'i>(n: Node<'a, 'i>, name: &'a str) -> Option<Node<'a, 'i>>
where
    'i: 'a,
{
    children(n, name).next()
}

/// Attribute lookup by local name, ignoring any namespace prefix.
fn attr<'a>(n: &Node<'a, '_>, name: &str) -> Option<&'a str> {
    n.attributes().find(|a| a.name() == name).map(|a| a.value())
}

fn is_net_decomposition(n: &Node<'_, '_>) -> bool {
    attr(n, "type").is_some_and(|t| t.ends_with("NetFactsType")) || child(*n, "processControlElements").is_some()
}

/// Parses the control-flow subset of a YAWL specification.
///
/// Data, resourcing, layout and anything else unknown is skipped. The result
/// is not normalized: direct task-to-task arcs are kept as written.
pub fn parse_yawl(xml: &str) -> Result<WorkflowSpec, ParseError> {
    let doc = Document::parse(xml).map_err(|e| ParseError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    let spec_node = if local(&root) == "specification" {
        root
    } else {
        root.descendants()
            .find(|n| n.is_element() && local(n) == "specification")
            .unwrap_or(root)
    };

    let decompositions: Vec<Node> = children(spec_node, "decomposition").collect();
    let known: IndexMap<&str, bool> = decompositions
        .iter()
        .filter_map(|d| attr(d, "id").map(|id| (id, is_net_decomposition(d))))
        .collect();

    let mut nets: Vec<(Net, bool)> = Vec::new();
    for d in decompositions.iter().filter(|d| is_net_decomposition(d)) {
        let id = attr(d, "id").ok_or_else(|| ParseError::InvalidElement {
            node: "decomposition".into(),
            message: "missing id attribute".into(),
        })?;
        let is_root = attr(d, "isRootNet").is_some_and(|v| v.eq_ignore_ascii_case("true"));
        nets.push((parse_net(*d, id, &known)?, is_root));
    }
    if nets.is_empty() {
        return Err(ParseError::NoNet);
    }
    let root_idx = nets.iter().position(|(_, r)| *r).unwrap_or(0);
    let (root_net, _) = nets.remove(root_idx);
    let mut spec = WorkflowSpec::new(root_net);
    for (net, _) in nets {
        spec.subnets.insert(net.id.clone(), net);
    }
    Ok(spec)
}

fn parse_net(decomp: Node, net_id: &str, known: &IndexMap<&str, bool>) -> Result<Net, ParseError> {
    let mut net = Net::new(net_id);
    let Some(pce) = child(decomp, "processControlElements") else {
        return Err(ParseError::MissingInputCondition { net: net_id.into() });
    };

    // Arcs are resolved after all nodes are known.
    let mut pending: Vec<(NodeId, String)> = Vec::new();
    let mut pending_cancel: Vec<(NodeId, String)> = Vec::new();

    for el in pce.children().filter(Node::is_element) {
        let kind = match local(&el) {
            "inputCondition" => Some(ConditionKind::Input),
            "outputCondition" => Some(ConditionKind::Output),
            "condition" => Some(ConditionKind::Plain),
            "task" => None,
            _ => continue,
        };
        let raw_id = attr(&el, "id").ok_or_else(|| ParseError::InvalidElement {
            node: local(&el).into(),
            message: "missing id attribute".into(),
        })?;
        let id = NodeId::new(raw_id)?;
        if net.contains(&id) {
            return Err(ParseError::DuplicateId { net: net_id.into(), id: raw_id.into() });
        }
        for flow in children(el, "flowsInto") {
            for next in children(flow, "nextElementRef") {
                if let Some(target) = attr(&next, "id") {
                    pending.push((id.clone(), target.to_string()));
                }
            }
        }
        match kind {
            Some(kind) => {
                if kind != ConditionKind::Plain
                    && net.conditions.values().any(|c| c.kind == kind)
                {
                    let kind = if kind == ConditionKind::Input { "input" } else { "output" };
                    return Err(ParseError::DuplicateBoundaryCondition { net: net_id.into(), kind });
                }
                net.conditions.insert(id.clone(), Condition { id, kind });
            }
            None => {
                let task = parse_task(el, id.clone(), net_id, known, &mut pending_cancel)?;
                net.tasks.insert(id, task);
            }
        }
    }

    if net.input_condition().is_none() {
        return Err(ParseError::MissingInputCondition { net: net_id.into() });
    }
    if net.output_condition().is_none() {
        return Err(ParseError::MissingOutputCondition { net: net_id.into() });
    }

    for (from, to) in pending {
        let to_id = NodeId::new(to.as_str()).ok().filter(|t| net.contains(t)).ok_or_else(|| {
            ParseError::DanglingReference {
                net: net_id.into(),
                node: from.to_string(),
                target: to.clone(),
                what: "flow",
            }
        })?;
        net.flows.insert(Flow::new(from, to_id));
    }
    for (task, target) in pending_cancel {
        let target_id = NodeId::new(target.as_str()).ok().filter(|t| net.contains(t)).ok_or_else(|| {
            ParseError::DanglingReference {
                net: net_id.into(),
                node: task.to_string(),
                target: target.clone(),
                what: "cancellation set",
            }
        })?;
        net.tasks[&task].cancel_set.insert(target_id);
    }
    let flows = net.flows.clone();
    for task in net.tasks.values() {
        for (a, b) in &task.cancel_flows {
            if !flows.contains(&Flow::new(a.clone(), b.clone())) {
                return Err(ParseError::DanglingReference {
                    net: net_id.into(),
                    node: task.id.to_string(),
                    target: format!("{a}->{b}"),
                    what: "cancellation set",
                });
            }
        }
    }
    Ok(net)
}

fn parse_task(
    el: Node,
    id: NodeId,
    net_id: &str,
    known: &IndexMap<&str, bool>,
    pending_cancel: &mut Vec<(NodeId, String)>,
) -> Result<Task, ParseError> {
    let mut task = Task::atomic(id.clone());
    let gate = |name: &str| -> Result<Gate, ParseError> {
        match child(el, name).and_then(|n| attr(&n, "code")) {
            None => Ok(Gate::Xor),
            Some(code) => Gate::from_code(code).ok_or_else(|| ParseError::InvalidElement {
                node: id.to_string(),
                message: format!("unknown {name} code {code:?}"),
            }),
        }
    };
    task.join = gate("join")?;
    task.split = gate("split")?;

    for rt in children(el, "removesTokens") {
        if let Some(target) = attr(&rt, "id") {
            pending_cancel.push((id.clone(), target.to_string()));
        }
    }
    for rf in children(el, "removesTokensFromFlow") {
        let src = child(rf, "flowSource").and_then(|n| attr(&n, "id"));
        let dst = child(rf, "flowDestination").and_then(|n| attr(&n, "id"));
        match (src, dst) {
            (Some(s), Some(d)) => task.cancel_flows.push((NodeId::new(s)?, NodeId::new(d)?)),
            _ => {
                return Err(ParseError::InvalidElement {
                    node: id.to_string(),
                    message: "removesTokensFromFlow needs flowSource and flowDestination".into(),
                })
            }
        }
    }

    if let Some(dec) = child(el, "decomposesTo").and_then(|n| attr(&n, "id")) {
        match known.get(dec) {
            None => {
                return Err(ParseError::DanglingReference {
                    net: net_id.into(),
                    node: id.to_string(),
                    target: dec.into(),
                    what: "decomposition",
                })
            }
            Some(true) => task.subnet = Some(dec.to_string()),
            Some(false) => {}
        }
    }

    let is_mi = attr(&el, "type").is_some_and(|t| t.starts_with("MultipleInstance"))
        || child(el, "minimum").is_some();
    if is_mi {
        task.mi = Some(parse_mi(el, &id)?);
        if task.subnet.is_some() {
            return Err(ParseError::UnsupportedFeature {
                node: id.to_string(),
                feature: "composite task with multiple instances".into(),
            });
        }
    }
    Ok(task)
}

fn parse_mi(el: Node, id: &NodeId) -> Result<MiParams, ParseError> {
    let unsupported = |feature: String| ParseError::UnsupportedFeature { node: id.to_string(), feature };
    if let Some(mode) = child(el, "creationMode").and_then(|n| attr(&n, "code")) {
        if !mode.eq_ignore_ascii_case("static") {
            return Err(unsupported(format!("{mode} instance creation")));
        }
    }
    let number = |name: &str| -> Result<u32, ParseError> {
        let text = child(el, name)
            .and_then(|n| n.text())
            .map(str::trim)
            .ok_or_else(|| ParseError::InvalidElement {
                node: id.to_string(),
                message: format!("multiple-instance task lacks <{name}>"),
            })?;
        text.parse::<u32>()
            .map_err(|_| unsupported(format!("non-constant {name} expression {text:?}")))
    };
    let mi = MiParams { min: number("minimum")?, max: number("maximum")?, threshold: number("threshold")? };
    if !mi.is_well_formed() {
        return Err(ParseError::InvalidElement {
            node: id.to_string(),
            message: format!(
                "multiple-instance bounds must satisfy 1 <= min <= max and 1 <= threshold <= max (got {}/{}/{})",
                mi.min, mi.max, mi.threshold
            ),
        });
    }
    if mi.max > MAX_MI_INSTANCES {
        return Err(unsupported(format!("more than {MAX_MI_INSTANCES} instances")));
    }
    Ok(mi)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<specificationSet xmlns="http://www.yawlfoundation.org/yawlschema"
    xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" version="2.2">
  <specification uri="minimal">
    <metaData><title>minimal</title></metaData>
    <decomposition id="Net" isRootNet="true" xsi:type="NetFactsType">
      <processControlElements>
        <inputCondition id="i"><flowsInto><nextElementRef id="t"/></flowsInto></inputCondition>
        <task id="t">
          <name>t</name>
          <flowsInto><nextElementRef id="o"/></flowsInto>
          <join code="and"/><split code="and"/>
          <resourcing><offer initiator="user"/></resourcing>
        </task>
        <outputCondition id="o"/>
      </processControlElements>
    </decomposition>
  </specification>
</specificationSet>"#;

    #[test]
    fn minimal_net() {
        let spec = parse_yawl(MINIMAL).unwrap();
        assert_eq!(spec.root.tasks.len(), 1);
        assert_eq!(spec.root.conditions.len(), 2);
        let t = &spec.root.tasks[0];
        assert_eq!((t.join, t.split), (Gate::And, Gate::And));
        assert!(spec.subnets.is_empty());
    }

    #[test]
    fn missing_output() {
        let xml = MINIMAL.replace(r#"<outputCondition id="o"/>"#, r#"<condition id="o"/>"#);
        assert_eq!(
            parse_yawl(&xml),
            Err(ParseError::MissingOutputCondition { net: "Net".into() })
        );
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_yawl("<specificationSet><spec"), Err(ParseError::MalformedXml(_))));
    }

    #[test]
    fn dangling_flow() {
        let xml = MINIMAL.replace(r#"<nextElementRef id="o"/>"#, r#"<nextElementRef id="nowhere"/>"#);
        assert!(matches!(parse_yawl(&xml), Err(ParseError::DanglingReference { what: "flow", .. })));
    }

    #[test]
    fn dotted_id_rejected() {
        let xml = MINIMAL.replace(r#"id="t""#, r#"id="t.x""#);
        assert!(matches!(parse_yawl(&xml), Err(ParseError::InvalidId(_))));
    }

    #[test]
    fn dynamic_mi_rejected() {
        let xml = MINIMAL.replace(
            "<join code=\"and\"/>",
            "<join code=\"and\"/><minimum>1</minimum><maximum>2</maximum><threshold>1</threshold><creationMode code=\"dynamic\"/>",
        );
        assert!(matches!(parse_yawl(&xml), Err(ParseError::UnsupportedFeature { .. })));
    }

    #[test]
    fn static_mi_parsed() {
        let xml = MINIMAL.replace(
            "<task id=\"t\">",
            "<task id=\"t\" xsi:type=\"MultipleInstanceExternalTaskFactsType\"><minimum>1</minimum><maximum>3</maximum><threshold>2</threshold><creationMode code=\"static\"/>",
        );
        let spec = parse_yawl(&xml).unwrap();
        assert_eq!(spec.root.tasks[0].mi, Some(MiParams { min: 1, max: 3, threshold: 2 }));
    }

    #[test]
    fn unknown_decomposition_is_dangling() {
        let xml = MINIMAL.replace("<name>t</name>", "<name>t</name><decomposesTo id=\"ghost\"/>");
        assert!(matches!(
            parse_yawl(&xml),
            Err(ParseError::DanglingReference { what: "decomposition", .. })
        ));
    }
}
