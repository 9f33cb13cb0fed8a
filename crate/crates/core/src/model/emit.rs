use std::fmt::Write;

use super::{ConditionKind, Net, WorkflowSpec};

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes the control-flow subset back to YAWL XML.
pub fn emit_yawl(spec: &WorkflowSpec) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<specificationSet xmlns=\"http://www.yawlfoundation.org/yawlschema\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" version=\"2.2\">\n",
    );
    let _ = writeln!(out, "  <specification uri=\"{}\">", esc(&spec.root.id));
    emit_net(&mut out, &spec.root, true);
    for net in spec.subnets.values() {
        emit_net(&mut out, net, false);
    }
    out.push_str("  </specification>\n</specificationSet>\n");
    out
}

fn emit_net(out: &mut String, net: &Net, root: bool) {
    let root_attr = if root { " isRootNet=\"true\"" } else { "" };
    let _ = writeln!(
        out,
        "    <decomposition id=\"{}\"{root_attr} xsi:type=\"NetFactsType\">",
        esc(&net.id)
    );
    out.push_str("      <processControlElements>\n");
    let flows_into = |out: &mut String, id: &super::NodeId| {
        for to in net.postset(id) {
            let _ = writeln!(
                out,
                "          <flowsInto><nextElementRef id=\"{}\"/></flowsInto>",
                esc(to.as_str())
            );
        }
    };
    for c in net.conditions.values() {
        let tag = match c.kind {
            ConditionKind::Input => "inputCondition",
            ConditionKind::Output => "outputCondition",
            ConditionKind::Plain | ConditionKind::Implicit => "condition",
        };
        let _ = writeln!(out, "        <{tag} id=\"{}\">", esc(c.id.as_str()));
        flows_into(out, &c.id);
        let _ = writeln!(out, "        </{tag}>");
    }
    for t in net.tasks.values() {
        let ty = if t.mi.is_some() {
            "MultipleInstanceExternalTaskFactsType"
        } else {
            "ExternalTaskFactsType"
        };
        let _ = writeln!(out, "        <task id=\"{}\" xsi:type=\"{ty}\">", esc(t.id.as_str()));
        flows_into(out, &t.id);
        let _ = writeln!(out, "          <join code=\"{}\"/>", t.join.code());
        let _ = writeln!(out, "          <split code=\"{}\"/>", t.split.code());
        for r in &t.cancel_set {
            let _ = writeln!(out, "          <removesTokens id=\"{}\"/>", esc(r.as_str()));
        }
        for (a, b) in &t.cancel_flows {
            let _ = writeln!(
                out,
                "          <removesTokensFromFlow><flowSource id=\"{}\"/><flowDestination id=\"{}\"/></removesTokensFromFlow>",
                esc(a.as_str()),
                esc(b.as_str())
            );
        }
        if let Some(mi) = t.mi {
            let _ = writeln!(
                out,
                "          <minimum>{}</minimum><maximum>{}</maximum><threshold>{}</threshold><creationMode code=\"static\"/>",
                mi.min, mi.max, mi.threshold
            );
        }
        if let Some(sub) = &t.subnet {
            let _ = writeln!(out, "          <decomposesTo id=\"{}\"/>", esc(sub));
        }
        out.push_str("        </task>\n");
    }
    out.push_str("      </processControlElements>\n    </decomposition>\n");
}
