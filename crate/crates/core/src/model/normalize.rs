use indexmap::IndexSet;

use super::{Condition, ConditionKind, Flow, Net, NodeId, WorkflowSpec};

/// Replaces every task-to-task arc `a -> b` with `a -> c_a_b -> b` through a
/// fresh implicit condition. Cancelled arcs become cancelled conditions.
pub fn normalize(spec: &WorkflowSpec) -> WorkflowSpec {
    let mut out = spec.clone();
    normalize_net(&mut out.root);
    for net in out.subnets.values_mut() {
        normalize_net(net);
    }
    out
}

fn fresh_id(net: &Net, a: &NodeId, b: &NodeId) -> NodeId {
    let base = format!("c_{a}_{b}");
    let mut candidate = base.clone();
    let mut n = 2;
    loop {
        // Both parts are valid local ids, so the concatenation is too.
        let id = NodeId::new(candidate.as_str()).expect("derived from valid ids");
        if !net.contains(&id) {
            return id;
        }
        candidate = format!("{base}_{n}");
        n += 1;
    }
}

fn normalize_net(net: &mut Net) {
    let mut flows = IndexSet::with_capacity(net.flows.len());
    let mut implicit: Vec<(Flow, NodeId)> = Vec::new();
    let old = std::mem::take(&mut net.flows);
    for flow in old {
        if net.tasks.contains_key(&flow.from) && net.tasks.contains_key(&flow.to) {
            let c = fresh_id(net, &flow.from, &flow.to);
            net.conditions.insert(c.clone(), Condition { id: c.clone(), kind: ConditionKind::Implicit });
            flows.insert(Flow::new(flow.from.clone(), c.clone()));
            flows.insert(Flow::new(c.clone(), flow.to.clone()));
            implicit.push((flow, c));
        } else {
            flows.insert(flow);
        }
    }
    net.flows = flows;

    for task in net.tasks.values_mut() {
        for (a, b) in std::mem::take(&mut task.cancel_flows) {
            let flow = Flow::new(a.clone(), b);
            if let Some((_, c)) = implicit.iter().find(|(f, _)| *f == flow) {
                task.cancel_set.insert(c.clone());
            } else if net.conditions.contains_key(&a) {
                task.cancel_set.insert(a);
            }
        }
    }
}
