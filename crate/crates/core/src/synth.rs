//! Synthetic workflows for benchmarks and scalability tests.

use crate::model::{normalize, Condition, ConditionKind, Flow, Gate, Net, NodeId, Task, WorkflowSpec};

/// Shape of a layered workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayeredParams {
    /// Total task count, at least `branches + 7`.
    pub tasks: usize,
    /// Concurrent branches opened by the initial AND-split.
    pub branches: usize,
}

impl Default for LayeredParams {
    fn default() -> Self {
        LayeredParams { tasks: 58, branches: 3 }
    }
}

struct Builder {
    net: Net,
}

impl Builder {
    fn id(s: &str) -> NodeId {
        NodeId::new(s).expect("generated ids are valid")
    }

    fn condition(&mut self, id: &str, kind: ConditionKind) {
        self.net.conditions.insert(Self::id(id), Condition { id: Self::id(id), kind });
    }

    fn task(&mut self, id: &str, join: Gate, split: Gate) {
        let mut t = Task::atomic(Self::id(id));
        t.join = join;
        t.split = split;
        self.net.tasks.insert(Self::id(id), t);
    }

    fn flow(&mut self, from: &str, to: &str) {
        self.net.flows.insert(Flow::new(Self::id(from), Self::id(to)));
    }

    fn cancel(&mut self, task: &str, members: &[&str]) {
        let t = self.net.tasks.get_mut(&Self::id(task)).expect("task exists");
        t.cancel_set.extend(members.iter().map(|m| Self::id(m)));
    }
}

/// A layered workflow: an AND-split opens `branches` concurrent lanes, each
/// a chain of single tasks and XOR diamonds, closed by an AND-join. Lane 0
/// starts with a race where two tasks cancel each other's side, which gives
/// two cancel regions.
pub fn layered_workflow(params: LayeredParams) -> WorkflowSpec {
    assert!(params.branches >= 1 && params.tasks >= params.branches + 7, "too few tasks for the layout");
    let mut b = Builder { net: Net::new("Layered") };
    b.condition("i", ConditionKind::Input);
    b.condition("o", ConditionKind::Output);
    b.task("start", Gate::Xor, Gate::And);
    b.task("end", Gate::And, Gate::And);
    b.flow("i", "start");
    b.flow("end", "o");

    // race: d splits to p and q; w follows p, v follows q; each of w and v
    // cancels the other side, so exactly one token reaches r
    b.task("race_d", Gate::Xor, Gate::And);
    for t in ["race_p", "race_q", "race_w", "race_v"] {
        b.task(t, Gate::Xor, Gate::And);
    }
    for c in ["race_dp", "race_dq", "race_pw", "race_qv", "race_r"] {
        b.condition(c, ConditionKind::Plain);
    }
    b.flow("start", "race_d");
    for (from, to) in [
        ("race_d", "race_dp"),
        ("race_d", "race_dq"),
        ("race_dp", "race_p"),
        ("race_dq", "race_q"),
        ("race_p", "race_pw"),
        ("race_q", "race_qv"),
        ("race_pw", "race_w"),
        ("race_qv", "race_v"),
        ("race_w", "race_r"),
        ("race_v", "race_r"),
    ] {
        b.flow(from, to);
    }
    b.cancel("race_w", &["race_dq", "race_q", "race_qv", "race_v"]);
    b.cancel("race_v", &["race_dp", "race_p", "race_pw", "race_w"]);

    let budget = params.tasks - 7;
    for lane in 0..params.branches {
        let mut n = budget / params.branches + usize::from(lane < budget % params.branches);
        let mut prev = if lane == 0 { "race_r".to_string() } else { "start".to_string() };
        let mut k = 0;
        while n > 0 {
            if k % 2 == 1 && n >= 4 {
                let x = format!("l{lane}_{k}_x");
                let y1 = format!("l{lane}_{k}_a");
                let y2 = format!("l{lane}_{k}_b");
                let j = format!("l{lane}_{k}_j");
                b.task(&x, Gate::Xor, Gate::Xor);
                b.task(&y1, Gate::Xor, Gate::And);
                b.task(&y2, Gate::Xor, Gate::And);
                b.task(&j, Gate::Xor, Gate::And);
                b.flow(&prev, &x);
                for y in [&y1, &y2] {
                    b.flow(&x, y);
                    b.flow(y, &j);
                }
                prev = j;
                n -= 4;
            } else {
                let t = format!("l{lane}_{k}");
                b.task(&t, Gate::Xor, Gate::And);
                b.flow(&prev, &t);
                prev = t;
                n -= 1;
            }
            k += 1;
        }
        b.flow(&prev, "end");
    }
    normalize(&WorkflowSpec::new(b.net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{build_lts, compile, find_deadlocks, Limits};
    use crate::model::validate;

    #[test]
    fn shape() {
        let spec = layered_workflow(LayeredParams::default());
        assert!(validate(&spec).is_empty(), "{:?}", validate(&spec));
        assert_eq!(spec.root.tasks.len(), 58);
        let regions = spec.root.tasks.values().filter(|t| !t.cancel_set.is_empty()).count();
        assert_eq!(regions, 2);
    }

    #[test]
    fn small_instance_is_sound() {
        let spec = layered_workflow(LayeredParams { tasks: 14, branches: 2 });
        let lts = build_lts(&compile(&spec, 1).unwrap(), Limits::default()).unwrap();
        assert!(find_deadlocks(&lts).is_empty());
        assert!(lts.final_states().count() == 1);
    }
}
