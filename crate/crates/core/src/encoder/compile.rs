use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::Marking;
use crate::model::{
    event_alphabet, validate, Diagnostic, EventLabel, Gate, NetInstance, NodeId, Task, WorkflowSpec,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceOrigin {
    Condition(String),
    Busy(String),
    MiActive(String),
    MiCompleted(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub name: String,
    pub origin: PlaceOrigin,
    /// Largest token count allowed during exploration.
    pub capacity: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    None,
    /// Index into [`CompiledNet::or_joins`].
    OrJoin(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetTransition {
    pub label: EventLabel,
    pub consume: Vec<(usize, u16)>,
    pub produce: Vec<(usize, u16)>,
    pub resets: Vec<usize>,
    pub guard: Guard,
}

/// An OR-join task: its input places and the `start` variants to exclude
/// while deciding whether it may fire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrJoin {
    pub task: String,
    pub inputs: Vec<usize>,
    pub variants: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CompiledNet {
    pub places: Vec<Place>,
    pub transitions: Vec<NetTransition>,
    pub initial: Marking,
    pub final_place: usize,
    pub bound: u16,
    pub or_joins: Vec<OrJoin>,
    pub alphabet: BTreeSet<EventLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("workflow is not valid ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("bound must be at least 1")]
    ZeroBound,
    #[error("place capacity {0} exceeds the supported maximum")]
    CapacityOverflow(u64),
}

impl CompiledNet {
    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn or_join_index(&self, task: &str) -> Option<usize> {
        self.or_joins.iter().position(|o| o.task == task)
    }

    /// Inputs of `or_join` holding at least one token, as a bit set over
    /// the join's input list.
    pub(crate) fn marked_inputs(&self, or_join: usize, m: &Marking) -> u64 {
        self.or_joins[or_join]
            .inputs
            .iter()
            .enumerate()
            .filter(|(_, &p)| m.get(p) > 0)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// Whether `t`'s token requirements are met, ignoring guards.
    pub fn covers(&self, t: &NetTransition, m: &Marking) -> bool {
        t.consume.iter().all(|&(p, n)| m.get(p) >= n)
    }

    /// Applies the firing rule: subtract `consume`, zero `resets`, add
    /// `produce`. Returns the offending place when a capacity is exceeded.
    pub fn fire(&self, t: &NetTransition, m: &Marking) -> Result<Marking, usize> {
        let mut next = m.clone();
        for &(p, n) in &t.consume {
            next.set(p, next.get(p) - n);
        }
        for &p in &t.resets {
            next.set(p, 0);
        }
        for &(p, n) in &t.produce {
            let count = u32::from(next.get(p)) + u32::from(n);
            if count > u32::from(self.places[p].capacity) {
                return Err(p);
            }
            next.set(p, count as u16);
        }
        Ok(next)
    }

    pub fn is_final(&self, m: &Marking) -> bool {
        m.counts()
            .iter()
            .enumerate()
            .all(|(p, &c)| if p == self.final_place { c == 1 } else { c == 0 })
    }
}

fn cond_place(qualified: &str) -> String {
    format!("cond:{qualified}")
}

fn busy_place(task: &str) -> String {
    format!("busy:{task}")
}

/// All nonempty subsets of `items`, in increasing bit-mask order.
fn nonempty_subsets<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    assert!(items.len() < 20, "OR gate with {} branches", items.len());
    (1u32..(1 << items.len()))
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

fn gate_variants<T: Clone>(gate: Gate, items: &[T]) -> Vec<Vec<T>> {
    match gate {
        Gate::And => vec![items.to_vec()],
        Gate::Xor => items.iter().map(|x| vec![x.clone()]).collect(),
        Gate::Or => nonempty_subsets(items),
    }
}

struct Builder {
    places: Vec<Place>,
    index: HashMap<String, usize>,
    bound: u16,
}

impl Builder {
    fn add(&mut self, name: String, origin: PlaceOrigin, capacity: u16) -> usize {
        let idx = self.places.len();
        self.index.insert(name.clone(), idx);
        self.places.push(Place { name, origin, capacity });
        idx
    }

    fn get(&self, name: &str) -> usize {
        self.index[name]
    }
}

/// Compiles a valid, normalized spec into a reset net with place capacity
/// `bound` (multiple-instance counters get `bound * max`).
pub fn compile(spec: &WorkflowSpec, bound: u16) -> Result<CompiledNet, CompileError> {
    if bound == 0 {
        return Err(CompileError::ZeroBound);
    }
    let diagnostics = validate(spec);
    if !diagnostics.is_empty() {
        return Err(CompileError::Invalid(diagnostics));
    }

    let instances = spec.instances();
    let mut b = Builder { places: Vec::new(), index: HashMap::new(), bound };

    for inst in &instances {
        for c in inst.net.conditions.values() {
            let q = inst.qualify(&c.id);
            b.add(cond_place(&q), PlaceOrigin::Condition(q), bound);
        }
        for t in inst.net.tasks.values() {
            let q = inst.qualify(&t.id);
            match t.mi {
                Some(mi) => {
                    let cap = u64::from(bound) * u64::from(mi.max);
                    let cap = u16::try_from(cap).map_err(|_| CompileError::CapacityOverflow(cap))?;
                    b.add(format!("mi_active:{q}"), PlaceOrigin::MiActive(q.clone()), cap);
                    b.add(format!("mi_done:{q}"), PlaceOrigin::MiCompleted(q), cap);
                }
                None => {
                    b.add(busy_place(&q), PlaceOrigin::Busy(q), b.bound);
                }
            }
        }
    }

    let mut transitions = Vec::new();
    let mut or_joins = Vec::new();
    for inst in &instances {
        for task in inst.net.tasks.values() {
            compile_task(&b, spec, inst, task, &mut transitions, &mut or_joins);
        }
    }

    let root = NetInstance { path: None, net: &spec.root };
    let input = root.qualify(&spec.root.input_condition().expect("validated").id);
    let output = root.qualify(&spec.root.output_condition().expect("validated").id);
    let mut initial = Marking::empty(b.places.len());
    initial.set(b.get(&cond_place(&input)), 1);

    Ok(CompiledNet {
        final_place: b.get(&cond_place(&output)),
        places: b.places,
        transitions,
        initial,
        bound,
        or_joins,
        alphabet: event_alphabet(spec),
    })
}

fn compile_task(
    b: &Builder,
    spec: &WorkflowSpec,
    inst: &NetInstance,
    task: &Task,
    transitions: &mut Vec<NetTransition>,
    or_joins: &mut Vec<OrJoin>,
) {
    let path = inst.qualify(&task.id);
    let place_of = |id: &NodeId| b.get(&cond_place(&inst.qualify(id)));
    let inputs: Vec<usize> = inst.net.preset(&task.id).into_iter().map(place_of).collect();
    let outputs: Vec<usize> = inst.net.postset(&task.id).into_iter().map(place_of).collect();

    let subnet_path = task.subnet.as_ref().map(|_| path.clone());
    let subnet = task.subnet.as_deref().and_then(|s| spec.subnets.get(s));
    let sub_place = |pick: fn(&crate::model::Net) -> Option<&crate::model::Condition>| {
        let (net, sp) = (subnet.expect("composite"), subnet_path.as_deref().expect("composite"));
        let c = pick(net).expect("validated");
        b.get(&cond_place(&crate::model::qualify(Some(sp), c.id.as_str())))
    };

    let guard = if task.join == Gate::Or {
        or_joins.push(OrJoin { task: path.clone(), inputs: inputs.clone(), variants: Vec::new() });
        Guard::OrJoin(or_joins.len() - 1)
    } else {
        Guard::None
    };

    // start variants
    for join in gate_variants(task.join, &inputs) {
        let consume: Vec<(usize, u16)> = join.iter().map(|&p| (p, 1)).collect();
        let mut produces: Vec<Vec<(usize, u16)>> = Vec::new();
        if let Some(mi) = task.mi {
            let active = b.get(&format!("mi_active:{path}"));
            for n in mi.min..=mi.max {
                produces.push(vec![(active, n as u16)]);
            }
        } else if subnet.is_some() {
            produces.push(vec![(b.get(&busy_place(&path)), 1), (sub_place(|n| n.input_condition()), 1)]);
        } else {
            produces.push(vec![(b.get(&busy_place(&path)), 1)]);
        }
        for produce in produces {
            if let Guard::OrJoin(j) = guard {
                or_joins[j].variants.push(transitions.len());
            }
            transitions.push(NetTransition {
                label: EventLabel::start(&path),
                consume: consume.clone(),
                produce,
                resets: Vec::new(),
                guard,
            });
        }
    }

    // instance completion
    if task.mi.is_some() {
        transitions.push(NetTransition {
            label: EventLabel::inst_end(&path),
            consume: vec![(b.get(&format!("mi_active:{path}")), 1)],
            produce: vec![(b.get(&format!("mi_done:{path}")), 1)],
            resets: Vec::new(),
            guard: Guard::None,
        });
    }

    // end variants
    let mut resets = cancel_resets(b, spec, inst, task);
    let consume: Vec<(usize, u16)> = match task.mi {
        Some(mi) => {
            resets.push(b.get(&format!("mi_active:{path}")));
            resets.push(b.get(&format!("mi_done:{path}")));
            vec![(b.get(&format!("mi_done:{path}")), mi.threshold as u16)]
        }
        None if subnet.is_some() => {
            vec![(b.get(&busy_place(&path)), 1), (sub_place(|n| n.output_condition()), 1)]
        }
        None => vec![(b.get(&busy_place(&path)), 1)],
    };
    resets.sort_unstable();
    resets.dedup();
    for split in gate_variants(task.split, &outputs) {
        transitions.push(NetTransition {
            label: EventLabel::end(&path),
            consume: consume.clone(),
            produce: split.iter().map(|&p| (p, 1)).collect(),
            resets: resets.clone(),
            guard: Guard::None,
        });
    }
}

/// Places emptied when `task` completes. A cancelled composite task also
/// loses every place of its unfolded subnet.
fn cancel_resets(b: &Builder, spec: &WorkflowSpec, inst: &NetInstance, task: &Task) -> Vec<usize> {
    let mut out = Vec::new();
    for member in &task.cancel_set {
        let q = inst.qualify(member);
        if inst.net.conditions.contains_key(member) {
            out.push(b.get(&cond_place(&q)));
            continue;
        }
        let Some(target) = inst.net.tasks.get(member) else { continue };
        if target.mi.is_some() {
            out.push(b.get(&format!("mi_active:{q}")));
            out.push(b.get(&format!("mi_done:{q}")));
        } else {
            out.push(b.get(&busy_place(&q)));
        }
        if target.subnet.is_some() && spec.subnets.contains_key(target.subnet.as_deref().unwrap_or_default()) {
            let prefix = format!("{q}.");
            for (i, p) in b.places.iter().enumerate() {
                let inner = match &p.origin {
                    PlaceOrigin::Condition(n)
                    | PlaceOrigin::Busy(n)
                    | PlaceOrigin::MiActive(n)
                    | PlaceOrigin::MiCompleted(n) => n,
                };
                if inner.starts_with(&prefix) {
                    out.push(i);
                }
            }
        }
    }
    out
}
