//! Test support: fixtures, independent oracles and random generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::path::PathBuf;

use flowcheck::encoder::{Lts, StateId};
use flowcheck::fltl::{eval_on_lasso, Assertion, FluentDef, Formula};
use flowcheck::model::{
    normalize, Condition, ConditionKind, EventLabel, Flow, Gate, MiParams, Net, NodeId, Task, WorkflowSpec,
    DEADLOCK, TERMINATE,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> WorkflowSpec {
    normalize(&flowcheck::model::parse_yawl(&fixture(name)).expect("fixture parses"))
}

// ---------------------------------------------------------------------------
// Naive firing-sequence enumerator, written directly against the workflow
// model. Places are string keys: `c:` condition, `b:` busy, `a:` active
// instances, `d:` completed instances.

type State = BTreeMap<String, u32>;

struct NaiveTask {
    path: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    join: Gate,
    split: Gate,
    mi: Option<MiParams>,
    /// Subnet input and output condition keys of a composite task.
    subnet: Option<(String, String)>,
    /// Keys zeroed on completion.
    clear: Vec<String>,
    /// Task paths whose whole subnet is zeroed on completion.
    clear_below: Vec<String>,
}

pub struct Naive {
    tasks: Vec<NaiveTask>,
    initial: State,
    final_key: String,
    bound: u32,
}

pub enum NaiveError {
    Overflow,
}

fn nonempty_subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
}

fn qualify(path: &Option<String>, id: &NodeId) -> String {
    match path {
        Some(p) => format!("{p}.{id}"),
        None => id.to_string(),
    }
}

impl Naive {
    pub fn new(spec: &WorkflowSpec, bound: u32) -> Self {
        let mut tasks = Vec::new();
        let mut stack: Vec<(Option<String>, &Net)> = vec![(None, &spec.root)];
        while let Some((path, net)) = stack.pop() {
            for t in net.tasks.values() {
                let tp = qualify(&path, &t.id);
                let key = |n: &NodeId| format!("c:{}", qualify(&path, n));
                let inputs = net.flows.iter().filter(|f| f.to == t.id).map(|f| key(&f.from)).collect();
                let outputs = net.flows.iter().filter(|f| f.from == t.id).map(|f| key(&f.to)).collect();
                let mut subnet = None;
                if let Some(sub) = t.subnet.as_deref().and_then(|s| spec.subnets.get(s)) {
                    let inner = |c: &Condition| format!("c:{tp}.{}", c.id);
                    let i = sub.conditions.values().find(|c| c.kind == ConditionKind::Input).unwrap();
                    let o = sub.conditions.values().find(|c| c.kind == ConditionKind::Output).unwrap();
                    subnet = Some((inner(i), inner(o)));
                    stack.push((Some(tp.clone()), sub));
                }
                let mut clear = Vec::new();
                let mut clear_below = Vec::new();
                for m in &t.cancel_set {
                    let q = qualify(&path, m);
                    if net.conditions.contains_key(m) {
                        clear.push(format!("c:{q}"));
                    } else {
                        clear.extend(["b", "a", "d"].map(|p| format!("{p}:{q}")));
                        clear_below.push(format!("{q}."));
                    }
                }
                tasks.push(NaiveTask {
                    path: tp,
                    inputs,
                    outputs,
                    join: t.join,
                    split: t.split,
                    mi: t.mi,
                    subnet,
                    clear,
                    clear_below,
                });
            }
        }
        tasks.sort_by(|a, b| a.path.cmp(&b.path));
        let cond = |kind| spec.root.conditions.values().find(|c| c.kind == kind).unwrap().id.to_string();
        let initial = State::from([(format!("c:{}", cond(ConditionKind::Input)), 1)]);
        Naive { tasks, initial, final_key: format!("c:{}", cond(ConditionKind::Output)), bound }
    }

    fn cap(&self, key: &str, mi_max: &HashMap<String, u32>) -> u32 {
        if key.starts_with("a:") || key.starts_with("d:") {
            self.bound * mi_max.get(&key[2..]).copied().unwrap_or(1)
        } else {
            self.bound
        }
    }

    fn get(s: &State, k: &str) -> u32 {
        s.get(k).copied().unwrap_or(0)
    }

    fn add(s: &mut State, k: &str, n: u32) {
        *s.entry(k.to_string()).or_insert(0) += n;
    }

    fn take(s: &mut State, k: &str, n: u32) {
        let v = s.get_mut(k).unwrap();
        *v -= n;
        if *v == 0 {
            s.remove(k);
        }
    }

    pub fn is_final(&self, s: &State) -> bool {
        s.len() == 1 && Self::get(s, &self.final_key) == 1
    }

    /// All firings at `s`. With `guarded` false, OR-joins fire any marked
    /// subset without the non-local check, and `skip` names a task whose
    /// start is excluded.
    fn moves(&self, s: &State, guarded: bool, skip: Option<usize>) -> Vec<(String, Result<State, NaiveError>)> {
        let mi_max: HashMap<String, u32> =
            self.tasks.iter().filter_map(|t| t.mi.map(|m| (t.path.clone(), m.max))).collect();
        let check = |st: State| -> Result<State, NaiveError> {
            if st.iter().any(|(k, &v)| v > self.cap(k, &mi_max)) {
                Err(NaiveError::Overflow)
            } else {
                Ok(st)
            }
        };
        let mut out = Vec::new();
        for (idx, t) in self.tasks.iter().enumerate() {
            // start
            if skip != Some(idx) {
                let n = t.inputs.len();
                let subsets: Vec<Vec<usize>> = match t.join {
                    Gate::And => vec![(0..n).collect()],
                    Gate::Xor => (0..n).map(|i| vec![i]).collect(),
                    Gate::Or => nonempty_subsets(n).collect(),
                };
                for sub in subsets {
                    if !sub.iter().all(|&i| Self::get(s, &t.inputs[i]) >= 1) {
                        continue;
                    }
                    if t.join == Gate::Or && guarded {
                        let marked: Vec<usize> = (0..n).filter(|&i| Self::get(s, &t.inputs[i]) >= 1).collect();
                        if sub != marked || !self.or_join_ok(s, idx) {
                            continue;
                        }
                    }
                    let mut base = s.clone();
                    for &i in &sub {
                        Self::take(&mut base, &t.inputs[i], 1);
                    }
                    let label = format!("{}.start", t.path);
                    if let Some(mi) = t.mi {
                        for k in mi.min..=mi.max {
                            let mut st = base.clone();
                            Self::add(&mut st, &format!("a:{}", t.path), k);
                            out.push((label.clone(), check(st)));
                        }
                    } else {
                        let mut st = base;
                        match &t.subnet {
                            Some((i, _)) => {
                                Self::add(&mut st, i, 1);
                            }
                            None => Self::add(&mut st, &format!("b:{}", t.path), 1),
                        }
                        out.push((label, check(st)));
                    }
                }
            }
            // instance completion
            if t.mi.is_some() && Self::get(s, &format!("a:{}", t.path)) >= 1 {
                let mut st = s.clone();
                Self::take(&mut st, &format!("a:{}", t.path), 1);
                Self::add(&mut st, &format!("d:{}", t.path), 1);
                out.push((format!("{}.inst.end", t.path), check(st)));
            }
            // end
            let mut st = s.clone();
            let ready = match (&t.mi, &t.subnet) {
                (Some(mi), _) => {
                    let done = format!("d:{}", t.path);
                    if Self::get(s, &done) >= mi.threshold {
                        st.remove(&done);
                        st.remove(&format!("a:{}", t.path));
                        true
                    } else {
                        false
                    }
                }
                (None, Some((_, o))) => {
                    if Self::get(s, o) >= 1 {
                        Self::take(&mut st, o, 1);
                        true
                    } else {
                        false
                    }
                }
                (None, None) => {
                    let b = format!("b:{}", t.path);
                    if Self::get(s, &b) >= 1 {
                        Self::take(&mut st, &b, 1);
                        true
                    } else {
                        false
                    }
                }
            };
            if !ready {
                continue;
            }
            for k in &t.clear {
                st.remove(k);
            }
            st.retain(|k, _| !t.clear_below.iter().any(|p| k[2..].starts_with(p.as_str())));
            let n = t.outputs.len();
            let subsets: Vec<Vec<usize>> = match t.split {
                Gate::And => vec![(0..n).collect()],
                Gate::Xor => (0..n).map(|i| vec![i]).collect(),
                Gate::Or => nonempty_subsets(n).collect(),
            };
            for sub in subsets {
                let mut next = st.clone();
                for &i in &sub {
                    Self::add(&mut next, &t.outputs[i], 1);
                }
                out.push((format!("{}.end", t.path), check(next)));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn or_join_ok(&self, s: &State, idx: usize) -> bool {
        let t = &self.tasks[idx];
        let marked = |st: &State| -> BTreeSet<usize> {
            (0..t.inputs.len()).filter(|&i| Self::get(st, &t.inputs[i]) >= 1).collect()
        };
        let m0 = marked(s);
        if m0.is_empty() {
            return false;
        }
        let mut seen = HashSet::from([s.clone()]);
        let mut queue = VecDeque::from([s.clone()]);
        while let Some(cur) = queue.pop_front() {
            for (_, next) in self.moves(&cur, false, Some(idx)) {
                let Ok(next) = next else { continue };
                let m = marked(&next);
                if m.is_superset(&m0) && m != m0 {
                    return false;
                }
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        true
    }

    /// Guarded successors, with the self-loop convention for final and
    /// stuck states. Panics if the bound is exceeded.
    pub fn successors(&self, s: &State) -> Vec<(String, State)> {
        if self.is_final(s) {
            return vec![(TERMINATE.to_string(), s.clone())];
        }
        let mut out: Vec<(String, State)> = self
            .moves(s, true, None)
            .into_iter()
            .map(|(l, r)| (l, r.unwrap_or_else(|_| panic!("bound exceeded in naive enumeration"))))
            .collect();
        if out.is_empty() {
            out.push((DEADLOCK.to_string(), s.clone()));
        }
        out.dedup();
        out
    }

    /// Every event sequence of exactly `len` steps from the initial state.
    pub fn traces(&self, len: usize) -> BTreeSet<Vec<String>> {
        let mut out = BTreeSet::new();
        let mut memo: HashMap<State, Vec<(String, State)>> = HashMap::new();
        let mut stack = vec![(self.initial.clone(), Vec::new())];
        while let Some((s, trace)) = stack.pop() {
            if trace.len() == len {
                out.insert(trace);
                continue;
            }
            let succ = memo.entry(s.clone()).or_insert_with(|| self.successors(&s)).clone();
            for (l, t) in succ {
                let mut next = trace.clone();
                next.push(l);
                stack.push((t, next));
            }
        }
        out
    }

    /// Number of reachable states.
    pub fn state_count(&self) -> usize {
        let mut seen = HashSet::from([self.initial.clone()]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.successors(&s) {
                if seen.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
        seen.len()
    }
}

// ---------------------------------------------------------------------------
// FSP subset reader: `NAME = S0, S0 = (a -> S1 | b -> S2), S1 = STOP.`

pub struct FspModel {
    pub name: String,
    pub states: usize,
    pub edges: Vec<(u32, String, u32)>,
}

pub fn read_fsp(text: &str) -> Result<FspModel, String> {
    let body = text.trim().strip_suffix('.').ok_or("missing final '.'")?;
    let mut defs = body.split(',').map(str::trim);
    let head = defs.next().ok_or("empty text")?;
    let (name, start) = head.split_once('=').ok_or("missing process equation")?;
    if start.trim() != "S0" {
        return Err(format!("process starts at {start}"));
    }
    let mut edges = Vec::new();
    let mut states = 0usize;
    for (k, def) in defs.enumerate() {
        let (lhs, rhs) = def.split_once('=').ok_or_else(|| format!("bad definition {def:?}"))?;
        if lhs.trim() != format!("S{k}") {
            return Err(format!("expected S{k}, found {lhs}"));
        }
        states += 1;
        let rhs = rhs.trim();
        if rhs == "STOP" {
            continue;
        }
        let inner = rhs
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("bad choice {rhs:?}"))?;
        for choice in inner.split('|') {
            let (label, target) = choice.split_once("->").ok_or_else(|| format!("bad prefix {choice:?}"))?;
            let target = target.trim().strip_prefix('S').ok_or("bad target")?;
            let target: u32 = target.parse().map_err(|_| format!("bad target {target}"))?;
            edges.push((k as u32, label.trim().to_string(), target));
        }
    }
    Ok(FspModel { name: name.trim().to_string(), states, edges })
}

// ---------------------------------------------------------------------------
// Random workflows and formulas.

fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

fn gate<R: Rng>(rng: &mut R) -> Gate {
    *[Gate::And, Gate::Xor, Gate::Or].choose(rng).unwrap()
}

/// Random acyclic workflow before normalization: tasks in topological
/// order, each with one or two earlier predecessors, every sink feeding the
/// last task, all arcs task to task. Joins and splits are random.
pub fn random_raw_workflow<R: Rng>(rng: &mut R, max_tasks: usize) -> WorkflowSpec {
    let n = rng.gen_range(2..=max_tasks);
    let name = |k: usize| format!("t{k}");
    let mut net = Net::new("R");
    net.conditions.insert(id("i"), Condition { id: id("i"), kind: ConditionKind::Input });
    net.conditions.insert(id("o"), Condition { id: id("o"), kind: ConditionKind::Output });
    for k in 0..n {
        let mut t = Task::atomic(id(&name(k)));
        t.join = gate(rng);
        t.split = gate(rng);
        net.tasks.insert(id(&name(k)), t);
    }
    net.flows.insert(Flow::new(id("i"), id(&name(0))));
    net.flows.insert(Flow::new(id(&name(n - 1)), id("o")));
    let mut has_succ = vec![false; n];
    for k in 1..n - 1 {
        let preds = rng.gen_range(1..=2.min(k));
        for _ in 0..preds {
            let p = rng.gen_range(0..k);
            has_succ[p] = true;
            net.flows.insert(Flow::new(id(&name(p)), id(&name(k))));
        }
    }
    for (p, _) in has_succ[..n - 1].iter().enumerate().filter(|(_, linked)| !**linked) {
        net.flows.insert(Flow::new(id(&name(p)), id(&name(n - 1))));
    }
    if n == 2 {
        net.flows.insert(Flow::new(id(&name(0)), id(&name(1))));
    }
    WorkflowSpec::new(net)
}

/// [`random_raw_workflow`], normalized, with optional cancel sets.
pub fn random_workflow<R: Rng>(rng: &mut R, max_tasks: usize) -> WorkflowSpec {
    let mut spec = normalize(&random_raw_workflow(rng, max_tasks));
    if rng.gen_bool(0.4) {
        let nodes: Vec<NodeId> = spec
            .root
            .tasks
            .keys()
            .chain(spec.root.conditions.values().filter(|c| c.kind == ConditionKind::Implicit).map(|c| &c.id))
            .cloned()
            .collect();
        for _ in 0..rng.gen_range(1..=2) {
            let owner = spec.root.tasks.keys().cloned().collect::<Vec<_>>().choose(rng).unwrap().clone();
            let count = rng.gen_range(1..=2);
            let members: Vec<NodeId> = nodes.choose_multiple(rng, count).cloned().collect();
            spec.root.tasks[&owner].cancel_set.extend(members.into_iter().filter(|m| *m != owner));
        }
    }
    spec
}

/// Random fluent over `alphabet` with disjoint, non-empty initiating set.
pub fn random_fluent<R: Rng>(rng: &mut R, name: &str, alphabet: &[EventLabel]) -> FluentDef {
    let mut pool: Vec<&EventLabel> = alphabet.iter().collect();
    pool.shuffle(rng);
    let ni = rng.gen_range(1..=2.min(pool.len()));
    let nt = rng.gen_range(0..=2.min(pool.len() - ni));
    FluentDef {
        name: name.to_string(),
        initiating: pool[..ni].iter().map(|e| (*e).clone()).collect(),
        terminating: pool[ni..ni + nt].iter().map(|e| (*e).clone()).collect(),
        initially: rng.gen_bool(0.2),
    }
}

/// Random formula of depth at most `depth` over the given atoms.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[Formula], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.05) {
            if rng.gen_bool(0.5) { Formula::True } else { Formula::False }
        } else {
            atoms.choose(rng).unwrap().clone()
        };
    }
    let sub = |rng: &mut R| random_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..11) {
        0 => Formula::not(sub(rng)),
        1 => Formula::next(sub(rng)),
        2 => Formula::eventually(sub(rng)),
        3 => Formula::always(sub(rng)),
        4 => Formula::and(sub(rng), sub(rng)),
        5 => Formula::or(sub(rng), sub(rng)),
        6 => Formula::implies(sub(rng), sub(rng)),
        7 => Formula::iff(sub(rng), sub(rng)),
        8 => Formula::until(sub(rng), sub(rng)),
        9 => Formula::weak_until(sub(rng), sub(rng)),
        _ => Formula::release(sub(rng), sub(rng)),
    }
}

// ---------------------------------------------------------------------------
// Exhaustive lasso oracle for LTSs whose only cycles are self-loops.

/// Every infinite run of such an LTS is a finite path into a state with a
/// self-loop, repeated forever. Returns `None` when the LTS has a longer
/// cycle or more than `cap` runs.
pub fn all_lassos(lts: &Lts, cap: usize) -> Option<Vec<(Vec<EventLabel>, Vec<EventLabel>)>> {
    let mut out = Vec::new();
    let mut on_path = vec![false; lts.num_states()];
    // (state, edge index, path labels)
    let mut stack: Vec<(StateId, usize)> = vec![(lts.initial(), 0)];
    let mut path: Vec<EventLabel> = Vec::new();
    on_path[lts.initial() as usize] = true;
    while let Some(&mut (s, ref mut i)) = stack.last_mut() {
        let succ = lts.successors(s);
        if *i == succ.len() {
            stack.pop();
            on_path[s as usize] = false;
            path.pop();
            continue;
        }
        let (l, t) = succ[*i];
        *i += 1;
        if t == s {
            out.push((path.clone(), vec![lts.label(l).clone()]));
            if out.len() > cap {
                return None;
            }
            continue;
        }
        if on_path[t as usize] {
            return None;
        }
        on_path[t as usize] = true;
        path.push(lts.label(l).clone());
        stack.push((t, 0));
    }
    Some(out)
}

/// Whether every run satisfies `formula`, by direct evaluation.
pub fn oracle_holds(
    lassos: &[(Vec<EventLabel>, Vec<EventLabel>)],
    fluents: &[FluentDef],
    formula: &Formula,
) -> bool {
    lassos.iter().all(|(p, c)| eval_on_lasso(formula, fluents, p, c))
}

/// Random fluents and assertions with unique names.
pub fn random_props(seed: u64) -> (Vec<FluentDef>, Vec<Assertion>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events: Vec<EventLabel> =
        ["a.start", "a.end", "b.start", "b.end", "sub.c.inst.end", "_terminate", "_deadlock"].map(EventLabel::from).to_vec();
    let fluents: Vec<FluentDef> = (0..rng.gen_range(0..4))
        .map(|k| {
            let mut pool = events.clone();
            pool.shuffle(&mut rng);
            let ni = rng.gen_range(1..=3);
            let nt = rng.gen_range(0..=3);
            FluentDef {
                name: format!("Fl{k}"),
                initiating: pool[..ni].iter().cloned().collect(),
                terminating: pool[ni..ni + nt].iter().cloned().collect(),
                initially: rng.gen_bool(0.5),
            }
        })
        .collect();
    let mut atoms: Vec<Formula> = events.iter().cloned().map(Formula::Event).collect();
    atoms.extend(fluents.iter().map(|f| Formula::Fluent(f.name.clone())));
    let assertions = (0..rng.gen_range(0..4))
        .map(|k| Assertion { name: format!("A{k}"), formula: random_formula(&mut rng, &atoms, 4) })
        .collect();
    (fluents, assertions)
}

