use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::buchi::BuchiAutomaton;
use super::eval::eval_on_lasso;
use super::fluent::{FluentDef, Tracker, MAX_TRACKED_FLUENTS};
use super::formula::Formula;
use crate::encoder::{LabelId, Lts, StateId};
use crate::model::EventLabel;

/// Outcome of checking one formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "VerdictJson", try_from = "VerdictJson")]
pub enum Verdict {
    Holds,
    /// `prefix . cycle^w` is a run of the model that falsifies the formula.
    Violation { prefix: Vec<EventLabel>, cycle: Vec<EventLabel> },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Serialize, Deserialize)]
struct VerdictJson {
    result: String,
    prefix: Vec<EventLabel>,
    cycle: Vec<EventLabel>,
}

impl From<Verdict> for VerdictJson {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Holds => VerdictJson { result: "holds".into(), prefix: vec![], cycle: vec![] },
            Verdict::Violation { prefix, cycle } => VerdictJson { result: "violation".into(), prefix, cycle },
        }
    }
}

impl TryFrom<VerdictJson> for Verdict {
    type Error = String;

    fn try_from(v: VerdictJson) -> Result<Self, String> {
        match v.result.as_str() {
            "holds" => Ok(Verdict::Holds),
            "violation" if !v.cycle.is_empty() => Ok(Verdict::Violation { prefix: v.prefix, cycle: v.cycle }),
            "violation" => Err("violation with empty cycle".into()),
            other => Err(format!("unknown result {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown fluent {0}")]
    UnknownFluent(String),
    #[error("unknown event {0}")]
    UnknownEvent(EventLabel),
    #[error("unbound placeholder ${0}")]
    UnboundPlaceholder(String),
    #[error("formula uses {0} fluents; at most {MAX_TRACKED_FLUENTS} are supported")]
    TooManyFluents(usize),
    #[error("product state limit of {limit} exceeded")]
    ProductLimitExceeded { limit: usize },
    #[error("internal error: counterexample failed verification")]
    UnsoundCounterexample { prefix: Vec<EventLabel>, cycle: Vec<EventLabel> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_product_states: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { max_product_states: 5_000_000 }
    }
}

/// Letter constraint of one Büchi state, resolved against the LTS.
#[derive(Debug, Clone, Default)]
struct Constraint {
    unsat: bool,
    event: Option<LabelId>,
    not_events: Vec<LabelId>,
    on: u64,
    off: u64,
}

impl Constraint {
    fn admits(&self, label: LabelId, v: u64) -> bool {
        !self.unsat
            && self.event.map_or(true, |e| e == label)
            && !self.not_events.contains(&label)
            && v & self.on == self.on
            && v & self.off == 0
    }
}

const INIT_Q: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    s: StateId,
    v: u64,
    q: u32,
    c: u32,
}

struct Product<'a> {
    lts: &'a Lts,
    tracker: Tracker,
    buchi: BuchiAutomaton,
    constraints: Vec<Constraint>,
    initial_q: Vec<u32>,
    index: HashMap<Key, u32>,
    keys: Vec<Key>,
    limit: usize,
}

impl Product<'_> {
    fn intern(&mut self, k: Key) -> Result<u32, CheckError> {
        if let Some(&id) = self.index.get(&k) {
            return Ok(id);
        }
        if self.keys.len() >= self.limit {
            return Err(CheckError::ProductLimitExceeded { limit: self.limit });
        }
        let id = self.keys.len() as u32;
        self.keys.push(k);
        self.index.insert(k, id);
        Ok(id)
    }

    fn accepting(&self, id: u32) -> bool {
        let k = self.keys[id as usize];
        k.q != INIT_Q && self.buchi.is_accepting(k.q as usize, k.c as usize)
    }

    /// Successors in canonical order: LTS edge order, then Büchi state order.
    fn post(&mut self, id: u32) -> Result<Vec<(LabelId, u32)>, CheckError> {
        let k = self.keys[id as usize];
        let (qs, c2) = if k.q == INIT_Q {
            (self.initial_q.clone(), 0)
        } else {
            let q = k.q as usize;
            let succ = self.buchi.states[q].successors.iter().map(|&x| x as u32).collect();
            (succ, self.buchi.next_counter(q, k.c as usize) as u32)
        };
        let mut out = Vec::new();
        for &(l, t) in self.lts.successors(k.s) {
            let v = self.tracker.step(k.v, l);
            for &q2 in &qs {
                if self.constraints[q2 as usize].admits(l, v) {
                    out.push((l, self.intern(Key { s: t, v, q: q2, c: c2 })?));
                }
            }
        }
        Ok(out)
    }
}

struct Frame {
    id: u32,
    succ: Vec<(LabelId, u32)>,
    next: usize,
}

impl Frame {
    fn last_label(&self) -> LabelId {
        self.succ[self.next - 1].0
    }
}

/// An accepting lasso in the product, as product states and edge labels.
struct ProductLasso {
    prefix: Vec<LabelId>,
    cycle_states: Vec<u32>,
    cycle: Vec<LabelId>,
}

const WHITE: u8 = 0;
const CYAN: u8 = 1;
const BLUE: u8 = 2;

/// Nested depth-first search with cyan-state cycle detection.
fn nested_dfs(p: &mut Product, init: u32) -> Result<Option<ProductLasso>, CheckError> {
    let mut color: Vec<u8> = Vec::new();
    let mut red: Vec<bool> = Vec::new();
    let grow = |v: &mut Vec<u8>, r: &mut Vec<bool>, n: usize| {
        if v.len() < n {
            v.resize(n, WHITE);
            r.resize(n, false);
        }
    };
    let lasso_through = |blue: &[Frame], target: u32, tail: Vec<(LabelId, u32)>| {
        let at = blue.iter().position(|f| f.id == target).expect("cyan state on blue stack");
        let prefix = blue[..at].iter().map(Frame::last_label).collect();
        let mut cycle_states: Vec<u32> = blue[at..].iter().map(|f| f.id).collect();
        let mut cycle: Vec<LabelId> = blue[at..blue.len() - 1].iter().map(Frame::last_label).collect();
        for (l, s) in tail {
            cycle.push(l);
            cycle_states.push(s);
        }
        cycle_states.pop();
        ProductLasso { prefix, cycle_states, cycle }
    };

    grow(&mut color, &mut red, p.keys.len());
    color[init as usize] = CYAN;
    let mut blue = vec![Frame { id: init, succ: p.post(init)?, next: 0 }];
    while let Some(top) = blue.last_mut() {
        if top.next < top.succ.len() {
            let (l, t) = top.succ[top.next];
            top.next += 1;
            let s = top.id;
            grow(&mut color, &mut red, p.keys.len());
            if color[t as usize] == CYAN && (p.accepting(s) || p.accepting(t)) {
                return Ok(Some(lasso_through(&blue, t, vec![(l, t)])));
            }
            if color[t as usize] == WHITE {
                color[t as usize] = CYAN;
                let succ = p.post(t)?;
                blue.push(Frame { id: t, succ, next: 0 });
            }
            continue;
        }
        let s = top.id;
        if p.accepting(s) {
            // red search from the accepting seed for any cyan state
            let mut stack = vec![Frame { id: s, succ: p.post(s)?, next: 0 }];
            while let Some(rt) = stack.last_mut() {
                if rt.next == rt.succ.len() {
                    stack.pop();
                    continue;
                }
                let (l, t) = rt.succ[rt.next];
                rt.next += 1;
                grow(&mut color, &mut red, p.keys.len());
                if color[t as usize] == CYAN {
                    let mut tail: Vec<(LabelId, u32)> =
                        stack[1..].iter().map(|f| f.id).zip(stack.iter()).map(|(id, f)| (f.last_label(), id)).collect();
                    tail.push((l, t));
                    return Ok(Some(lasso_through(&blue, t, tail)));
                }
                if !red[t as usize] {
                    red[t as usize] = true;
                    let succ = p.post(t)?;
                    stack.push(Frame { id: t, succ, next: 0 });
                }
            }
        }
        color[s as usize] = BLUE;
        blue.pop();
    }
    Ok(None)
}

/// Shortest product path from `init` to any cycle state; the cycle is
/// rotated to start where the path lands.
fn reanchor(p: &mut Product, init: u32, lasso: ProductLasso) -> ProductLasso {
    let targets: HashMap<u32, usize> = lasso.cycle_states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut parent: HashMap<u32, Option<(u32, LabelId)>> = HashMap::from([(init, None)]);
    let mut queue = VecDeque::from([init]);
    while let Some(x) = queue.pop_front() {
        if let Some(&at) = targets.get(&x) {
            let mut prefix = Vec::new();
            let mut cur = x;
            while let Some(Some((prev, l))) = parent.get(&cur) {
                prefix.push(*l);
                cur = *prev;
            }
            prefix.reverse();
            if prefix.len() > lasso.prefix.len() {
                break;
            }
            let mut cycle = lasso.cycle.clone();
            cycle.rotate_left(at);
            let mut cycle_states = lasso.cycle_states.clone();
            cycle_states.rotate_left(at);
            return ProductLasso { prefix, cycle_states, cycle };
        }
        let Ok(succ) = p.post(x) else { break };
        for (l, t) in succ {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(t) {
                e.insert(Some((x, l)));
                queue.push_back(t);
            }
        }
    }
    lasso
}

/// Rewrites `prefix . cycle^w` into a shorter presentation of the same word,
/// keeping only forms that still close a loop in the LTS.
fn tighten(lts: &Lts, mut prefix: Vec<EventLabel>, mut cycle: Vec<EventLabel>) -> (Vec<EventLabel>, Vec<EventLabel>) {
    while prefix.last().is_some() && prefix.last() == cycle.last() {
        let mut rotated = cycle.clone();
        rotated.rotate_right(1);
        let shorter = &prefix[..prefix.len() - 1];
        if !lts.accepts_lasso(shorter, &rotated) {
            break;
        }
        prefix.pop();
        cycle = rotated;
    }
    for period in 1..cycle.len() {
        if cycle.len() % period == 0
            && (period..cycle.len()).all(|i| cycle[i] == cycle[i - period])
            && lts.accepts_lasso(&prefix, &cycle[..period])
        {
            cycle.truncate(period);
            break;
        }
    }
    (prefix, cycle)
}

fn resolve(
    lts: &Lts,
    fluents: &[FluentDef],
    formula: &Formula,
) -> Result<Vec<FluentDef>, CheckError> {
    if let Some(p) = formula.params().into_iter().next() {
        return Err(CheckError::UnboundPlaceholder(p.to_string()));
    }
    for e in formula.events() {
        if lts.label_id(e.as_str()).is_none() {
            return Err(CheckError::UnknownEvent(e.clone()));
        }
    }
    let used = formula.fluents();
    if used.len() > MAX_TRACKED_FLUENTS {
        return Err(CheckError::TooManyFluents(used.len()));
    }
    used.into_iter()
        .map(|n| {
            fluents
                .iter()
                .find(|f| f.name == n)
                .cloned()
                .ok_or_else(|| CheckError::UnknownFluent(n.to_string()))
        })
        .collect()
}

/// Model-checks `formula` on every infinite run of `lts`.
///
/// Searches the product of the LTS, the fluent tracker and a Büchi
/// automaton for the negated formula. A violation is confirmed by replay
/// and by direct evaluation before it is returned.
pub fn check(lts: &Lts, fluents: &[FluentDef], formula: &Formula, opts: CheckOptions) -> Result<Verdict, CheckError> {
    let used = resolve(lts, fluents, formula)?;
    let refs: Vec<&FluentDef> = used.iter().collect();
    let tracker = Tracker::new(&refs, lts);
    let buchi = BuchiAutomaton::from_formula(&Formula::not(formula.clone()));

    let constraints = buchi
        .states
        .iter()
        .map(|st| {
            let mut c = Constraint::default();
            for &(a, pol) in &st.label {
                match &buchi.atoms[a] {
                    Formula::Event(e) => {
                        let l = lts.label_id(e.as_str()).expect("resolved event");
                        if pol {
                            if c.event.is_some_and(|x| x != l) {
                                c.unsat = true;
                            }
                            c.event = Some(l);
                        } else {
                            c.not_events.push(l);
                        }
                    }
                    Formula::Fluent(n) => {
                        let bit = 1u64 << tracker.bit(n).expect("resolved fluent");
                        if pol {
                            c.on |= bit;
                        } else {
                            c.off |= bit;
                        }
                    }
                    _ => c.unsat = true,
                }
            }
            c
        })
        .collect();
    let initial_q = (0..buchi.states.len()).filter(|&q| buchi.states[q].initial).map(|q| q as u32).collect();

    let mut product = Product {
        lts,
        tracker,
        buchi,
        constraints,
        initial_q,
        index: HashMap::new(),
        keys: Vec::new(),
        limit: opts.max_product_states.max(1),
    };
    let init_key = Key { s: lts.initial(), v: product.tracker.initial(), q: INIT_Q, c: 0 };
    let init = product.intern(init_key)?;
    let Some(lasso) = nested_dfs(&mut product, init)? else {
        return Ok(Verdict::Holds);
    };
    let lasso = reanchor(&mut product, init, lasso);
    let names = |ls: &[LabelId]| ls.iter().map(|&l| lts.label(l).clone()).collect::<Vec<_>>();
    let (prefix, cycle) = tighten(lts, names(&lasso.prefix), names(&lasso.cycle));
    if !lts.accepts_lasso(&prefix, &cycle) || eval_on_lasso(formula, &used, &prefix, &cycle) {
        return Err(CheckError::UnsoundCounterexample { prefix, cycle });
    }
    Ok(Verdict::Violation { prefix, cycle })
}
