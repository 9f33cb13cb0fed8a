use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use super::compile::{CompiledNet, Guard, NetTransition};
use super::lts::{LabelId, Lts, StateId};
use super::Marking;
use crate::model::{EventLabel, DEADLOCK, TERMINATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("state limit of {limit} exceeded")]
    StateLimitExceeded { limit: usize },
    #[error("place {place} exceeds bound {bound}")]
    BoundExceeded {
        place: String,
        bound: u16,
        /// Firing sequence from the initial marking whose last step overflows.
        witness: Vec<EventLabel>,
    },
}

impl CompiledNet {
    /// Decides the OR-join rule at `m`: some input is marked and no marking
    /// reachable without firing this join marks a strict superset of those
    /// inputs. The exclusion search ignores other OR-join guards and skips
    /// firings that would overflow a place.
    pub fn or_join_enabled(&self, or_join: usize, m: &Marking) -> bool {
        let marked = self.marked_inputs(or_join, m);
        if marked == 0 {
            return false;
        }
        let all = (1u64 << self.or_joins[or_join].inputs.len()) - 1;
        if marked == all {
            return true;
        }
        let excluded: HashSet<usize> = self.or_joins[or_join].variants.iter().copied().collect();
        let mut seen: HashSet<Marking> = HashSet::from([m.clone()]);
        let mut queue = VecDeque::from([m.clone()]);
        while let Some(cur) = queue.pop_front() {
            for (i, t) in self.transitions.iter().enumerate() {
                if excluded.contains(&i) || !self.covers(t, &cur) {
                    continue;
                }
                let Ok(next) = self.fire(t, &cur) else { continue };
                let reached = self.marked_inputs(or_join, &next);
                if reached & marked == marked && reached != marked {
                    return false;
                }
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        true
    }

    /// For an OR-join variant: its consumed places must be exactly the
    /// marked inputs.
    fn variant_matches(&self, or_join: usize, t: &NetTransition, m: &Marking) -> bool {
        let inputs = &self.or_joins[or_join].inputs;
        let mut mask = 0u64;
        for &(p, _) in &t.consume {
            if let Some(i) = inputs.iter().position(|&x| x == p) {
                mask |= 1 << i;
            }
        }
        mask == self.marked_inputs(or_join, m)
    }
}

struct Explorer<'a> {
    net: &'a CompiledNet,
    label_ids: Vec<LabelId>,
    or_memo: HashMap<(usize, Marking), bool>,
}

impl Explorer<'_> {
    fn enabled(&mut self, t: &NetTransition, m: &Marking) -> bool {
        if !self.net.covers(t, m) {
            return false;
        }
        match t.guard {
            Guard::None => true,
            Guard::OrJoin(j) => {
                if !self.net.variant_matches(j, t, m) {
                    return false;
                }
                if let Some(&v) = self.or_memo.get(&(j, m.clone())) {
                    return v;
                }
                let v = self.net.or_join_enabled(j, m);
                self.or_memo.insert((j, m.clone()), v);
                v
            }
        }
    }
}

/// Breadth-first construction of the reachable marking graph.
///
/// Final markings (one token on the root output place, nothing else) get a
/// single `_terminate` self-loop; other markings without enabled
/// transitions get a `_deadlock` self-loop.
pub fn build_lts(net: &CompiledNet, limits: Limits) -> Result<Lts, BuildError> {
    let labels: Vec<EventLabel> = net.alphabet.iter().cloned().collect();
    let lookup = |l: &EventLabel| labels.binary_search(l).expect("transition label in alphabet") as LabelId;
    let label_ids: Vec<LabelId> = net.transitions.iter().map(|t| lookup(&t.label)).collect();
    let terminate = lookup(&EventLabel::from(TERMINATE));
    let deadlock = lookup(&EventLabel::from(DEADLOCK));

    let mut ex = Explorer { net, label_ids, or_memo: HashMap::new() };
    let mut index: HashMap<Marking, StateId> = HashMap::new();
    let mut markings: Vec<Marking> = Vec::new();
    let mut parent: Vec<Option<(StateId, LabelId)>> = Vec::new();
    let mut edges: Vec<Vec<(LabelId, StateId)>> = Vec::new();
    let mut finals: Vec<bool> = Vec::new();

    index.insert(net.initial.clone(), 0);
    markings.push(net.initial.clone());
    parent.push(None);

    let witness = |parent: &[Option<(StateId, LabelId)>], mut s: StateId, last: LabelId| {
        let mut path = vec![labels[last as usize].clone()];
        while let Some((p, l)) = parent[s as usize] {
            path.push(labels[l as usize].clone());
            s = p;
        }
        path.reverse();
        path
    };

    let mut head = 0usize;
    while head < markings.len() {
        let s = head as StateId;
        let m = markings[head].clone();
        head += 1;

        let is_final = net.is_final(&m);
        let mut succ: Vec<(LabelId, Marking)> = Vec::new();
        if !is_final {
            for (i, t) in net.transitions.iter().enumerate() {
                if !ex.enabled(t, &m) {
                    continue;
                }
                match net.fire(t, &m) {
                    Ok(next) => succ.push((ex.label_ids[i], next)),
                    Err(p) => {
                        return Err(BuildError::BoundExceeded {
                            place: net.places[p].name.clone(),
                            bound: net.bound,
                            witness: witness(&parent, s, ex.label_ids[i]),
                        })
                    }
                }
            }
        }
        succ.sort_unstable();
        succ.dedup();

        let mut out = Vec::with_capacity(succ.len().max(1));
        if is_final {
            out.push((terminate, s));
        } else if succ.is_empty() {
            out.push((deadlock, s));
        }
        for (l, next) in succ {
            let t = match index.get(&next) {
                Some(&t) => t,
                None => {
                    let t = markings.len() as StateId;
                    if markings.len() >= limits.max_states {
                        return Err(BuildError::StateLimitExceeded { limit: limits.max_states });
                    }
                    index.insert(next.clone(), t);
                    markings.push(next);
                    parent.push(Some((s, l)));
                    t
                }
            };
            out.push((l, t));
        }
        edges.push(out);
        finals.push(is_final);
    }
    Ok(Lts::from_parts(labels, edges, finals))
}
