use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write;

use crate::model::{EventLabel, DEADLOCK};
#[cfg(test)]
use crate::model::TERMINATE;

pub type StateId = u32;
pub type LabelId = u32;

/// Explicit labelled transition system. State 0 is initial.
///
/// Labels are interned against the sorted alphabet, so ordering edges by
/// label id orders them lexicographically by label text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    labels: Vec<EventLabel>,
    edges: Vec<Vec<(LabelId, StateId)>>,
    finals: Vec<bool>,
}

impl Lts {
    /// Builds an LTS from an explicit edge list. Labels not in `alphabet`
    /// are added to it. Duplicate edges collapse.
    pub fn from_edges(
        alphabet: impl IntoIterator<Item = EventLabel>,
        num_states: usize,
        edges: impl IntoIterator<Item = (StateId, EventLabel, StateId)>,
        finals: impl IntoIterator<Item = StateId>,
    ) -> Self {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut alpha: BTreeSet<EventLabel> = alphabet.into_iter().collect();
        alpha.extend(edges.iter().map(|(_, l, _)| l.clone()));
        let labels: Vec<EventLabel> = alpha.into_iter().collect();
        let mut adj = vec![Vec::new(); num_states];
        for (s, l, t) in edges {
            let id = labels.binary_search(&l).expect("label interned") as LabelId;
            adj[s as usize].push((id, t));
        }
        for out in &mut adj {
            out.sort_unstable();
            out.dedup();
        }
        let mut fin = vec![false; num_states];
        for f in finals {
            fin[f as usize] = true;
        }
        Lts { labels, edges: adj, finals: fin }
    }

    pub(crate) fn from_parts(labels: Vec<EventLabel>, edges: Vec<Vec<(LabelId, StateId)>>, finals: Vec<bool>) -> Self {
        Lts { labels, edges, finals }
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    /// Edge count, self-loops included.
    pub fn num_transitions(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn alphabet(&self) -> &[EventLabel] {
        &self.labels
    }

    pub fn label(&self, id: LabelId) -> &EventLabel {
        &self.labels[id as usize]
    }

    pub fn label_id(&self, label: &str) -> Option<LabelId> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| i as LabelId)
    }

    /// Outgoing edges of `s` in canonical order.
    pub fn successors(&self, s: StateId) -> &[(LabelId, StateId)] {
        &self.edges[s as usize]
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals[s as usize]
    }

    pub fn final_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.finals.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i as StateId)
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateId, &EventLabel, StateId)> + '_ {
        self.edges.iter().enumerate().flat_map(move |(s, out)| {
            out.iter().map(move |&(l, t)| (s as StateId, &self.labels[l as usize], t))
        })
    }

    /// Follows `events` from `from`. Returns the reached state if every
    /// event is enabled in turn. Nondeterminism is resolved by search.
    pub fn replay(&self, from: StateId, events: &[EventLabel]) -> Vec<StateId> {
        let mut current: BTreeSet<StateId> = BTreeSet::from([from]);
        for e in events {
            let Some(l) = self.label_id(e.as_str()) else { return Vec::new() };
            current = current
                .iter()
                .flat_map(|&s| self.successors(s).iter().filter(|(x, _)| *x == l).map(|&(_, t)| t))
                .collect();
            if current.is_empty() {
                break;
            }
        }
        current.into_iter().collect()
    }

    /// True iff `prefix . cycle^w` is a path of this LTS: the cycle must
    /// lead from some state reached by the prefix back to itself.
    pub fn accepts_lasso(&self, prefix: &[EventLabel], cycle: &[EventLabel]) -> bool {
        if cycle.is_empty() {
            return false;
        }
        self.replay(self.initial(), prefix)
            .into_iter()
            .any(|s| self.replay(s, cycle).contains(&s))
    }

    /// Line-oriented dump: `src<TAB>label<TAB>dst`, states in index order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (s, l, t) in self.edges() {
            let _ = writeln!(out, "{s}\t{l}\t{t}");
        }
        out
    }

    /// All maximal event traces up to `len` events, as a set.
    pub fn traces(&self, len: usize) -> BTreeSet<Vec<String>> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(StateId, Vec<String>)> = vec![(self.initial(), Vec::new())];
        while let Some((s, trace)) = stack.pop() {
            if trace.len() == len || self.successors(s).is_empty() {
                out.insert(trace);
                continue;
            }
            for &(l, t) in self.successors(s) {
                let mut next = trace.clone();
                next.push(self.label(l).to_string());
                stack.push((t, next));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deadlock {
    pub state: StateId,
    /// One shortest event path from the initial state.
    pub path: Vec<EventLabel>,
}

/// States whose only edge is the `_deadlock` self-loop, with a shortest
/// witness path to each.
pub fn find_deadlocks(lts: &Lts) -> Vec<Deadlock> {
    let Some(dl) = lts.label_id(DEADLOCK) else { return Vec::new() };
    let n = lts.num_states();
    if n == 0 {
        return Vec::new();
    }
    let mut parent: Vec<Option<(StateId, LabelId)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([lts.initial()]);
    seen[0] = true;
    while let Some(s) = queue.pop_front() {
        order.push(s);
        for &(l, t) in lts.successors(s) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, l));
                queue.push_back(t);
            }
        }
    }
    order
        .into_iter()
        .filter(|&s| lts.successors(s) == [(dl, s)])
        .map(|s| {
            let mut path = Vec::new();
            let mut cur = s;
            while let Some((p, l)) = parent[cur as usize] {
                path.push(lts.label(l).clone());
                cur = p;
            }
            path.reverse();
            Deadlock { state: s, path }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> EventLabel {
        EventLabel::from(s)
    }

    fn chain() -> Lts {
        Lts::from_edges(
            [],
            3,
            [(0, l("t.start"), 1), (1, l("t.end"), 2), (2, l(TERMINATE), 2)],
            [2],
        )
    }

    #[test]
    fn dump_format() {
        assert_eq!(chain().dump(), "0\tt.start\t1\n1\tt.end\t2\n2\t_terminate\t2\n");
    }

    #[test]
    fn lasso_replay() {
        let lts = chain();
        assert!(lts.accepts_lasso(&[l("t.start"), l("t.end")], &[l(TERMINATE)]));
        assert!(!lts.accepts_lasso(&[l("t.start")], &[l("t.end")]));
        assert!(!lts.accepts_lasso(&[], &[]));
    }

    #[test]
    fn no_deadlocks_in_chain() {
        assert!(find_deadlocks(&chain()).is_empty());
    }

    #[test]
    fn deadlock_with_path() {
        let lts = Lts::from_edges(
            [],
            3,
            [(0, l("a.start"), 1), (1, l("a.end"), 2), (2, l(DEADLOCK), 2)],
            [],
        );
        let d = find_deadlocks(&lts);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].state, 2);
        assert_eq!(d[0].path, vec![l("a.start"), l("a.end")]);
    }
}
