use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use super::eval::{Letter, LetterLasso};
use super::formula::Formula;

/// Negation normal form, interned. Children are indices into the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Nnf {
    True,
    False,
    Lit(usize, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

#[derive(Default)]
struct Table {
    atoms: Vec<Formula>,
    nodes: Vec<Nnf>,
    index: HashMap<Nnf, usize>,
}

impl Table {
    fn intern(&mut self, n: Nnf) -> usize {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        self.nodes.push(n);
        self.index.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn atom(&mut self, f: &Formula) -> usize {
        match self.atoms.iter().position(|a| a == f) {
            Some(i) => i,
            None => {
                self.atoms.push(f.clone());
                self.atoms.len() - 1
            }
        }
    }

    /// NNF of `f` when `positive`, of `!f` otherwise.
    fn nnf(&mut self, f: &Formula, positive: bool) -> usize {
        use Formula::*;
        let n = match (f, positive) {
            (True, true) | (False, false) => Nnf::True,
            (True, false) | (False, true) => Nnf::False,
            (Event(_) | Fluent(_) | Param(_), pol) => Nnf::Lit(self.atom(f), pol),
            (Not(a), pol) => return self.nnf(a, !pol),
            (Next(a), pol) => Nnf::Next(self.nnf(a, pol)),
            (And(a, b), true) | (Or(a, b), false) => Nnf::And(self.nnf(a, positive), self.nnf(b, positive)),
            (Or(a, b), true) | (And(a, b), false) => Nnf::Or(self.nnf(a, positive), self.nnf(b, positive)),
            (Implies(a, b), true) => Nnf::Or(self.nnf(a, false), self.nnf(b, true)),
            (Implies(a, b), false) => Nnf::And(self.nnf(a, true), self.nnf(b, false)),
            (Iff(a, b), pol) => {
                // (a && b) || (!a && !b), negated: (a && !b) || (!a && b)
                let (pa, na) = (self.nnf(a, true), self.nnf(a, false));
                let (pb, nb) = (self.nnf(b, true), self.nnf(b, false));
                let (l, r) = if pol {
                    (self.intern(Nnf::And(pa, pb)), self.intern(Nnf::And(na, nb)))
                } else {
                    (self.intern(Nnf::And(pa, nb)), self.intern(Nnf::And(na, pb)))
                };
                Nnf::Or(l, r)
            }
            (Eventually(a), true) => Nnf::Until(self.intern(Nnf::True), self.nnf(a, true)),
            (Eventually(a), false) => Nnf::Release(self.intern(Nnf::False), self.nnf(a, false)),
            (Always(a), true) => Nnf::Release(self.intern(Nnf::False), self.nnf(a, true)),
            (Always(a), false) => Nnf::Until(self.intern(Nnf::True), self.nnf(a, false)),
            (Until(a, b), true) => Nnf::Until(self.nnf(a, true), self.nnf(b, true)),
            (Until(a, b), false) => Nnf::Release(self.nnf(a, false), self.nnf(b, false)),
            (Release(a, b), true) => Nnf::Release(self.nnf(a, true), self.nnf(b, true)),
            (Release(a, b), false) => Nnf::Until(self.nnf(a, false), self.nnf(b, false)),
            // a W b == b R (a || b)
            (WeakUntil(a, b), true) => {
                let (pa, pb) = (self.nnf(a, true), self.nnf(b, true));
                let or = self.intern(Nnf::Or(pa, pb));
                Nnf::Release(pb, or)
            }
            // !(a W b) == !b U (!a && !b)
            (WeakUntil(a, b), false) => {
                let (na, nb) = (self.nnf(a, false), self.nnf(b, false));
                let and = self.intern(Nnf::And(na, nb));
                Nnf::Until(nb, and)
            }
        };
        self.intern(n)
    }
}

/// Literal on a Büchi state: atom index and polarity.
pub type Literal = (usize, bool);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiState {
    /// Literals that the letter read on entering this state must satisfy.
    pub label: Vec<Literal>,
    pub initial: bool,
    pub successors: Vec<usize>,
}

/// State-labelled generalized Büchi automaton.
///
/// A run reads letter `i` when entering its `i`-th state; the first state
/// must be initial. A run is accepting when it visits every accepting set
/// infinitely often.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    /// Event and fluent leaves referenced by literals.
    pub atoms: Vec<Formula>,
    pub states: Vec<BuchiState>,
    /// One membership vector per accepting set.
    pub accepting: Vec<Vec<bool>>,
}

const INIT: usize = usize::MAX;

struct Proto {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

struct Tableau<'a> {
    table: &'a Table,
    nodes: Vec<(BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)>,
    index: HashMap<(BTreeSet<usize>, BTreeSet<usize>), usize>,
}

impl Tableau<'_> {
    fn expand(&mut self, mut node: Proto) {
        let Some(&eta) = node.new.iter().next() else {
            let key = (node.old.clone(), node.next.clone());
            if let Some(&id) = self.index.get(&key) {
                self.nodes[id].0.extend(node.incoming);
                return;
            }
            let id = self.nodes.len();
            self.nodes.push((node.incoming, node.old, node.next.clone()));
            self.index.insert(key, id);
            self.expand(Proto {
                incoming: BTreeSet::from([id]),
                new: node.next,
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            });
            return;
        };
        node.new.remove(&eta);
        if node.old.contains(&eta) {
            return self.expand(node);
        }
        match self.table.nodes[eta] {
            Nnf::True => {
                node.old.insert(eta);
                self.expand(node)
            }
            Nnf::False => {}
            Nnf::Lit(a, pol) => {
                if let Some(&neg) = self.table.index.get(&Nnf::Lit(a, !pol)) {
                    if node.old.contains(&neg) {
                        return;
                    }
                }
                node.old.insert(eta);
                self.expand(node)
            }
            Nnf::And(a, b) => {
                node.old.insert(eta);
                for x in [a, b] {
                    if !node.old.contains(&x) {
                        node.new.insert(x);
                    }
                }
                self.expand(node)
            }
            Nnf::Next(a) => {
                node.old.insert(eta);
                node.next.insert(a);
                self.expand(node)
            }
            Nnf::Or(a, b) => self.split(node, eta, [a], [], [b]),
            // a U b: b now, or a now and a U b next
            Nnf::Until(a, b) => self.split(node, eta, [a], [eta], [b]),
            // a R b: b and a now, or b now and a R b next
            Nnf::Release(a, b) => self.split(node, eta, [b], [eta], [a, b]),
        }
    }

    fn split<const N1: usize, const X1: usize, const N2: usize>(
        &mut self,
        node: Proto,
        eta: usize,
        new1: [usize; N1],
        next1: [usize; X1],
        new2: [usize; N2],
    ) {
        let mut old = node.old;
        old.insert(eta);
        let fresh = |extra: &[usize]| -> BTreeSet<usize> {
            let mut s = node.new.clone();
            s.extend(extra.iter().filter(|x| !old.contains(x)));
            s
        };
        let first = Proto {
            incoming: node.incoming.clone(),
            new: fresh(&new1),
            old: old.clone(),
            next: node.next.iter().chain(&next1).copied().collect(),
        };
        let second = Proto { incoming: node.incoming, new: fresh(&new2), old: old.clone(), next: node.next };
        self.expand(first);
        self.expand(second);
    }
}

impl BuchiAutomaton {
    /// Tableau construction for the words satisfying `formula`.
    pub fn from_formula(formula: &Formula) -> Self {
        let mut table = Table::default();
        let root = table.nnf(formula, true);
        let mut tab = Tableau { table: &table, nodes: Vec::new(), index: HashMap::new() };
        tab.expand(Proto {
            incoming: BTreeSet::from([INIT]),
            new: BTreeSet::from([root]),
            old: BTreeSet::new(),
            next: BTreeSet::new(),
        });
        let nodes = tab.nodes;

        let mut states: Vec<BuchiState> = nodes
            .iter()
            .map(|(incoming, old, _)| BuchiState {
                label: old
                    .iter()
                    .filter_map(|&x| match table.nodes[x] {
                        Nnf::Lit(a, pol) => Some((a, pol)),
                        _ => None,
                    })
                    .collect(),
                initial: incoming.contains(&INIT),
                successors: Vec::new(),
            })
            .collect();
        for (q, (incoming, _, _)) in nodes.iter().enumerate() {
            for &p in incoming {
                if p != INIT {
                    states[p].successors.push(q);
                }
            }
        }
        for s in &mut states {
            s.successors.sort_unstable();
            s.successors.dedup();
        }

        let accepting = table
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(u, n)| match *n {
                Nnf::Until(_, b) => Some(
                    nodes.iter().map(|(_, old, _)| !old.contains(&u) || old.contains(&b)).collect(),
                ),
                _ => None,
            })
            .collect();

        BuchiAutomaton { atoms: table.atoms, states, accepting }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Counter update for on-the-fly degeneralization: leaving state `q`
    /// with counter `c`.
    pub fn next_counter(&self, q: usize, c: usize) -> usize {
        let k = self.accepting.len();
        if k > 0 && self.accepting[c][q] {
            (c + 1) % k
        } else {
            c
        }
    }

    /// Whether `(q, c)` is accepting in the degeneralized automaton.
    pub fn is_accepting(&self, q: usize, c: usize) -> bool {
        self.accepting.is_empty() || (c == 0 && self.accepting[0][q])
    }

    fn letter_matches(&self, q: usize, letter: &Letter, names: &[String]) -> bool {
        self.states[q].label.iter().all(|&(a, pol)| {
            let v = match &self.atoms[a] {
                Formula::Event(e) => &letter.event == e,
                Formula::Fluent(n) => names.iter().position(|x| x == n).is_some_and(|k| letter.fluents[k]),
                _ => false,
            };
            v == pol
        })
    }

    /// Whether some accepting run reads the given letter lasso.
    pub fn accepts_lasso(&self, lasso: &LetterLasso) -> bool {
        let p = lasso.prefix.len();
        let len = p + lasso.cycle.len();
        let letter = |i: usize| if i < p { &lasso.prefix[i] } else { &lasso.cycle[i - p] };
        let succ = |i: usize| if i + 1 == len { p } else { i + 1 };
        let post = |(i, q, c): (usize, usize, usize)| -> Vec<(usize, usize, usize)> {
            let j = succ(i);
            let c2 = self.next_counter(q, c);
            self.states[q]
                .successors
                .iter()
                .filter(|&&q2| self.letter_matches(q2, letter(j), &lasso.names))
                .map(|&q2| (j, q2, c2))
                .collect()
        };
        let init: Vec<_> = (0..self.states.len())
            .filter(|&q| self.states[q].initial && self.letter_matches(q, letter(0), &lasso.names))
            .map(|q| (0, q, 0))
            .collect();
        let mut reach: HashSet<_> = init.iter().copied().collect();
        let mut queue: VecDeque<_> = init.into();
        while let Some(x) = queue.pop_front() {
            for y in post(x) {
                if reach.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        reach.iter().filter(|&&(_, q, c)| self.is_accepting(q, c)).any(|&x| {
            let mut seen = HashSet::new();
            let mut queue: VecDeque<_> = post(x).into();
            while let Some(y) = queue.pop_front() {
                if y == x {
                    return true;
                }
                if seen.insert(y) {
                    queue.extend(post(y));
                }
            }
            false
        })
    }
}
