use std::collections::BTreeMap;

use super::fluent::FluentDef;
use super::formula::Formula;
use crate::model::EventLabel;

/// One position of a word: the event that occurs and the fluents that hold
/// once it has taken effect.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Letter {
    pub event: EventLabel,
    /// Values of the observed fluents, in the order they were requested.
    pub fluents: Vec<bool>,
}

/// An ultimately periodic word of letters: `prefix . cycle^w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetterLasso {
    pub names: Vec<String>,
    pub prefix: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

/// Value of `fl` at position `i` of `events`, straight from the definition:
/// initiated at some `j <= i` and not terminated in `(j, i]`, or initially
/// true and not terminated in `[0, i]`.
fn holds_at(fl: &FluentDef, events: &[&EventLabel], i: usize) -> bool {
    for k in (0..=i).rev() {
        if fl.initiating.contains(events[k]) {
            return true;
        }
        if fl.terminating.contains(events[k]) {
            return false;
        }
    }
    fl.initially
}

/// Computes the fluent valuation along `prefix . cycle^w` and folds it into
/// an exact letter lasso. The cycle is unrolled until the valuation at the
/// start of a copy repeats.
///
/// `names` selects which fluents are observed; names without a definition
/// are constantly false.
pub fn letter_lasso(
    names: &[String],
    fluents: &[FluentDef],
    prefix: &[EventLabel],
    cycle: &[EventLabel],
) -> LetterLasso {
    assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
    let defs: Vec<Option<&FluentDef>> =
        names.iter().map(|n| fluents.iter().find(|f| &f.name == n)).collect();
    let mut events: Vec<&EventLabel> = prefix.iter().collect();
    let valuation_before = |events: &[&EventLabel]| -> Vec<bool> {
        defs.iter()
            .map(|d| match d {
                None => false,
                Some(fl) if events.is_empty() => fl.initially,
                Some(fl) => holds_at(fl, events, events.len() - 1),
            })
            .collect()
    };
    let mut seen: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let (start, end) = loop {
        let copy_start = events.len();
        let v = valuation_before(&events);
        if let Some(&earlier) = seen.get(&v) {
            break (earlier, copy_start);
        }
        seen.insert(v, copy_start);
        events.extend(cycle.iter());
    };
    let letters: Vec<Letter> = (0..end)
        .map(|i| Letter {
            event: events[i].clone(),
            fluents: defs.iter().map(|d| d.is_some_and(|fl| holds_at(fl, &events, i))).collect(),
        })
        .collect();
    LetterLasso {
        names: names.to_vec(),
        prefix: letters[..start].to_vec(),
        cycle: letters[start..end].to_vec(),
    }
}

/// Evaluates `formula` at position 0 of a letter lasso.
pub fn eval_letters(formula: &Formula, lasso: &LetterLasso) -> bool {
    let p = lasso.prefix.len();
    let len = p + lasso.cycle.len();
    let letter = |i: usize| if i < p { &lasso.prefix[i] } else { &lasso.cycle[i - p] };
    let succ = |i: usize| if i + 1 == len { p } else { i + 1 };
    let ctx = Ctx { len, letter: &letter, succ: &succ, names: &lasso.names };
    ctx.sat(formula)[0]
}

struct Ctx<'a> {
    len: usize,
    letter: &'a dyn Fn(usize) -> &'a Letter,
    succ: &'a dyn Fn(usize) -> usize,
    names: &'a [String],
}

impl Ctx<'_> {
    /// Truth value of `f` at every position of the folded word.
    fn sat(&self, f: &Formula) -> Vec<bool> {
        use Formula::*;
        let n = self.len;
        match f {
            True => vec![true; n],
            False => vec![false; n],
            Event(e) => (0..n).map(|i| &(self.letter)(i).event == e).collect(),
            Fluent(name) => match self.names.iter().position(|x| x == name) {
                Some(k) => (0..n).map(|i| (self.letter)(i).fluents[k]).collect(),
                None => vec![false; n],
            },
            Param(_) => vec![false; n],
            Not(a) => self.sat(a).into_iter().map(|x| !x).collect(),
            Next(a) => {
                let a = self.sat(a);
                (0..n).map(|i| a[(self.succ)(i)]).collect()
            }
            And(a, b) => zip(self.sat(a), self.sat(b), |x, y| x && y),
            Or(a, b) => zip(self.sat(a), self.sat(b), |x, y| x || y),
            Implies(a, b) => zip(self.sat(a), self.sat(b), |x, y| !x || y),
            Iff(a, b) => zip(self.sat(a), self.sat(b), |x, y| x == y),
            Eventually(a) => self.fixpoint(&vec![true; n], &self.sat(a), false),
            Always(a) => self.fixpoint(&self.sat(a), &vec![false; n], true),
            Until(a, b) => self.fixpoint(&self.sat(a), &self.sat(b), false),
            WeakUntil(a, b) => self.fixpoint(&self.sat(a), &self.sat(b), true),
            // a R b  ==  !(!a U !b)
            Release(a, b) => {
                let na: Vec<bool> = self.sat(a).into_iter().map(|x| !x).collect();
                let nb: Vec<bool> = self.sat(b).into_iter().map(|x| !x).collect();
                self.fixpoint(&na, &nb, false).into_iter().map(|x| !x).collect()
            }
        }
    }

    /// Solves `x[i] = b[i] || (a[i] && x[succ i])`, least or greatest.
    fn fixpoint(&self, a: &[bool], b: &[bool], greatest: bool) -> Vec<bool> {
        let mut x = vec![greatest; self.len];
        loop {
            let mut changed = false;
            for i in (0..self.len).rev() {
                let v = b[i] || (a[i] && x[(self.succ)(i)]);
                if v != x[i] {
                    x[i] = v;
                    changed = true;
                }
            }
            if !changed {
                return x;
            }
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Truth of `formula` on the infinite word `prefix . cycle^w`.
///
/// Fluents referenced by the formula but missing from `fluents` are false
/// everywhere. Panics if `cycle` is empty.
pub fn eval_on_lasso(formula: &Formula, fluents: &[FluentDef], prefix: &[EventLabel], cycle: &[EventLabel]) -> bool {
    let names: Vec<String> = formula.fluents().into_iter().map(str::to_string).collect();
    eval_letters(formula, &letter_lasso(&names, fluents, prefix, cycle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fltl::parse_formula;

    fn ev(xs: &[&str]) -> Vec<EventLabel> {
        xs.iter().map(|s| EventLabel::from(*s)).collect()
    }

    fn some_book() -> FluentDef {
        FluentDef::new("SomeBook", ["flight.start", "hotel.start", "car.start"], ["pay.end"])
    }

    #[test]
    fn fluent_positions() {
        let sb = some_book();
        let w = ev(&["register.start", "register.end", "flight.start"]);
        let refs: Vec<&EventLabel> = w.iter().collect();
        assert!(!holds_at(&sb, &refs, 0));
        assert!(!holds_at(&sb, &refs, 1));
        assert!(holds_at(&sb, &refs, 2));
    }

    #[test]
    fn response_on_trip_run() {
        let f = parse_formula("[](SomeBook -> <>pay.start)").unwrap();
        let prefix = ev(&["register.start", "register.end", "flight.start", "flight.end", "pay.start", "pay.end"]);
        assert!(eval_on_lasso(&f, &[some_book()], &prefix, &ev(&["_terminate"])));
        // booking that never reaches payment
        let stuck = ev(&["register.start", "register.end", "flight.start", "flight.end"]);
        assert!(!eval_on_lasso(&f, &[some_book()], &stuck, &ev(&["_deadlock"])));
    }

    #[test]
    fn event_atom_is_positional() {
        let w = ev(&["a.start", "pay.start", "a.end"]);
        let lasso = letter_lasso(&[], &[], &w, &ev(&["pay.start", "b.end"]));
        let f = Formula::atom("pay.start");
        let expect = [false, true, false, true, false];
        let all: Vec<&Letter> = lasso.prefix.iter().chain(&lasso.cycle).collect();
        for (i, l) in all.iter().enumerate() {
            assert_eq!(l.event.as_str() == "pay.start", expect[i]);
        }
        assert!(!eval_on_lasso(&f, &[], &w, &ev(&["pay.start"])));
        assert!(eval_on_lasso(&Formula::next(f), &[], &w, &ev(&["pay.start"])));
    }

    #[test]
    fn cycle_unrolls_until_valuation_repeats() {
        // toggles on every pass through the one-event cycle
        let fl = FluentDef::new("F", ["a.start"], ["b.start"]);
        let lasso = letter_lasso(&["F".into()], std::slice::from_ref(&fl), &[], &ev(&["a.start", "b.start"]));
        assert_eq!(lasso.prefix.len(), 0);
        assert_eq!(lasso.cycle.len(), 2);
        let init = fl.clone().initially(true);
        let lasso = letter_lasso(&["F".into()], &[init], &ev(&["x.end"]), &ev(&["x.end"]));
        assert!(lasso.cycle.iter().all(|l| l.fluents == [true]));
    }

    #[test]
    fn operators_on_simple_words() {
        let check = |src: &str, prefix: &[&str], cycle: &[&str]| {
            eval_on_lasso(&parse_formula(src).unwrap(), &[], &ev(prefix), &ev(cycle))
        };
        assert!(check("a.x U b.x", &["b.x"], &["c.x"]));
        assert!(!check("a.x U b.x", &[], &["a.x"]));
        assert!(check("a.x W b.x", &[], &["a.x"]));
        assert!(check("b.x R a.x", &[], &["a.x"]));
        assert!(!check("b.x R a.x", &["a.x"], &["c.x"]));
        assert!(check("[]<>a.x", &["b.x"], &["c.x", "a.x"]));
        assert!(!check("<>[]a.x", &["a.x"], &["c.x", "a.x"]));
        assert!(check("[] false -> a.x", &[], &["c.x"]));
        assert!(!check("Undefined", &[], &["c.x"]));
    }
}
