use std::collections::BTreeSet;
use std::fmt;

use crate::model::{EventLabel, DEADLOCK, TERMINATE};

/// FLTL formula over event atoms and fluent references.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    /// Holds exactly at positions where this event occurs.
    Event(EventLabel),
    Fluent(String),
    /// Template placeholder (`$A`); never present in a closed formula.
    Param(String),
    Not(Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    WeakUntil(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
}

/// Whether a bare name denotes an event label rather than a fluent.
pub fn is_event_name(name: &str) -> bool {
    name.contains('.') || name == TERMINATE || name == DEADLOCK
}

impl Formula {
    /// Event atom or fluent reference, by the naming rule.
    pub fn atom(name: &str) -> Formula {
        if is_event_name(name) {
            Formula::Event(EventLabel::from(name))
        } else {
            Formula::Fluent(name.to_string())
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: Formula, b: Formula) -> Formula {
        Formula::WeakUntil(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        Formula::Release(Box::new(a), Box::new(b))
    }

    fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Event(_) | Fluent(_) | Param(_) => vec![],
            Not(a) | Next(a) | Eventually(a) | Always(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) | Until(a, b) | WeakUntil(a, b)
            | Release(a, b) => vec![a, b],
        }
    }

    fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Formula)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    pub fn fluents(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Fluent(n) = f {
                out.insert(n.as_str());
            }
        });
        out
    }

    pub fn events(&self) -> BTreeSet<&EventLabel> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Event(e) = f {
                out.insert(e);
            }
        });
        out
    }

    pub fn params(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Param(n) = f {
                out.insert(n.as_str());
            }
        });
        out
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(Formula::depth).max().unwrap_or(0)
    }

    /// Rebuilds the formula bottom-up, replacing leaves via `leaf`.
    pub fn map_leaves(&self, leaf: &mut impl FnMut(&Formula) -> Formula) -> Formula {
        use Formula::*;
        let mut go = |x: &Formula| Box::new(x.map_leaves(leaf));
        match self {
            True | False | Event(_) | Fluent(_) | Param(_) => leaf(self),
            Not(a) => Not(go(a)),
            Next(a) => Next(go(a)),
            Eventually(a) => Eventually(go(a)),
            Always(a) => Always(go(a)),
            And(a, b) => And(go(a), go(b)),
            Or(a, b) => Or(go(a), go(b)),
            Implies(a, b) => Implies(go(a), go(b)),
            Iff(a, b) => Iff(go(a), go(b)),
            Until(a, b) => Until(go(a), go(b)),
            WeakUntil(a, b) => WeakUntil(go(a), go(b)),
            Release(a, b) => Release(go(a), go(b)),
        }
    }
}

// Binding strength, loosest first.
const P_IFF: u8 = 1;
const P_IMPLIES: u8 = 2;
const P_TEMPORAL: u8 = 3;
const P_OR: u8 = 4;
const P_AND: u8 = 5;
const P_UNARY: u8 = 6;

impl Formula {
    fn precedence(&self) -> u8 {
        use Formula::*;
        match self {
            Iff(..) => P_IFF,
            Implies(..) => P_IMPLIES,
            Until(..) | WeakUntil(..) | Release(..) => P_TEMPORAL,
            Or(..) => P_OR,
            And(..) => P_AND,
            _ => P_UNARY,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        use Formula::*;
        let prec = self.precedence();
        if prec < min {
            f.write_str("(")?;
            self.write(f, 0)?;
            return f.write_str(")");
        }
        let bin = |f: &mut fmt::Formatter<'_>, a: &Formula, op: &str, b: &Formula, right_assoc: bool| {
            let (lmin, rmin) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
            a.write(f, lmin)?;
            write!(f, " {op} ")?;
            b.write(f, rmin)
        };
        match self {
            True => f.write_str("true"),
            False => f.write_str("false"),
            Event(e) => f.write_str(e.as_str()),
            Fluent(n) => f.write_str(n),
            Param(n) => write!(f, "${n}"),
            Not(a) => {
                f.write_str("!")?;
                a.write(f, P_UNARY)
            }
            Next(a) => {
                f.write_str("X ")?;
                a.write(f, P_UNARY)
            }
            Eventually(a) => {
                f.write_str("<>")?;
                a.write(f, P_UNARY)
            }
            Always(a) => {
                f.write_str("[]")?;
                a.write(f, P_UNARY)
            }
            And(a, b) => bin(f, a, "&&", b, false),
            Or(a, b) => bin(f, a, "||", b, false),
            Implies(a, b) => bin(f, a, "->", b, true),
            Iff(a, b) => bin(f, a, "<->", b, false),
            Until(a, b) => bin(f, a, "U", b, true),
            WeakUntil(a, b) => bin(f, a, "W", b, true),
            Release(a, b) => bin(f, a, "R", b, true),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
