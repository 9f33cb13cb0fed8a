//! Compilation of a [`WorkflowSpec`](crate::model::WorkflowSpec) into a bounded
//! reset net and exploration of its marking graph.

mod compile;
mod explore;
mod lts;

pub use compile::{compile, CompileError, CompiledNet, Guard, NetTransition, OrJoin, Place, PlaceOrigin};
pub use explore::{build_lts, BuildError, Limits};
pub use lts::{find_deadlocks, Deadlock, LabelId, Lts, StateId};

use std::fmt;

/// Token counts per place, indexed like [`CompiledNet::places`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(Box<[u16]>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![0; places].into_boxed_slice())
    }

    pub fn get(&self, place: usize) -> u16 {
        self.0[place]
    }

    pub fn set(&mut self, place: usize, count: u16) {
        self.0[place] = count;
    }

    pub fn counts(&self) -> &[u16] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        let mut first = true;
        for (p, &c) in self.0.iter().enumerate() {
            if c > 0 {
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{p}:{c}")?;
            }
        }
        f.write_str("]")
    }
}
