use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::WorkflowSpec;

/// Self-loop label on properly completed states.
pub const TERMINATE: &str = "_terminate";
/// Self-loop label on stuck states.
pub const DEADLOCK: &str = "_deadlock";

/// A path-qualified event such as `booking.flight.start`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLabel(String);

impl EventLabel {
    pub fn new(label: impl Into<String>) -> Self {
        EventLabel(label.into())
    }

    pub fn start(task_path: &str) -> Self {
        EventLabel(format!("{task_path}.start"))
    }

    pub fn end(task_path: &str) -> Self {
        EventLabel(format!("{task_path}.end"))
    }

    pub fn inst_start(task_path: &str) -> Self {
        EventLabel(format!("{task_path}.inst.start"))
    }

    pub fn inst_end(task_path: &str) -> Self {
        EventLabel(format!("{task_path}.inst.end"))
    }

    pub fn terminate() -> Self {
        EventLabel(TERMINATE.to_string())
    }

    pub fn deadlock() -> Self {
        EventLabel(DEADLOCK.to_string())
    }

    pub fn is_reserved(&self) -> bool {
        self.0 == TERMINATE || self.0 == DEADLOCK
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventLabel {
    fn from(s: &str) -> Self {
        EventLabel(s.to_string())
    }
}

impl AsRef<str> for EventLabel {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Every observable event of the workflow plus the two reserved labels.
pub fn event_alphabet(spec: &WorkflowSpec) -> BTreeSet<EventLabel> {
    let mut out = BTreeSet::new();
    for (path, task) in spec.task_paths() {
        out.insert(EventLabel::start(&path));
        out.insert(EventLabel::end(&path));
        if task.mi.is_some() {
            out.insert(EventLabel::inst_start(&path));
            out.insert(EventLabel::inst_end(&path));
        }
    }
    out.insert(EventLabel::terminate());
    out.insert(EventLabel::deadlock());
    out
}
