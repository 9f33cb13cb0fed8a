//! Workflow verification: YAWL control flow compiled to labelled transition
//! systems, checked against fluent linear temporal logic properties.

pub mod model;
pub mod encoder;
pub mod fltl;
pub mod fsp;
pub mod synth;
pub mod templates;
