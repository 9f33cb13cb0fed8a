mod common;

use std::collections::BTreeSet;

use common::{load, random_props, read_fsp};
use flowcheck::encoder::{build_lts, compile, Limits};
use flowcheck::fltl::parse_props;
use flowcheck::fsp::{emit_fsp_fluents, emit_fsp_model};
use proptest::prelude::*;

const GOLDEN: &str = include_str!("golden/trip.fsp");

#[test]
fn trip_model_matches_golden_file() {
    let lts = build_lts(&compile(&load("trip.yawl"), 1).unwrap(), Limits::default()).unwrap();
    let first = emit_fsp_model(&lts, "TRIP");
    assert_eq!(first, GOLDEN);
    let again = build_lts(&compile(&load("trip.yawl"), 1).unwrap(), Limits::default()).unwrap();
    assert_eq!(emit_fsp_model(&again, "TRIP"), first);
    assert!(first.is_ascii());
}

#[test]
fn fsp_reader_preserves_counts() {
    for name in ["trip.yawl", "cancel_deadlock.yawl", "composite.yawl"] {
        let lts = build_lts(&compile(&load(name), 1).unwrap(), Limits::default()).unwrap();
        let model = read_fsp(&emit_fsp_model(&lts, "M")).unwrap();
        assert_eq!(model.states, lts.num_states(), "{name}");
        assert_eq!(model.edges.len(), lts.num_transitions(), "{name}");
        let original: BTreeSet<(u32, String, u32)> = lts.edges().map(|(s, l, t)| (s, l.to_string(), t)).collect();
        let read: BTreeSet<(u32, String, u32)> = model.edges.into_iter().collect();
        assert_eq!(read, original, "{name}");
    }
}

#[test]
fn flp_round_trip_hundred_sets() {
    for seed in 0..100 {
        let (fluents, assertions) = random_props(seed);
        let text = emit_fsp_fluents(&fluents, &assertions);
        let back = parse_props(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(back.fluents, fluents, "{text}");
        assert_eq!(back.assertions, assertions, "{text}");
    }
}

proptest! {
    #[test]
    fn flp_round_trip(seed in any::<u64>()) {
        let (fluents, assertions) = random_props(seed);
        let back = parse_props(&emit_fsp_fluents(&fluents, &assertions)).unwrap();
        prop_assert_eq!(back.fluents, fluents);
        prop_assert_eq!(back.assertions, assertions);
    }
}
