use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use datactl::io::{parse_trace_str, write_trace, ParseMode};
use datactl_core::refsys::{generate_trace, ToyConfig};
use datactl_core::{Trace, TraceRecord};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => -1e6..1e6f64,
        1 => Just(f64::NAN),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
        1 => any::<f64>(),
    ]
}

fn trace() -> impl Strategy<Value = Trace> {
    (1usize..4, 1usize..3, 1usize..30).prop_flat_map(|(xd, yd, n)| {
        proptest::collection::vec(
            (
                1i64..5,
                proptest::collection::vec(value(), xd),
                proptest::collection::vec(value(), yd),
                proptest::collection::btree_map("[a-z]{1,3}", value(), 0..3),
                proptest::collection::btree_set(prop_oneof![Just("circumstance_change".to_string()), "[a-z_]{1,8}"], 0..2),
            ),
            n,
        )
        .prop_map(|rows| {
            let mut t = -3;
            let records = rows
                .into_iter()
                .map(|(dt, x, y, circ, events): (i64, _, _, BTreeMap<String, f64>, BTreeSet<String>)| {
                    t += dt;
                    TraceRecord { t, x, y, circ, events }
                })
                .collect();
            Trace::from_records(records, "prop").unwrap()
        })
    })
}

fn same(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b
}

fn same_vec(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(*x, *y))
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(tr in trace()) {
        let mut buf = Vec::new();
        write_trace(&mut buf, &tr).unwrap();
        let back = parse_trace_str(std::str::from_utf8(&buf).unwrap(), Path::new("prop.jsonl"), ParseMode::Strict).unwrap();
        prop_assert_eq!(back.len(), tr.len());
        for (a, b) in tr.records().iter().zip(back.records()) {
            prop_assert_eq!(a.t, b.t);
            prop_assert!(same_vec(&a.x, &b.x) && same_vec(&a.y, &b.y));
            prop_assert_eq!(&a.events, &b.events);
            prop_assert!(a.circ.keys().eq(b.circ.keys()));
            prop_assert!(a.circ.values().zip(b.circ.values()).all(|(x, y)| same(*x, *y)));
        }
    }
}

#[test]
fn simulated_trace_round_trips_exactly() {
    let tr = generate_trace(&ToyConfig::non_stationary_reference(), 2_000, 9).unwrap();
    let mut buf = Vec::new();
    write_trace(&mut buf, &tr).unwrap();
    let back = parse_trace_str(std::str::from_utf8(&buf).unwrap(), Path::new("sim.jsonl"), ParseMode::Strict).unwrap();
    assert_eq!(back.records(), tr.records());
}
