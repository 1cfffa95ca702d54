mod common;

use common::*;
use ustipula::minsky::{encode, minsky_run, Fragment, MachineConfig, MinskyOutcome};
use ustipula::reachability::{bounded_reach, Verdict};
use ustipula::{classify, Label, Semantics, SemanticsMode};

#[test]
fn suite_halting_matches_interpreter() {
    for nm in minsky_suite() {
        let halted = matches!(minsky_run(&nm.machine, 1_000), MinskyOutcome::Halted { .. });
        assert_eq!(halted, nm.halts, "{}", nm.name);
        let peak = machine_reachable(&nm.machine, 10_000)
            .iter()
            .map(|c| c.r1.max(c.r2))
            .max()
            .unwrap();
        assert!(peak <= 3, "{} peaks at {peak}", nm.name);
        assert!(nm.machine.states.len() <= 4, "{}", nm.name);
    }
}

#[test]
fn i_encoding_opening_steps() {
    let nm = &minsky_suite()[0];
    let enc = encode(&nm.machine, Fragment::I);
    let sem = Semantics::new(&enc.contract);
    let t = sem
        .replay(&[Label::Call("fstart".into()), Label::StateChange], SemanticsMode::Tick)
        .unwrap();
    let (mc, _) = enc.decode(t.last()).expect("lands on a denotation");
    assert_eq!(mc, MachineConfig::new("Q0", 0, 0));
}

#[test]
fn encodings_classify() {
    for nm in minsky_suite() {
        for enc in encodings(&nm.machine) {
            let f = classify(&enc.contract);
            let ok = match enc.fragment {
                Fragment::I => f.instantaneous,
                Fragment::TA => f.time_ahead,
                Fragment::D => f.determinate,
            };
            assert!(ok, "{} {}", nm.name, enc.fragment);
        }
    }
}

#[test]
fn halting_transfers_to_every_encoding() {
    for nm in minsky_suite() {
        for enc in encodings(&nm.machine) {
            let v = bounded_reach(
                &enc.contract,
                &enc.machine.final_state,
                &encoding_limits(enc.fragment),
                SemanticsMode::Tick,
            );
            assert_eq!(v.is_reachable(), nm.halts, "{} {}: {v:?}", nm.name, enc.fragment);
            if !nm.halts {
                assert!(matches!(v, Verdict::Unknown(_)));
            }
        }
    }
}

#[test]
fn simulation_soundness_and_adequacy() {
    for nm in minsky_suite() {
        let reachable = machine_reachable(&nm.machine, 10_000);
        for enc in encodings(&nm.machine) {
            let s = check_soundness(&enc, &reachable);
            assert!(s.failures.is_empty(), "{} soundness: {:#?}", nm.name, s.failures);
            let a = check_adequacy(&enc, &reachable);
            assert!(a.failures.is_empty(), "{} adequacy: {:#?}", nm.name, a.failures);
            assert!(a.checked > 0, "{} {}: no machine-state entries", nm.name, enc.fragment);
        }
    }
}
