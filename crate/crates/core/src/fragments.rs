//! Syntactic fragments.
//!
//! * I: every event fires at `now`.
//! * TA: every event is scheduled strictly ahead.
//! * D: no state is both a function source and an event source.
//! * DI: both D and I.
//!
//! An event-free contract satisfies all of them.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::ast::{Contract, StateName};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct FragmentSet {
    pub instantaneous: bool,
    pub time_ahead: bool,
    pub determinate: bool,
    pub det_instantaneous: bool,
}

impl FragmentSet {
    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.instantaneous, "I"),
            (self.time_ahead, "TA"),
            (self.determinate, "D"),
            (self.det_instantaneous, "DI"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect()
    }
}

impl fmt::Display for FragmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

/// Source states of all events declared in the contract.
pub fn init_ev(c: &Contract) -> BTreeSet<StateName> {
    c.events().map(|e| e.from.clone()).collect()
}

pub fn function_sources(c: &Contract) -> BTreeSet<StateName> {
    c.functions.iter().map(|f| f.from.clone()).collect()
}

pub fn classify(c: &Contract) -> FragmentSet {
    let instantaneous = c.events().all(|e| e.time.offset == 0);
    let time_ahead = c.events().all(|e| e.time.offset > 0);
    let determinate = function_sources(c).is_disjoint(&init_ev(c));
    FragmentSet {
        instantaneous,
        time_ahead,
        determinate,
        det_instantaneous: determinate && instantaneous,
    }
}
