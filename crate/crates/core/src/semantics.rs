//! Small-step operational semantics.
//!
//! A configuration is a state, a continuation and a multiset of pending
//! events, plus a clock that no rule ever reads. Four rules generate
//! transitions: Function, Event-Match, State-Change and Tick. The restricted
//! Tick-Plus rule may only progress time at states that are not the source of
//! any event.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ast::{Contract, EventDecl, StateName};
use crate::fragments::init_ev;

/// Runtime form of an event: `delay >>line from => to`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PendingEvent {
    pub delay: u32,
    pub line: u32,
    pub from: StateName,
    pub to: StateName,
}

impl PendingEvent {
    pub fn new(delay: u32, line: u32, from: &str, to: &str) -> Self {
        PendingEvent {
            delay,
            line,
            from: StateName::new(from),
            to: StateName::new(to),
        }
    }
}

impl fmt::Debug for PendingEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>>{} {}=>{}", self.delay, self.line, self.from, self.to)
    }
}

impl fmt::Display for PendingEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for PendingEvent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.delay, self.line, &self.from, &self.to).serialize(s)
    }
}

/// A multiset of pending events, kept sorted so equal multisets are equal values.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PendingSet(Vec<PendingEvent>);

impl PendingSet {
    pub fn new() -> Self {
        PendingSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PendingEvent> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[PendingEvent] {
        &self.0
    }

    pub fn insert(&mut self, e: PendingEvent) {
        let at = self.0.partition_point(|x| *x <= e);
        self.0.insert(at, e);
    }

    /// Removes one occurrence of `e`; returns whether one was present.
    pub fn remove_one(&mut self, e: &PendingEvent) -> bool {
        match self.0.binary_search(e) {
            Ok(i) => {
                self.0.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    /// Multiset union `self | other`.
    pub fn union(&self, other: &PendingSet) -> PendingSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        v.sort();
        PendingSet(v)
    }

    /// Multiset difference saturating at the empty multiset.
    pub fn saturating_sub(&self, other: &PendingSet) -> PendingSet {
        let mut out = Vec::with_capacity(self.len());
        let mut j = 0;
        for e in &self.0 {
            while j < other.0.len() && other.0[j] < *e {
                j += 1;
            }
            if j < other.0.len() && other.0[j] == *e {
                j += 1;
            } else {
                out.push(e.clone());
            }
        }
        PendingSet(out)
    }

    /// Sub-multiset test, respecting multiplicities.
    pub fn is_sub_multiset(&self, other: &PendingSet) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut j = 0;
        for e in &self.0 {
            while j < other.0.len() && other.0[j] < *e {
                j += 1;
            }
            if j == other.0.len() || other.0[j] != *e {
                return false;
            }
            j += 1;
        }
        true
    }

    pub fn count(&self, e: &PendingEvent) -> usize {
        self.0.iter().filter(|x| *x == e).count()
    }
}

impl FromIterator<PendingEvent> for PendingSet {
    fn from_iter<I: IntoIterator<Item = PendingEvent>>(iter: I) -> Self {
        let mut v: Vec<_> = iter.into_iter().collect();
        v.sort();
        PendingSet(v)
    }
}

impl<'a> IntoIterator for &'a PendingSet {
    type Item = &'a PendingEvent;
    type IntoIter = std::slice::Iter<'a, PendingEvent>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for PendingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl fmt::Display for PendingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The continuation component: either empty or `events => target`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Continuation {
    Empty,
    Body { events: PendingSet, target: StateName },
}

impl Continuation {
    pub fn is_empty(&self) -> bool {
        matches!(self, Continuation::Empty)
    }
}

impl fmt::Display for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Continuation::Empty => f.write_str("-"),
            Continuation::Body { events, target } => write!(f, "{events} => {target}"),
        }
    }
}

impl Serialize for Continuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Continuation::Empty => s.serialize_none(),
            Continuation::Body { events, target } => {
                let mut st = s.serialize_struct("Body", 2)?;
                st.serialize_field("events", events)?;
                st.serialize_field("target", target)?;
                st.end()
            }
        }
    }
}

/// `C(Q, sigma, psi)` at clock `clock`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub contract: Arc<str>,
    pub state: StateName,
    pub sigma: Continuation,
    pub psi: PendingSet,
    pub clock: u64,
}

impl Configuration {
    pub fn new(contract: &str, state: StateName, sigma: Continuation, psi: PendingSet) -> Self {
        Configuration {
            contract: Arc::from(contract),
            state,
            sigma,
            psi,
            clock: 0,
        }
    }

    /// The same configuration with the clock erased.
    pub fn erased(&self) -> Configuration {
        Configuration {
            clock: 0,
            ..self.clone()
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}, {}, {})@{}",
            self.contract, self.state, self.sigma, self.psi, self.clock
        )
    }
}

/// Transition label. `StateChange` and `Tick` are both silent steps; they are
/// kept apart so traces stay readable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Call(String),
    Fire(u32),
    StateChange,
    Tick,
}

impl Label {
    pub fn is_silent(&self) -> bool {
        matches!(self, Label::StateChange | Label::Tick)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Call(name) => write!(f, "call:{name}"),
            Label::Fire(line) => write!(f, "ev:{line}"),
            Label::StateChange => f.write_str("statechange"),
            Label::Tick => f.write_str("tick"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tick" => Ok(Label::Tick),
            "statechange" => Ok(Label::StateChange),
            _ => {
                if let Some(name) = s.strip_prefix("call:") {
                    Ok(Label::Call(name.to_string()))
                } else if let Some(line) = s.strip_prefix("ev:") {
                    line.parse().map(Label::Fire).map_err(|_| format!("bad line in {s:?}"))
                } else {
                    Err(format!("unknown label {s:?}"))
                }
            }
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemanticsMode {
    Tick,
    TickPlus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: Label,
    pub config: Configuration,
}

impl Serialize for Step {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Step", 5)?;
        st.serialize_field("label", &self.label)?;
        st.serialize_field("state", &self.config.state)?;
        st.serialize_field("sigma", &self.config.sigma)?;
        st.serialize_field("psi", &self.config.psi)?;
        st.serialize_field("clock", &self.config.clock)?;
        st.end()
    }
}

/// A start configuration followed by labelled steps. Serializes as the array
/// of steps; the start configuration is implied by the contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub start: Configuration,
    pub steps: Vec<Step>,
}

impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.steps.serialize(s)
    }
}

impl Trace {
    pub fn empty(start: Configuration) -> Self {
        Trace {
            start,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &Configuration {
        self.steps.last().map_or(&self.start, |s| &s.config)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.steps.iter().map(|s| s.label.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.steps).expect("trace serialization cannot fail")
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            let c = &s.config;
            writeln!(
                f,
                "{:<14} {} | {} | {} | clock {}",
                s.label.to_string(),
                c.state,
                c.sigma,
                c.psi,
                c.clock
            )?;
        }
        Ok(())
    }
}

pub fn initial_config(c: &Contract) -> Configuration {
    Configuration::new(&c.name, c.init.clone(), Continuation::Empty, PendingSet::new())
}

/// No event in `psi` is due now at `q`.
pub fn nored(psi: &PendingSet, q: &StateName) -> bool {
    !psi.iter().any(|e| e.delay == 0 && e.from == *q)
}

/// One tick: delays drop by one and events already due are discarded.
pub fn decrement(psi: &PendingSet) -> PendingSet {
    PendingSet(
        psi.iter()
            .filter(|e| e.delay > 0)
            .map(|e| PendingEvent {
                delay: e.delay - 1,
                ..e.clone()
            })
            .collect(),
    )
}

/// Turns a function body into the pending events it schedules.
pub fn lower(body: &[EventDecl]) -> PendingSet {
    body.iter()
        .map(|e| PendingEvent {
            delay: e.time.offset,
            line: e.line,
            from: e.from.clone(),
            to: e.to.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {index}: no `{label}` transition from {config}")]
    NotEnabled {
        index: usize,
        label: Label,
        config: Box<Configuration>,
    },
}

#[derive(Debug, Clone)]
struct LoweredFunction {
    name: String,
    body: PendingSet,
    to: StateName,
}

/// A contract prepared for execution: bodies lowered once, functions indexed
/// by source state.
#[derive(Debug, Clone)]
pub struct Semantics {
    name: Arc<str>,
    init: StateName,
    by_source: HashMap<StateName, Vec<LoweredFunction>>,
    init_ev: BTreeSet<StateName>,
}

impl Semantics {
    pub fn new(c: &Contract) -> Self {
        let mut by_source: HashMap<StateName, Vec<LoweredFunction>> = HashMap::new();
        for f in &c.functions {
            by_source.entry(f.from.clone()).or_default().push(LoweredFunction {
                name: f.name.clone(),
                body: lower(&f.body),
                to: f.to.clone(),
            });
        }
        Semantics {
            name: Arc::from(c.name.as_str()),
            init: c.init.clone(),
            by_source,
            init_ev: init_ev(c),
        }
    }

    pub fn initial(&self) -> Configuration {
        Configuration {
            contract: self.name.clone(),
            state: self.init.clone(),
            sigma: Continuation::Empty,
            psi: PendingSet::new(),
            clock: 0,
        }
    }

    pub fn init_ev(&self) -> &BTreeSet<StateName> {
        &self.init_ev
    }

    /// All enabled one-step transitions, without duplicates.
    pub fn successors(&self, cfg: &Configuration, mode: SemanticsMode) -> Vec<(Label, Configuration)> {
        let mut out = Vec::new();
        match &cfg.sigma {
            Continuation::Body { events, target } => {
                out.push((
                    Label::StateChange,
                    Configuration {
                        contract: cfg.contract.clone(),
                        state: target.clone(),
                        sigma: Continuation::Empty,
                        psi: events.union(&cfg.psi),
                        clock: cfg.clock,
                    },
                ));
            }
            Continuation::Empty => {
                let quiet = nored(&cfg.psi, &cfg.state);
                if quiet {
                    for f in self.by_source.get(&cfg.state).into_iter().flatten() {
                        out.push((
                            Label::Call(f.name.clone()),
                            Configuration {
                                sigma: Continuation::Body {
                                    events: f.body.clone(),
                                    target: f.to.clone(),
                                },
                                ..cfg.clone()
                            },
                        ));
                    }
                }
                let mut prev: Option<&PendingEvent> = None;
                for (i, e) in cfg.psi.iter().enumerate() {
                    if e.delay != 0 || e.from != cfg.state || prev == Some(e) {
                        continue;
                    }
                    prev = Some(e);
                    let mut rest = cfg.psi.as_slice().to_vec();
                    rest.remove(i);
                    out.push((
                        Label::Fire(e.line),
                        Configuration {
                            sigma: Continuation::Body {
                                events: PendingSet::new(),
                                target: e.to.clone(),
                            },
                            psi: PendingSet(rest),
                            ..cfg.clone()
                        },
                    ));
                }
                let tick_allowed = match mode {
                    SemanticsMode::Tick => quiet,
                    SemanticsMode::TickPlus => quiet && !self.init_ev.contains(&cfg.state),
                };
                if tick_allowed {
                    out.push((
                        Label::Tick,
                        Configuration {
                            psi: decrement(&cfg.psi),
                            clock: cfg.clock + 1,
                            ..cfg.clone()
                        },
                    ));
                }
            }
        }
        out
    }

    /// Whether only ticks are ever enabled from `cfg` under the Tick rule.
    /// Follows the deterministic tick chain for at most `horizon` steps;
    /// the chain always reaches a fixpoint once every pending event has
    /// expired, so `None` only comes back when the horizon is too short.
    pub fn stuck(&self, cfg: &Configuration, horizon: usize) -> Option<bool> {
        let mut cur = cfg.clone();
        for _ in 0..=horizon {
            let succ = self.successors(&cur, SemanticsMode::Tick);
            if succ.iter().any(|(l, _)| *l != Label::Tick) {
                return Some(false);
            }
            let Some((_, next)) = succ.into_iter().next() else {
                return Some(true);
            };
            if next.psi == cur.psi {
                return Some(true);
            }
            cur = next;
        }
        None
    }

    pub fn run_random(&self, steps: usize, seed: u64, mode: SemanticsMode) -> Trace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = Trace::empty(self.initial());
        for _ in 0..steps {
            let mut succ = self.successors(trace.last(), mode);
            if succ.is_empty() {
                break;
            }
            let (label, config) = succ.swap_remove(rng.gen_range(0..succ.len()));
            trace.steps.push(Step { label, config });
        }
        trace
    }

    /// Follows `labels` from the initial configuration, taking the first
    /// enabled transition with each label.
    pub fn replay(&self, labels: &[Label], mode: SemanticsMode) -> Result<Trace, ReplayError> {
        let mut trace = Trace::empty(self.initial());
        for (index, label) in labels.iter().enumerate() {
            let cur = trace.last().clone();
            let next = self
                .successors(&cur, mode)
                .into_iter()
                .find(|(l, _)| l == label)
                .ok_or_else(|| ReplayError::NotEnabled {
                    index,
                    label: label.clone(),
                    config: Box::new(cur),
                })?;
            trace.steps.push(Step {
                label: next.0,
                config: next.1,
            });
        }
        Ok(trace)
    }

    /// Function names callable at `q`, with their lowered bodies and targets.
    pub fn functions_at(&self, q: &StateName) -> impl Iterator<Item = (&str, &PendingSet, &StateName)> {
        self.by_source
            .get(q)
            .into_iter()
            .flatten()
            .map(|f| (f.name.as_str(), &f.body, &f.to))
    }
}

pub fn successors(c: &Contract, cfg: &Configuration, mode: SemanticsMode) -> Vec<(Label, Configuration)> {
    Semantics::new(c).successors(cfg, mode)
}

pub fn run_random(c: &Contract, steps: usize, seed: u64, mode: SemanticsMode) -> Trace {
    Semantics::new(c).run_random(steps, seed, mode)
}

/// Distinct labels of a successor list, for quick assertions.
pub fn label_set(succ: &[(Label, Configuration)]) -> HashSet<Label> {
    succ.iter().map(|(l, _)| l.clone()).collect()
}
