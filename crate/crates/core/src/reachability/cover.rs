//! Backward coverability for contracts in the DI fragment.
//!
//! Configurations are ordered by `C(Q, S, P) <= C(Q, S, P')` iff `P` is a
//! sub-multiset of `P'`. Under the Tick-Plus rule this ordering is a
//! well-quasi-ordering compatible with the transition relation, so the set of
//! configurations that can cover a target is upward closed and has a finite
//! basis. The fixpoint below computes that basis one predecessor layer at a
//! time.
//!
//! In DI every pending event has delay 0 and is sourced at an event state,
//! while functions are sourced elsewhere. The Function rule's `nored` premise
//! therefore always holds at a function source, which is why predecessor
//! enumeration never has to deal with negative premises.

use std::collections::VecDeque;

use thiserror::Error;

use crate::ast::{Contract, StateName};
use crate::fragments::classify;
use crate::semantics::{
    lower, nored, Configuration, Continuation, Label, PendingEvent, PendingSet, Semantics, SemanticsMode, Step, Trace,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error("NotDI: contract is not in the DI fragment")]
    NotDI,
    #[error("configurations belong to different contracts ({0} and {1})")]
    DifferentContracts(String, String),
    #[error("coverability targets must have an empty continuation")]
    NonEmptyTarget,
}

/// `a <= b`: same state, same continuation, `a.psi` contained in `b.psi`.
/// Clocks are ignored.
pub fn config_leq(a: &Configuration, b: &Configuration) -> Result<bool, CoverError> {
    if a.contract != b.contract {
        return Err(CoverError::DifferentContracts(
            a.contract.to_string(),
            b.contract.to_string(),
        ));
    }
    Ok(leq(a, b))
}

fn leq(a: &Configuration, b: &Configuration) -> bool {
    a.state == b.state && a.sigma == b.sigma && a.psi.is_sub_multiset(&b.psi)
}

/// An antichain of clock-erased configurations standing for its upward closure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverBasis {
    elements: Vec<Configuration>,
}

impl CoverBasis {
    pub fn elements(&self) -> &[Configuration] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Whether `cfg` lies in the upward closure.
    pub fn covers(&self, cfg: &Configuration) -> bool {
        self.elements.iter().any(|b| leq(b, cfg))
    }

    /// Adds `cfg` unless already covered, dropping elements it dominates.
    pub fn insert(&mut self, cfg: Configuration) -> bool {
        if self.covers(&cfg) {
            return false;
        }
        self.elements.retain(|b| !leq(&cfg, b));
        self.elements.push(cfg.erased());
        true
    }

    /// Mutual domination: both bases generate the same upward-closed set.
    pub fn same_closure(&self, other: &CoverBasis) -> bool {
        self.elements.iter().all(|e| other.covers(e)) && other.elements.iter().all(|e| self.covers(e))
    }
}

pub fn minimize_basis<I: IntoIterator<Item = Configuration>>(s: I) -> CoverBasis {
    let mut basis = CoverBasis::default();
    for c in s {
        basis.insert(c);
    }
    basis
}

/// Predecessor generator for one DI contract.
#[derive(Debug, Clone)]
pub struct PredEngine {
    name: String,
    init: StateName,
    sem: Semantics,
    /// (source, lowered body, target) per function.
    functions: Vec<(StateName, PendingSet, StateName)>,
    /// Declared events, all with delay 0.
    events: Vec<PendingEvent>,
}

impl PredEngine {
    pub fn new(c: &Contract) -> Result<Self, CoverError> {
        if !classify(c).det_instantaneous {
            return Err(CoverError::NotDI);
        }
        Ok(PredEngine {
            name: c.name.clone(),
            init: c.init.clone(),
            sem: Semantics::new(c),
            functions: c
                .functions
                .iter()
                .map(|f| (f.from.clone(), lower(&f.body), f.to.clone()))
                .collect(),
            events: c
                .events()
                .map(|e| PendingEvent {
                    delay: e.time.offset,
                    line: e.line,
                    from: e.from.clone(),
                    to: e.to.clone(),
                })
                .collect(),
        })
    }

    fn cfg(&self, state: &StateName, sigma: Continuation, psi: PendingSet) -> Configuration {
        Configuration::new(&self.name, state.clone(), sigma, psi)
    }

    pub fn semantics(&self) -> &Semantics {
        &self.sem
    }

    pub fn initial(&self) -> Configuration {
        self.cfg(&self.init, Continuation::Empty, PendingSet::new())
    }

    /// A finite basis of the configurations with a Tick-Plus successor
    /// covering `target`.
    pub fn pred(&self, target: &Configuration) -> Vec<Configuration> {
        let q = &target.state;
        let psi = &target.psi;
        let mut out = Vec::new();
        match &target.sigma {
            Continuation::Body { events, target: next } => {
                for (from, body, to) in &self.functions {
                    if from == q && to == next && body == events {
                        debug_assert!(nored(psi, q), "function source with a due event");
                        out.push(self.cfg(q, Continuation::Empty, psi.clone()));
                    }
                }
                if events.is_empty() {
                    for e in &self.events {
                        if e.from == *q && e.to == *next {
                            let mut with = psi.clone();
                            with.insert(e.clone());
                            out.push(self.cfg(q, Continuation::Empty, with));
                        }
                    }
                }
            }
            Continuation::Empty => {
                for (from, body, to) in &self.functions {
                    if to == q {
                        let sigma = Continuation::Body {
                            events: body.clone(),
                            target: to.clone(),
                        };
                        out.push(self.cfg(from, sigma, psi.saturating_sub(body)));
                    }
                }
                for e in &self.events {
                    if e.to == *q {
                        let sigma = Continuation::Body {
                            events: PendingSet::new(),
                            target: q.clone(),
                        };
                        out.push(self.cfg(&e.from, sigma, psi.clone()));
                    }
                }
                if psi.is_empty() && !self.sem.init_ev().contains(q) {
                    out.push(self.cfg(q, Continuation::Empty, PendingSet::new()));
                }
            }
        }
        let mut seen = Vec::with_capacity(out.len());
        for c in out {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen
    }

    /// Runs the backward fixpoint from `target`.
    pub fn backward(&self, target: &Configuration, record: bool) -> Result<CoverabilityRun, CoverError> {
        if !target.sigma.is_empty() {
            return Err(CoverError::NonEmptyTarget);
        }
        if *target.contract != *self.name {
            return Err(CoverError::DifferentContracts(
                target.contract.to_string(),
                self.name.clone(),
            ));
        }
        let mut arena: Vec<(Configuration, Option<usize>)> = vec![(target.erased(), None)];
        let mut live: Vec<usize> = vec![0];
        let mut frontier: VecDeque<usize> = VecDeque::from([0]);
        let mut expansions = Vec::new();
        let mut rounds = 0;
        while !frontier.is_empty() {
            rounds += 1;
            let mut next = VecDeque::new();
            for id in frontier {
                // A dominated element's predecessors are covered by those of
                // the element that replaced it.
                if !live.contains(&id) {
                    continue;
                }
                let preds = self.pred(&arena[id].0);
                if record {
                    expansions.push((arena[id].0.clone(), preds.clone()));
                }
                for p in preds {
                    if live.iter().any(|&b| leq(&arena[b].0, &p)) {
                        continue;
                    }
                    live.retain(|&b| !leq(&p, &arena[b].0));
                    arena.push((p, Some(id)));
                    let new_id = arena.len() - 1;
                    live.push(new_id);
                    next.push_back(new_id);
                }
            }
            frontier = next;
        }
        let init = self.initial();
        let covering = live.iter().copied().find(|&b| leq(&arena[b].0, &init));
        let chain = covering.map(|mut id| {
            let mut chain = vec![arena[id].0.clone()];
            while let Some(parent) = arena[id].1 {
                chain.push(arena[parent].0.clone());
                id = parent;
            }
            chain
        });
        Ok(CoverabilityRun {
            covered: covering.is_some(),
            basis: CoverBasis {
                elements: live.iter().map(|&b| arena[b].0.clone()).collect(),
            },
            expansions,
            rounds,
            chain,
        })
    }

    /// Builds a concrete Tick-Plus path from the initial configuration to a
    /// configuration covering the last element of `chain`.
    pub fn witness(&self, chain: &[Configuration]) -> Option<Trace> {
        let mut trace = Trace::empty(self.initial());
        for goal in chain.iter().skip(1) {
            let path = self.short_path(trace.last(), goal, 4)?;
            trace.steps.extend(path);
        }
        Some(trace)
    }

    fn short_path(&self, from: &Configuration, goal: &Configuration, depth: usize) -> Option<Vec<Step>> {
        let mut layer: Vec<(Configuration, Vec<Step>)> = vec![(from.clone(), Vec::new())];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (cfg, path) in &layer {
                for (label, succ) in self.sem.successors(cfg, SemanticsMode::TickPlus) {
                    let mut p = path.clone();
                    p.push(Step {
                        label: label.clone(),
                        config: succ.clone(),
                    });
                    if leq(goal, &succ) {
                        return Some(p);
                    }
                    next.push((succ, p));
                }
            }
            layer = next;
        }
        None
    }
}

/// Result of a backward fixpoint run.
#[derive(Clone, Debug)]
pub struct CoverabilityRun {
    pub covered: bool,
    /// The final basis of configurations that can cover the target.
    pub basis: CoverBasis,
    /// Every expanded element with its predecessors, when recording.
    pub expansions: Vec<(Configuration, Vec<Configuration>)>,
    pub rounds: usize,
    /// Basis elements from one covering the initial configuration back to
    /// the target, each with a successor covering the next.
    pub chain: Option<Vec<Configuration>>,
}

pub fn pred_basis(c: &Contract, target: &Configuration) -> Result<Vec<Configuration>, CoverError> {
    Ok(PredEngine::new(c)?.pred(target))
}

pub fn backward_coverability(c: &Contract, target: &Configuration) -> Result<CoverabilityRun, CoverError> {
    PredEngine::new(c)?.backward(target, false)
}

/// Whether some reachable configuration covers `target`. Decided under
/// Tick-Plus; for DI contracts the answer is the same under Tick.
pub fn decide_coverable(c: &Contract, target: &Configuration) -> Result<bool, CoverError> {
    Ok(backward_coverability(c, target)?.covered)
}

/// State reachability: can `C(q, -, -)` be covered?
pub fn decide_state(c: &Contract, q: &StateName) -> Result<bool, CoverError> {
    decide_coverable(
        c,
        &Configuration::new(&c.name, q.clone(), Continuation::Empty, PendingSet::new()),
    )
}

/// Labels enabled at `cfg` that belong to `label`'s clause, used to extend a
/// witness by the clause's own step.
pub(crate) fn find_step(sem: &Semantics, cfg: &Configuration, label: &Label) -> Option<Step> {
    sem.successors(cfg, SemanticsMode::Tick)
        .into_iter()
        .find(|(l, _)| l == label)
        .map(|(label, config)| Step { label, config })
}
