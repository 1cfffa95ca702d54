//! Per-clause reachability, for spotting dead code in a contract.
//!
//! A function clause is reachable when some reachable configuration can call
//! it, and an event clause when some reachable configuration can fire it.
//! DI contracts get exact answers from the backward procedure. Everything
//! else falls back to bounded forward search, which can only confirm.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::cover::{find_step, PredEngine};
use super::explore::{explore, ExplorationLimits, Verdict, Visit};
use crate::ast::{clause_ids, ClauseId, Contract};
use crate::fragments::classify;
use crate::semantics::{nored, Configuration, Continuation, Label, PendingEvent, PendingSet, Semantics, SemanticsMode};

fn enables(clause: &ClauseId, cfg: &Configuration) -> bool {
    if !cfg.sigma.is_empty() || cfg.state != *clause.from_state() {
        return false;
    }
    match clause {
        ClauseId::Function { .. } => nored(&cfg.psi, &cfg.state),
        ClauseId::Event { line, to, .. } => cfg
            .psi
            .iter()
            .any(|e| e.delay == 0 && e.line == *line && e.from == cfg.state && e.to == *to),
    }
}

fn clause_label(clause: &ClauseId) -> Label {
    match clause {
        ClauseId::Function { name, .. } => Label::Call(name.clone()),
        ClauseId::Event { line, .. } => Label::Fire(*line),
    }
}

/// The smallest configuration enabling `clause` in a DI contract.
fn enabling_target(c: &Contract, clause: &ClauseId) -> Configuration {
    let psi: PendingSet = match clause {
        ClauseId::Function { .. } => PendingSet::new(),
        ClauseId::Event { from, line, to } => [PendingEvent {
            delay: 0,
            line: *line,
            from: from.clone(),
            to: to.clone(),
        }]
        .into_iter()
        .collect(),
    };
    Configuration::new(&c.name, clause.from_state().clone(), Continuation::Empty, psi)
}

pub fn unreachable_clauses(c: &Contract) -> BTreeMap<ClauseId, Verdict> {
    unreachable_clauses_with(c, &ExplorationLimits::default())
}

/// Like [`unreachable_clauses`], with explicit limits for the forward fallback.
pub fn unreachable_clauses_with(c: &Contract, limits: &ExplorationLimits) -> BTreeMap<ClauseId, Verdict> {
    if classify(c).det_instantaneous {
        decided(c, limits)
    } else {
        searched(c, limits)
    }
}

fn decided(c: &Contract, limits: &ExplorationLimits) -> BTreeMap<ClauseId, Verdict> {
    let engine = PredEngine::new(c).expect("DI checked by caller");
    let sem = engine.semantics();
    let mut out = BTreeMap::new();
    let mut fallback = Vec::new();
    for clause in clause_ids(c) {
        let run = engine
            .backward(&enabling_target(c, &clause), false)
            .expect("target has an empty continuation");
        if !run.covered {
            out.insert(clause, Verdict::Unreachable);
            continue;
        }
        let witness = run.chain.as_deref().and_then(|chain| engine.witness(chain));
        let extended = witness.and_then(|mut t| {
            let step = find_step(sem, t.last(), &clause_label(&clause))?;
            t.steps.push(step);
            Some(t)
        });
        match extended {
            Some(t) => {
                out.insert(clause, Verdict::Reachable(t));
            }
            None => fallback.push(clause),
        }
    }
    if !fallback.is_empty() {
        let found = search_all(c, &fallback, limits);
        out.extend(found);
    }
    out
}

fn searched(c: &Contract, limits: &ExplorationLimits) -> BTreeMap<ClauseId, Verdict> {
    let clauses: Vec<ClauseId> = clause_ids(c).into_iter().collect();
    search_all(c, &clauses, limits)
}

/// One forward exploration that records the first configuration enabling
/// each clause.
fn search_all(c: &Contract, clauses: &[ClauseId], limits: &ExplorationLimits) -> BTreeMap<ClauseId, Verdict> {
    let sem = Semantics::new(c);
    let mut first: Vec<Option<Configuration>> = vec![None; clauses.len()];
    let mut remaining = clauses.len();
    let ex = explore(&sem, &sem.initial(), SemanticsMode::Tick, limits, |cfg, _| {
        for (i, clause) in clauses.iter().enumerate() {
            if first[i].is_none() && enables(clause, cfg) {
                first[i] = Some(cfg.clone());
                remaining -= 1;
            }
        }
        if remaining == 0 {
            Visit::Stop
        } else {
            Visit::Continue
        }
    });
    clauses
        .iter()
        .zip(first)
        .map(|(clause, cfg)| {
            let verdict = cfg
                .and_then(|cfg| ex.id_of(&cfg))
                .and_then(|id| {
                    let mut t = ex.trace_to(id);
                    let step = find_step(&sem, t.last(), &clause_label(clause))?;
                    t.steps.push(step);
                    Some(Verdict::Reachable(t))
                })
                .unwrap_or(Verdict::Unknown(ex.hit));
            (clause.clone(), verdict)
        })
        .collect()
}

/// `[{clause, verdict, witness?}, ...]`
pub fn verdicts_json(verdicts: &BTreeMap<ClauseId, Verdict>) -> Value {
    Value::Array(
        verdicts
            .iter()
            .map(|(clause, v)| {
                let mut obj = json!({ "clause": clause, "verdict": v.keyword() });
                if let Verdict::Reachable(t) = v {
                    obj["witness"] = serde_json::to_value(t).expect("trace serializes");
                }
                obj
            })
            .collect(),
    )
}
