//! Bounded breadth-first exploration.
//!
//! The visited set is keyed on the clock-erased configuration. Each node
//! remembers the tick count along its BFS-tree path, which is what the clock
//! cap bounds and what witnesses re-materialize as the clock.

use std::fmt;

use indexmap::map::Entry;
use indexmap::IndexMap;
use serde::Serialize;

use crate::ast::{Contract, StateName};
use crate::semantics::{Configuration, Label, Semantics, SemanticsMode, Step, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExplorationLimits {
    pub max_configs: usize,
    /// Maximum number of ticks along a path.
    pub max_clock: u64,
    /// Maximum size of the pending-event multiset.
    pub max_psi: usize,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        ExplorationLimits {
            max_configs: 1_000_000,
            max_clock: 1_000,
            max_psi: 64,
        }
    }
}

impl ExplorationLimits {
    pub fn new(max_configs: usize, max_clock: u64, max_psi: usize) -> Self {
        ExplorationLimits {
            max_configs: max_configs.max(1),
            max_clock: max_clock.max(1),
            max_psi: max_psi.max(1),
        }
    }
}

/// Which caps cut the search short. All false means the reachable space was
/// enumerated completely.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LimitsHit {
    pub configs: bool,
    pub clock: bool,
    pub psi: bool,
}

impl LimitsHit {
    pub fn any(&self) -> bool {
        self.configs || self.clock || self.psi
    }
}

impl fmt::Display for LimitsHit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hit: Vec<&str> = [
            (self.configs, "max-configs"),
            (self.clock, "max-clock"),
            (self.psi, "max-psi"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
        if hit.is_empty() {
            f.write_str("no limit hit, target absent from explored space")
        } else {
            write!(f, "limits hit: {}", hit.join(", "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Reachable(Trace),
    Unreachable,
    Unknown(LimitsHit),
}

impl Verdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable(_))
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Verdict::Reachable(_) => "reachable",
            Verdict::Unreachable => "unreachable",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

/// What the explorer should do with a freshly discovered configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visit {
    Continue,
    /// Keep the node but do not expand it.
    Prune,
    /// End the search; the node becomes `found`.
    Stop,
}

#[derive(Clone, Debug)]
struct NodeInfo {
    parent: Option<(usize, Label)>,
    ticks: u64,
}

/// The explored part of a state space.
#[derive(Clone, Debug)]
pub struct Exploration {
    nodes: IndexMap<Configuration, NodeInfo>,
    start_clock: u64,
    pub found: Option<usize>,
    pub hit: LimitsHit,
}

impl Exploration {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when nothing was cut off and the search was not stopped early.
    pub fn is_complete(&self) -> bool {
        self.found.is_none() && !self.hit.any()
    }

    /// Clock-erased configurations in discovery order.
    pub fn configs(&self) -> impl Iterator<Item = &Configuration> {
        self.nodes.keys()
    }

    pub fn config(&self, id: usize) -> &Configuration {
        self.nodes.get_index(id).expect("node id in range").0
    }

    pub fn id_of(&self, cfg: &Configuration) -> Option<usize> {
        self.nodes.get_index_of(&cfg.erased())
    }

    /// The label on the BFS-tree edge into `id`.
    pub fn incoming(&self, id: usize) -> Option<&Label> {
        self.nodes[id].parent.as_ref().map(|(_, l)| l)
    }

    /// The BFS-tree path from the start to `id`, clocks restored.
    pub fn trace_to(&self, id: usize) -> Trace {
        let mut rev = Vec::new();
        let mut cur = id;
        while let Some((parent, label)) = &self.nodes[cur].parent {
            rev.push((cur, label.clone()));
            cur = *parent;
        }
        let mut start = self.config(cur).clone();
        start.clock = self.start_clock;
        let steps = rev
            .into_iter()
            .rev()
            .map(|(n, label)| {
                let mut config = self.config(n).clone();
                config.clock = self.start_clock + self.nodes[n].ticks;
                Step { label, config }
            })
            .collect();
        Trace { start, steps }
    }
}

pub fn explore<F>(
    sem: &Semantics,
    start: &Configuration,
    mode: SemanticsMode,
    limits: &ExplorationLimits,
    mut visit: F,
) -> Exploration
where
    F: FnMut(&Configuration, Option<&Label>) -> Visit,
{
    let mut ex = Exploration {
        nodes: IndexMap::new(),
        start_clock: start.clock,
        found: None,
        hit: LimitsHit::default(),
    };
    let root = start.erased();
    let first = visit(&root, None);
    ex.nodes.insert(root, NodeInfo { parent: None, ticks: 0 });
    match first {
        Visit::Stop => {
            ex.found = Some(0);
            return ex;
        }
        Visit::Prune => return ex,
        Visit::Continue => {}
    }
    let mut expandable = vec![true];
    let mut next = 0;
    while next < ex.nodes.len() {
        let id = next;
        next += 1;
        if !expandable[id] {
            continue;
        }
        let (cfg, info) = ex.nodes.get_index(id).expect("queued node exists");
        let ticks = info.ticks;
        for (label, succ) in sem.successors(cfg, mode) {
            let succ_ticks = ticks + u64::from(label == Label::Tick);
            if succ.psi.len() > limits.max_psi {
                if !ex.nodes.contains_key(&succ.erased()) {
                    ex.hit.psi = true;
                }
                continue;
            }
            if succ_ticks > limits.max_clock {
                if !ex.nodes.contains_key(&succ.erased()) {
                    ex.hit.clock = true;
                }
                continue;
            }
            let key = succ.erased();
            if ex.nodes.len() >= limits.max_configs && !ex.nodes.contains_key(&key) {
                ex.hit.configs = true;
                return ex;
            }
            let Entry::Vacant(slot) = ex.nodes.entry(key) else {
                continue;
            };
            let decision = visit(slot.key(), Some(&label));
            let new_id = slot.index();
            slot.insert(NodeInfo {
                parent: Some((id, label)),
                ticks: succ_ticks,
            });
            expandable.push(decision == Visit::Continue);
            if decision == Visit::Stop {
                ex.found = Some(new_id);
                return ex;
            }
        }
    }
    ex
}

/// Forward search for any configuration satisfying `target`.
pub fn bounded_search<P>(c: &Contract, mode: SemanticsMode, limits: &ExplorationLimits, mut target: P) -> Verdict
where
    P: FnMut(&Configuration) -> bool,
{
    let sem = Semantics::new(c);
    let ex = explore(&sem, &sem.initial(), mode, limits, |cfg, _| {
        if target(cfg) {
            Visit::Stop
        } else {
            Visit::Continue
        }
    });
    match ex.found {
        Some(id) => Verdict::Reachable(ex.trace_to(id)),
        None => Verdict::Unknown(ex.hit),
    }
}

/// Searches for a configuration at `target_state` with an empty continuation.
/// Never answers `Unreachable`.
pub fn bounded_reach(
    c: &Contract,
    target_state: &StateName,
    limits: &ExplorationLimits,
    mode: SemanticsMode,
) -> Verdict {
    bounded_search(c, mode, limits, |cfg| {
        cfg.state == *target_state && cfg.sigma.is_empty()
    })
}
