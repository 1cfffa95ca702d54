//! Reachability: bounded forward search for any contract, and an exact
//! backward coverability procedure for the DI fragment.

mod clauses;
mod cover;
mod explore;

pub use clauses::{unreachable_clauses, unreachable_clauses_with, verdicts_json};
pub use cover::{
    backward_coverability, config_leq, decide_coverable, decide_state, minimize_basis, pred_basis, CoverBasis,
    CoverError, CoverabilityRun, PredEngine,
};
pub use explore::{bounded_reach, bounded_search, explore, Exploration, ExplorationLimits, LimitsHit, Verdict, Visit};
