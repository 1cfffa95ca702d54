//! Tooling for the uStipula contract calculus.
//!
//! Contracts are parsed by [`ast`], executed by [`semantics`], sorted into
//! syntactic fragments by [`fragments`] and analysed by [`reachability`].
//! [`minsky`] compiles two-counter machines into contracts, and [`cli`] is the
//! command-line front end.

pub mod ast;
pub mod cli;
pub mod fragments;
pub mod minsky;
pub mod reachability;
pub mod semantics;

pub use ast::{clause_ids, parse, render, ClauseId, Contract, EventDecl, FunctionDecl, ParseError, StateName};
pub use fragments::{classify, init_ev, FragmentSet};
pub use semantics::{
    decrement, initial_config, lower, nored, run_random, successors, Configuration, Continuation, Label, PendingEvent,
    PendingSet, Semantics, SemanticsMode, Step, Trace,
};
