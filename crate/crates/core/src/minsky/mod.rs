//! Two-counter Minsky machines and their compilation into contracts.

mod encode;
mod machine;

pub use encode::{denote_registers, encode, encode_d, encode_i, encode_ta, Anchor, AuxNames, Encoding, Flag, Fragment};
pub use machine::{
    decjump, inc, minsky_run, minsky_step, parse_minsky, Instruction, MachineConfig, MinskyError, MinskyMachine,
    MinskyOutcome, Register,
};
