//! Two-counter machines and their text format.
//!
//! ```text
//! init Q0
//! final QF
//! Q0: inc r1 Q1
//! Q1: decjump r1 QF Q2     # zero branch first, then positive branch
//! ```
//!
//! `#` starts a comment. Every state reached by the program must either be
//! final or carry an instruction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ast::StateName;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Register {
    R1,
    R2,
}

impl Register {
    pub fn index(self) -> u8 {
        match self {
            Register::R1 => 1,
            Register::R2 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    Inc(Register, StateName),
    DecJump {
        register: Register,
        on_zero: StateName,
        on_pos: StateName,
    },
}

impl Instruction {
    pub fn successors(&self) -> Vec<&StateName> {
        match self {
            Instruction::Inc(_, next) => vec![next],
            Instruction::DecJump { on_zero, on_pos, .. } => vec![on_zero, on_pos],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinskyMachine {
    pub states: BTreeSet<StateName>,
    pub program: BTreeMap<StateName, Instruction>,
    pub init: StateName,
    pub final_state: StateName,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineConfig {
    pub state: StateName,
    pub r1: u64,
    pub r2: u64,
}

impl MachineConfig {
    pub fn new(state: &str, r1: u64, r2: u64) -> Self {
        MachineConfig {
            state: StateName::new(state),
            r1,
            r2,
        }
    }

    fn reg(&self, r: Register) -> u64 {
        match r {
            Register::R1 => self.r1,
            Register::R2 => self.r2,
        }
    }

    fn with_reg(&self, r: Register, v: u64, state: &StateName) -> Self {
        let (r1, r2) = match r {
            Register::R1 => (v, self.r2),
            Register::R2 => (self.r1, v),
        };
        MachineConfig {
            state: state.clone(),
            r1,
            r2,
        }
    }
}

impl fmt::Display for MachineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.state, self.r1, self.r2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinskyOutcome {
    Halted { r1: u64, r2: u64, steps: u64 },
    OutOfFuel,
}

impl fmt::Display for MinskyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinskyOutcome::Halted { r1, r2, steps } => write!(f, "Halted({r1},{r2},{steps})"),
            MinskyOutcome::OutOfFuel => f.write_str("OutOfFuel"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MinskyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("final state {0} has an instruction")]
    FinalHasInstruction(StateName),
    #[error("state {0} is neither final nor has an instruction")]
    DanglingState(StateName),
}

impl MinskyMachine {
    /// Builds and validates a machine.
    pub fn new(
        init: &str,
        final_state: &str,
        program: impl IntoIterator<Item = (&'static str, Instruction)>,
    ) -> Result<Self, MinskyError> {
        let program: BTreeMap<StateName, Instruction> =
            program.into_iter().map(|(q, i)| (StateName::new(q), i)).collect();
        Self::validated(StateName::new(init), StateName::new(final_state), program)
    }

    fn validated(
        init: StateName,
        final_state: StateName,
        program: BTreeMap<StateName, Instruction>,
    ) -> Result<Self, MinskyError> {
        if program.contains_key(&final_state) {
            return Err(MinskyError::FinalHasInstruction(final_state));
        }
        let mut states = BTreeSet::from([init.clone(), final_state.clone()]);
        for (q, ins) in &program {
            states.insert(q.clone());
            states.extend(ins.successors().into_iter().cloned());
        }
        for q in std::iter::once(&init).chain(program.values().flat_map(|i| i.successors())) {
            if *q != final_state && !program.contains_key(q) {
                return Err(MinskyError::DanglingState(q.clone()));
            }
        }
        Ok(MinskyMachine {
            states,
            program,
            init,
            final_state,
        })
    }

    pub fn initial(&self) -> MachineConfig {
        MachineConfig {
            state: self.init.clone(),
            r1: 0,
            r2: 0,
        }
    }
}

pub fn inc(r: Register, next: &str) -> Instruction {
    Instruction::Inc(r, StateName::new(next))
}

pub fn decjump(r: Register, on_zero: &str, on_pos: &str) -> Instruction {
    Instruction::DecJump {
        register: r,
        on_zero: StateName::new(on_zero),
        on_pos: StateName::new(on_pos),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_minsky(text: &str) -> Result<MinskyMachine, MinskyError> {
    let mut init = None;
    let mut fin = None;
    let mut program = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| MinskyError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let state = |s: &str| {
            if is_ident(s) {
                Ok(StateName::new(s))
            } else {
                Err(err(format!("invalid state name {s:?}")))
            }
        };
        let words: Vec<&str> = content.split_whitespace().collect();
        match words.as_slice() {
            ["init", q] => {
                if init.replace(state(q)?).is_some() {
                    return Err(err("init declared twice".into()));
                }
            }
            ["final", q] => {
                if fin.replace(state(q)?).is_some() {
                    return Err(err("final declared twice".into()));
                }
            }
            [head, rest @ ..] if head.ends_with(':') => {
                let q = state(&head[..head.len() - 1])?;
                let reg = |s: &str| match s {
                    "r1" => Ok(Register::R1),
                    "r2" => Ok(Register::R2),
                    other => Err(err(format!("unknown register {other:?}, expected r1 or r2"))),
                };
                let ins = match rest {
                    ["inc", r, next] => Instruction::Inc(reg(r)?, state(next)?),
                    ["decjump", r, zero, pos] => Instruction::DecJump {
                        register: reg(r)?,
                        on_zero: state(zero)?,
                        on_pos: state(pos)?,
                    },
                    _ => return Err(err(format!("malformed instruction {content:?}"))),
                };
                if program.insert(q.clone(), ins).is_some() {
                    return Err(err(format!("state {q} has two instructions")));
                }
            }
            _ => return Err(err(format!("unrecognised line {content:?}"))),
        }
    }
    let init = init.ok_or(MinskyError::Syntax {
        line: 0,
        message: "missing `init` line".into(),
    })?;
    let fin = fin.ok_or(MinskyError::Syntax {
        line: 0,
        message: "missing `final` line".into(),
    })?;
    MinskyMachine::validated(init, fin, program)
}

/// The unique successor, or `None` when the machine halts.
pub fn minsky_step(m: &MinskyMachine, c: &MachineConfig) -> Option<MachineConfig> {
    if c.state == m.final_state {
        return None;
    }
    match m.program.get(&c.state)? {
        Instruction::Inc(r, next) => Some(c.with_reg(*r, c.reg(*r) + 1, next)),
        Instruction::DecJump {
            register,
            on_zero,
            on_pos,
        } => {
            let v = c.reg(*register);
            Some(if v == 0 {
                c.with_reg(*register, 0, on_zero)
            } else {
                c.with_reg(*register, v - 1, on_pos)
            })
        }
    }
}

pub fn minsky_run(m: &MinskyMachine, fuel: u64) -> MinskyOutcome {
    let mut c = m.initial();
    for steps in 0..=fuel {
        match minsky_step(m, &c) {
            None => {
                return MinskyOutcome::Halted {
                    r1: c.r1,
                    r2: c.r2,
                    steps,
                }
            }
            Some(next) if steps < fuel => c = next,
            Some(_) => break,
        }
    }
    MinskyOutcome::OutOfFuel
}
