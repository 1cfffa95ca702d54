//! Compilers from two-counter machines into contracts of the I, TA and D
//! fragments.
//!
//! A register holding `v` is represented by `v` pending events
//! `dec_i => ackdec_i`; decrementing means firing one of them and zero-testing
//! means observing that none is due. The three encodings differ in how they
//! keep a computation from skipping or duplicating steps:
//!
//! * I: a token pair `a_Q => b_Q` marks the current machine state.
//! * TA: a marker `Q => end` kills any computation that lets time pass at a
//!   machine state, and decrements copy register events one time unit ahead.
//! * D: two sibling copies (A and B) of every function alternate a `notick`
//!   token, and register copies are rescheduled far enough ahead that the
//!   whole decrement round completes before they fall due.
//!
//! Auxiliary states carry a prefix that no machine state starts with.

use std::fmt;

use crate::ast::{Contract, EventDecl, FunctionDecl, StateName};
use crate::semantics::{Configuration, Continuation, PendingEvent, PendingSet};

use super::machine::{Instruction, MachineConfig, MinskyMachine, Register};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fragment {
    I,
    TA,
    D,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fragment::I => "I",
            Fragment::TA => "TA",
            Fragment::D => "D",
        })
    }
}

/// Which sibling family produced the current `notick` token in the D encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flag {
    A,
    B,
}

impl Flag {
    pub fn other(self) -> Flag {
        match self {
            Flag::A => Flag::B,
            Flag::B => Flag::A,
        }
    }

    fn letter(self) -> &'static str {
        match self {
            Flag::A => "A",
            Flag::B => "B",
        }
    }
}

/// What a register denotation is attached to: a machine state for I and TA,
/// a sibling flag for D.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchor {
    State(StateName),
    Flag(Flag),
}

/// Fresh names for auxiliary states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxNames {
    prefix: String,
}

impl AuxNames {
    pub fn for_machine(m: &MinskyMachine) -> Self {
        let mut prefix = String::from("_");
        while m.states.iter().any(|q| q.as_str().starts_with(&prefix)) {
            prefix.push('_');
        }
        AuxNames { prefix }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    fn aux(&self, base: &str) -> StateName {
        StateName::new(&format!("{}{base}", self.prefix))
    }

    pub fn start(&self) -> StateName {
        self.aux("Start")
    }
    pub fn dec(&self, r: Register) -> StateName {
        self.aux(&format!("dec{}", r.index()))
    }
    pub fn ackdec(&self, r: Register) -> StateName {
        self.aux(&format!("ackdec{}", r.index()))
    }
    pub fn zero(&self, r: Register) -> StateName {
        self.aux(&format!("zero{}", r.index()))
    }
    pub fn a(&self, q: &StateName) -> StateName {
        self.aux(&format!("a_{q}"))
    }
    pub fn b(&self, q: &StateName) -> StateName {
        self.aux(&format!("b_{q}"))
    }
    pub fn wait(&self) -> StateName {
        self.aux("wait")
    }
    pub fn end(&self) -> StateName {
        self.aux("end")
    }
    pub fn next(&self) -> StateName {
        self.aux("next")
    }
    pub fn next_of(&self, q: &StateName, r: Register) -> StateName {
        self.aux(&format!("next_{q}_{}", r.index()))
    }
    pub fn cont(&self) -> StateName {
        self.aux("cont")
    }
    pub fn notick(&self, x: Flag) -> StateName {
        self.aux(&format!("notick{}", x.letter()))
    }
    pub fn start_of(&self, q: &StateName, r: Register) -> StateName {
        self.aux(&format!("start{}_{q}", r.index()))
    }
    pub fn s_notick(&self, r: Register) -> StateName {
        self.aux(&format!("s{}notick", r.index()))
    }
    pub fn copy(&self, r: Register) -> StateName {
        self.aux(&format!("copy{}", r.index()))
    }
    pub fn c_notick(&self, r: Register, x: Flag) -> StateName {
        self.aux(&format!("c{}notick{}", r.index(), x.letter()))
    }
}

const REGS: [Register; 2] = [Register::R1, Register::R2];

fn ev(k: u32, from: &StateName, to: &StateName) -> EventDecl {
    EventDecl {
        time: crate::ast::TimeExpr { offset: k },
        from: from.clone(),
        to: to.clone(),
        line: 0,
    }
}

fn fun(from: &StateName, name: String, body: Vec<EventDecl>, to: &StateName) -> FunctionDecl {
    FunctionDecl {
        from: from.clone(),
        name,
        body,
        to: to.clone(),
    }
}

fn contract(name: &str, init: &StateName, functions: Vec<FunctionDecl>) -> Contract {
    let c = Contract {
        name: name.to_string(),
        init: init.clone(),
        functions,
    }
    .renumbered();
    debug_assert!(c.validate().is_ok());
    c
}

/// A compiled machine together with the names needed to read it back.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub fragment: Fragment,
    pub names: AuxNames,
    pub contract: Contract,
    pub machine: MinskyMachine,
}

pub fn encode(m: &MinskyMachine, fragment: Fragment) -> Encoding {
    let names = AuxNames::for_machine(m);
    let contract = match fragment {
        Fragment::I => build_i(m, &names),
        Fragment::TA => build_ta(m, &names),
        Fragment::D => build_d(m, &names),
    };
    Encoding {
        fragment,
        names,
        contract,
        machine: m.clone(),
    }
}

pub fn encode_i(m: &MinskyMachine) -> Contract {
    encode(m, Fragment::I).contract
}

pub fn encode_ta(m: &MinskyMachine) -> Contract {
    encode(m, Fragment::TA).contract
}

pub fn encode_d(m: &MinskyMachine) -> Contract {
    encode(m, Fragment::D).contract
}

fn build_i(m: &MinskyMachine, n: &AuxNames) -> Contract {
    let mut fs = vec![fun(
        &n.start(),
        "fstart".into(),
        vec![ev(0, &n.a(&m.init), &n.b(&m.init))],
        &m.init,
    )];
    for (q, ins) in &m.program {
        match ins {
            Instruction::Inc(r, next) => fs.push(fun(
                q,
                format!("finc{q}"),
                vec![
                    ev(0, &n.dec(*r), &n.ackdec(*r)),
                    ev(0, &n.b(q), next),
                    ev(0, &n.a(next), &n.b(next)),
                ],
                &n.a(q),
            )),
            Instruction::DecJump {
                register: r,
                on_zero,
                on_pos,
            } => {
                fs.push(fun(
                    q,
                    format!("fdec{q}"),
                    vec![
                        ev(0, &n.ackdec(*r), &n.a(q)),
                        ev(0, &n.b(q), on_pos),
                        ev(0, &n.a(on_pos), &n.b(on_pos)),
                    ],
                    &n.dec(*r),
                ));
                fs.push(fun(
                    q,
                    format!("fzero{q}"),
                    vec![
                        ev(0, &n.zero(*r), &n.a(q)),
                        ev(0, &n.b(q), on_zero),
                        ev(0, &n.a(on_zero), &n.b(on_zero)),
                    ],
                    &n.dec(*r),
                ));
            }
        }
    }
    for r in REGS {
        fs.push(fun(&n.dec(r), format!("fdec{}", r.index()), vec![], &n.zero(r)));
    }
    contract("MinskyI", &n.start(), fs)
}

fn build_ta(m: &MinskyMachine, n: &AuxNames) -> Contract {
    let end = n.end();
    let (dec1, dec2) = (n.dec(Register::R1), n.dec(Register::R2));
    let (ack1, ack2) = (n.ackdec(Register::R1), n.ackdec(Register::R2));
    let mut fs = Vec::new();
    for (q, ins) in &m.program {
        match ins {
            Instruction::Inc(r, next) => fs.push(fun(
                q,
                format!("finc{q}"),
                vec![ev(1, &n.dec(*r), &n.ackdec(*r)), ev(1, next, &end)],
                next,
            )),
            Instruction::DecJump {
                register: r,
                on_zero,
                on_pos,
            } => {
                let next_pos = n.next_of(on_pos, *r);
                fs.push(fun(
                    q,
                    format!("fdec{q}"),
                    vec![
                        ev(1, &n.ackdec(*r), &next_pos),
                        ev(1, &n.wait(), &dec1),
                        ev(2, &dec1, &end),
                        ev(2, &dec2, &end),
                        ev(2, &next_pos, &end),
                        ev(2, &ack1, &end),
                        ev(2, &ack2, &end),
                        ev(3, on_pos, &end),
                    ],
                    &n.wait(),
                ));
                fs.push(fun(
                    q,
                    format!("fzero{q}"),
                    vec![
                        ev(1, &n.ackdec(*r), &end),
                        ev(2, &n.next(), on_zero),
                        ev(1, &n.wait(), &dec1),
                        // Same late-tick guards as fdec; without them a tick
                        // mid-copy drops or delays register units.
                        ev(2, &dec1, &end),
                        ev(2, &dec2, &end),
                        ev(2, &ack1, &end),
                        ev(2, &ack2, &end),
                        ev(3, on_zero, &end),
                    ],
                    &n.wait(),
                ));
            }
        }
    }
    fs.push(fun(&n.wait(), "fwait".into(), vec![], &end));
    fs.push(fun(&dec1, "fdec1".into(), vec![], &dec2));
    fs.push(fun(&dec2, "fdec2".into(), vec![], &n.next()));
    for r in REGS {
        fs.push(fun(
            &n.ackdec(r),
            format!("fackdec{}", r.index()),
            vec![ev(2, &n.dec(r), &n.ackdec(r))],
            &n.dec(r),
        ));
    }
    for q in &m.states {
        for r in REGS {
            fs.push(fun(
                &n.next_of(q, r),
                format!("fnext{q}_{}", r.index()),
                vec![ev(1, &n.next(), q)],
                &n.dec(r),
            ));
        }
    }
    contract("MinskyTA", &m.init, fs)
}

fn build_d(m: &MinskyMachine, n: &AuxNames) -> Contract {
    use Register::{R1, R2};
    let cont = n.cont();
    let mut fs = vec![fun(
        &n.start(),
        "fstart".into(),
        vec![ev(0, &n.notick(Flag::A), &cont)],
        &m.init,
    )];
    for (q, ins) in &m.program {
        for x in [Flag::A, Flag::B] {
            let y = x.other();
            let xl = x.letter();
            match ins {
                Instruction::Inc(r, next) => {
                    let delay = if *r == R1 { 1 } else { 3 };
                    fs.push(fun(
                        q,
                        format!("f{xl}inc{q}"),
                        vec![
                            ev(delay, &n.dec(*r), &n.ackdec(*r)),
                            ev(0, &cont, next),
                            ev(0, &n.notick(y), &cont),
                        ],
                        &n.notick(x),
                    ));
                }
                Instruction::DecJump {
                    register: R1,
                    on_zero,
                    on_pos,
                } => {
                    fs.push(fun(
                        q,
                        format!("f{xl}dec{q}"),
                        vec![
                            ev(1, &n.ackdec(R1), &n.start_of(on_pos, R1)),
                            ev(1, &n.s_notick(R1), &cont),
                            ev(0, &cont, &n.dec(R1)),
                        ],
                        &n.notick(x),
                    ));
                    fs.push(fun(
                        q,
                        format!("f{xl}zero{q}"),
                        vec![
                            ev(0, &cont, &n.dec(R1)),
                            ev(2, &n.dec(R1), &n.dec(R2)),
                            ev(3, &n.ackdec(R2), &n.copy(R2)),
                            ev(3, &n.c_notick(R2, Flag::A), &cont),
                            ev(4, &n.dec(R2), on_zero),
                            ev(5, &n.notick(y), &cont),
                        ],
                        &n.notick(x),
                    ));
                }
                Instruction::DecJump {
                    register: R2,
                    on_zero,
                    on_pos,
                } => {
                    fs.push(fun(
                        q,
                        format!("f{xl}dec{q}"),
                        vec![
                            ev(0, &cont, &n.dec(R1)),
                            ev(1, &n.ackdec(R1), &n.copy(R1)),
                            ev(1, &n.c_notick(R1, Flag::A), &cont),
                            ev(2, &n.dec(R1), &n.dec(R2)),
                            ev(3, &n.ackdec(R2), &n.start_of(on_pos, R2)),
                            ev(3, &n.s_notick(R2), &cont),
                        ],
                        &n.notick(x),
                    ));
                    fs.push(fun(
                        q,
                        format!("f{xl}zero{q}"),
                        vec![
                            ev(0, &cont, &n.dec(R1)),
                            ev(1, &n.ackdec(R1), &n.copy(R1)),
                            ev(1, &n.c_notick(R1, Flag::A), &cont),
                            ev(2, &n.dec(R1), &n.dec(R2)),
                            ev(4, &n.dec(R2), on_zero),
                            ev(5, &n.notick(y), &cont),
                        ],
                        &n.notick(x),
                    ));
                }
            }
        }
    }
    for q in &m.states {
        fs.push(fun(
            &n.start_of(q, R1),
            format!("f{q}start1"),
            vec![
                ev(0, &n.ackdec(R1), &n.copy(R1)),
                ev(0, &cont, &n.dec(R1)),
                ev(0, &n.c_notick(R1, Flag::A), &cont),
                ev(1, &n.dec(R1), &n.dec(R2)),
                ev(2, &n.ackdec(R2), &n.copy(R2)),
                ev(2, &n.c_notick(R2, Flag::A), &cont),
                ev(3, &n.dec(R2), q),
                ev(4, &n.notick(Flag::A), &cont),
            ],
            &n.s_notick(R1),
        ));
        fs.push(fun(
            &n.start_of(q, R2),
            format!("f{q}start2"),
            vec![
                ev(0, &n.ackdec(R2), &n.copy(R2)),
                ev(0, &cont, &n.dec(R2)),
                ev(0, &n.c_notick(R2, Flag::A), &cont),
                ev(1, &n.dec(R2), q),
                ev(2, &n.notick(Flag::A), &cont),
            ],
            &n.s_notick(R2),
        ));
    }
    for r in REGS {
        for x in [Flag::A, Flag::B] {
            fs.push(fun(
                &n.copy(r),
                format!("f{}copy{}", x.letter(), r.index()),
                vec![
                    ev(0, &n.ackdec(r), &n.copy(r)),
                    ev(0, &cont, &n.dec(r)),
                    ev(0, &n.c_notick(r, x.other()), &cont),
                    ev(5, &n.dec(r), &n.ackdec(r)),
                ],
                &n.c_notick(r, x),
            ));
        }
    }
    contract("MinskyD", &n.start(), fs)
}

/// Register denotation with every line-code set to 0.
pub fn denote_registers(names: &AuxNames, fragment: Fragment, v1: u64, v2: u64, anchor: &Anchor) -> PendingSet {
    let (d1, d2) = match fragment {
        Fragment::I => (0, 0),
        Fragment::TA => (1, 1),
        Fragment::D => (1, 3),
    };
    let mut out = Vec::new();
    let reg = |d, r| PendingEvent {
        delay: d,
        line: 0,
        from: names.dec(r),
        to: names.ackdec(r),
    };
    out.extend((0..v1).map(|_| reg(d1, Register::R1)));
    out.extend((0..v2).map(|_| reg(d2, Register::R2)));
    let marker = match (fragment, anchor) {
        (Fragment::I, Anchor::State(q)) => (0, names.a(q), names.b(q)),
        (Fragment::TA, Anchor::State(q)) => (1, q.clone(), names.end()),
        (Fragment::D, Anchor::Flag(x)) => (0, names.notick(*x), names.cont()),
        (f, a) => panic!("anchor {a:?} does not fit the {f} encoding"),
    };
    out.push(PendingEvent {
        delay: marker.0,
        line: 0,
        from: marker.1,
        to: marker.2,
    });
    out.into_iter().collect()
}

/// Multiset of `(delay, from, to)` with line-codes dropped.
fn shape(psi: &PendingSet) -> Vec<(u32, StateName, StateName)> {
    let mut v: Vec<_> = psi.iter().map(|e| (e.delay, e.from.clone(), e.to.clone())).collect();
    v.sort();
    v
}

impl Encoding {
    pub fn is_machine_state(&self, q: &StateName) -> bool {
        self.machine.states.contains(q)
    }

    /// Denotation using the line-codes of matching declared events.
    pub fn denote(&self, v1: u64, v2: u64, anchor: &Anchor) -> PendingSet {
        denote_registers(&self.names, self.fragment, v1, v2, anchor)
            .iter()
            .map(|e| {
                let line = self
                    .contract
                    .events()
                    .filter(|d| d.time.offset == e.delay && d.from == e.from && d.to == e.to)
                    .map(|d| d.line)
                    .min()
                    .unwrap_or(0);
                PendingEvent { line, ..e.clone() }
            })
            .collect()
    }

    /// The contract configuration standing for a machine configuration.
    pub fn config_for(&self, mc: &MachineConfig, flag: Flag) -> Configuration {
        let anchor = match self.fragment {
            Fragment::D => Anchor::Flag(flag),
            _ => Anchor::State(mc.state.clone()),
        };
        Configuration::new(
            &self.contract.name,
            mc.state.clone(),
            Continuation::Empty,
            self.denote(mc.r1, mc.r2, &anchor),
        )
    }

    /// Reads a machine configuration back from `cfg`, comparing modulo
    /// line-codes. In TA, extra events into the `end` sink are tolerated.
    pub fn decode(&self, cfg: &Configuration) -> Option<(MachineConfig, Anchor)> {
        if !cfg.sigma.is_empty() || !self.is_machine_state(&cfg.state) {
            return None;
        }
        let n = &self.names;
        let count = |r: Register, d: u32| {
            cfg.psi
                .iter()
                .filter(|e| e.delay == d && e.from == n.dec(r) && e.to == n.ackdec(r))
                .count() as u64
        };
        let (d1, d2) = match self.fragment {
            Fragment::I => (0, 0),
            Fragment::TA => (1, 1),
            Fragment::D => (1, 3),
        };
        let (v1, v2) = (count(Register::R1, d1), count(Register::R2, d2));
        let candidates = match self.fragment {
            Fragment::D => vec![Anchor::Flag(Flag::A), Anchor::Flag(Flag::B)],
            _ => vec![Anchor::State(cfg.state.clone())],
        };
        let actual = shape(&cfg.psi);
        for anchor in candidates {
            let expected = shape(&denote_registers(n, self.fragment, v1, v2, &anchor));
            let ok = if self.fragment == Fragment::TA {
                let mut rest = actual.clone();
                expected.iter().all(|e| match rest.iter().position(|a| a == e) {
                    Some(i) => {
                        rest.remove(i);
                        true
                    }
                    None => false,
                }) && rest.iter().all(|(_, _, to)| *to == n.end())
            } else {
                actual == expected
            };
            if ok {
                let mc = MachineConfig {
                    state: cfg.state.clone(),
                    r1: v1,
                    r2: v2,
                };
                return Some((mc, anchor));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::render;
    use crate::fragments::classify;
    use crate::minsky::machine::{decjump, inc};
    use Register::*;

    fn three() -> MinskyMachine {
        MinskyMachine::new(
            "Q0",
            "QF",
            [
                ("Q0", inc(R1, "Q1")),
                ("Q1", decjump(R1, "QF", "Q2")),
                ("Q2", inc(R2, "QF")),
            ],
        )
        .unwrap()
    }

    #[test]
    fn prefix_avoids_machine_names() {
        let m = MinskyMachine::new("_x", "QF", [("_x", inc(R1, "QF"))]).unwrap();
        let n = AuxNames::for_machine(&m);
        assert_eq!(n.prefix(), "__");
        assert_eq!(AuxNames::for_machine(&three()).prefix(), "_");
    }

    #[test]
    fn denotation_examples() {
        let n = AuxNames::for_machine(&three());
        let q0 = StateName::new("Q0");
        let i = denote_registers(&n, Fragment::I, 0, 0, &Anchor::State(q0.clone()));
        assert_eq!(i, [PendingEvent::new(0, 0, "_a_Q0", "_b_Q0")].into_iter().collect());
        let ta = denote_registers(&n, Fragment::TA, 1, 0, &Anchor::State(StateName::new("Q")));
        assert_eq!(
            ta,
            [
                PendingEvent::new(1, 0, "_dec1", "_ackdec1"),
                PendingEvent::new(1, 0, "Q", "_end")
            ]
            .into_iter()
            .collect()
        );
        let d = denote_registers(&n, Fragment::D, 0, 2, &Anchor::Flag(Flag::A));
        let two = PendingEvent::new(3, 0, "_dec2", "_ackdec2");
        assert_eq!(
            d,
            [two.clone(), two, PendingEvent::new(0, 0, "_notickA", "_cont")]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn encodings_land_in_their_fragments() {
        let m = three();
        assert!(classify(&encode_i(&m)).instantaneous);
        assert!(classify(&encode_ta(&m)).time_ahead);
        assert!(classify(&encode_d(&m)).determinate);
    }

    #[test]
    fn ta_inc_row() {
        let m = MinskyMachine::new("Q0", "QF", [("Q0", inc(R1, "QF"))]).unwrap();
        let c = encode_ta(&m);
        let f = c.functions.iter().find(|f| f.name == "fincQ0").unwrap();
        let body: Vec<_> = f
            .body
            .iter()
            .map(|e| (e.time.offset, e.from.to_string(), e.to.to_string()))
            .collect();
        assert_eq!(
            body,
            vec![(1, "_dec1".into(), "_ackdec1".into()), (1, "QF".into(), "_end".into())]
        );
    }

    #[test]
    fn d_start_function() {
        let c = encode_d(&three());
        assert!(render(&c).contains("  @_Start fstart {\n    now >> @_notickA => @_cont\n  } => @Q0\n"));
    }

    #[test]
    fn decode_round_trips() {
        let m = three();
        for fragment in [Fragment::I, Fragment::TA, Fragment::D] {
            let enc = encode(&m, fragment);
            let mc = MachineConfig::new("Q1", 2, 1);
            let cfg = enc.config_for(&mc, Flag::B);
            let (back, _) = enc.decode(&cfg).unwrap();
            assert_eq!(back, mc);
        }
    }
}
