//! Fixtures and exhaustive checkers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ustipula::minsky::{
    decjump, encode, inc, minsky_step, Encoding, Flag, Fragment, MachineConfig, MinskyMachine, Register,
};
use ustipula::reachability::{explore, ExplorationLimits, PredEngine, Visit};
use ustipula::{
    lower, parse, Configuration, Continuation, Contract, EventDecl, FunctionDecl, Label, PendingEvent, PendingSet,
    Semantics, SemanticsMode, StateName,
};

pub const PINGPONG: &str = "stipula PingPong {
  init Q0
  @Q0 ping {
    now + 1 >> @Q1 => @Q2
  } => @Q1
  @Q2 pong {
    now + 2 >> @Q3 => @Q0
  } => @Q3
}
";

pub const SAMPLE: &str = "stipula Sample {
  init Init
  @Init f {
    now + 0 >> @Go => @End
  } => @Run
  @Init g { } => @Go
}
";

pub const CHAIN: &str = "stipula Chain { init A  @A f { now >> @B => @C } => @B }";

pub fn pingpong() -> Contract {
    parse(PINGPONG).unwrap()
}

pub fn sample() -> Contract {
    parse(SAMPLE).unwrap()
}

pub fn chain() -> Contract {
    parse(CHAIN).unwrap()
}

pub fn st(s: &str) -> StateName {
    StateName::new(s)
}

/// A DI contract with up to five function-source states `F*`, up to five
/// event-source states `E*` and up to six clauses. The initial state is `F0`.
pub fn random_di_contract(seed: u64) -> Contract {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = rng.gen_range(1..=5);
    let ne = rng.gen_range(1..=5);
    let fs: Vec<String> = (0..nf).map(|i| format!("F{i}")).collect();
    let es: Vec<String> = (0..ne).map(|i| format!("E{i}")).collect();
    let all: Vec<&String> = fs.iter().chain(es.iter()).collect();
    let budget = rng.gen_range(1..=6);
    let mut used = 0;
    let mut functions = Vec::new();
    while used < budget {
        let from = &fs[rng.gen_range(0..nf)];
        let to = all[rng.gen_range(0..all.len())];
        let room = (budget - used - 1).min(2);
        let n_ev = rng.gen_range(0..=room);
        let body = (0..n_ev)
            .map(|_| EventDecl::new(0, &es[rng.gen_range(0..ne)], all[rng.gen_range(0..all.len())]))
            .collect();
        functions.push(FunctionDecl::new(from, &format!("f{}", functions.len()), body, to));
        used += 1 + n_ev;
    }
    Contract::new(&format!("Gen{seed}"), "F0", functions).renumbered()
}

pub fn corpus(n: u64) -> Vec<Contract> {
    (0..n).map(random_di_contract).collect()
}

fn multisets(items: &[PendingEvent], max: usize) -> Vec<PendingSet> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<(usize, Vec<PendingEvent>)> = vec![(0, Vec::new())];
    for _ in 0..max {
        let mut next = Vec::new();
        for (start, ms) in &layer {
            for (i, e) in items.iter().enumerate().skip(*start) {
                let mut m = ms.clone();
                m.push(e.clone());
                out.push(m.clone());
                next.push((i, m));
            }
        }
        layer = next;
    }
    out.into_iter().map(|v| v.into_iter().collect()).collect()
}

/// Declared events in runtime form, one per line-code.
pub fn declared_events(c: &Contract) -> Vec<PendingEvent> {
    c.functions
        .iter()
        .flat_map(|f| lower(&f.body).iter().cloned().collect::<Vec<_>>())
        .collect()
}

/// Configurations whose pending events are declared events (at most `max`
/// of them) and whose continuation, if any, comes from a clause at its
/// source state.
pub fn well_formed_configs(c: &Contract, max: usize) -> Vec<Configuration> {
    let events = declared_events(c);
    let psis = multisets(&events, max);
    let mut heads: Vec<(StateName, Continuation)> = c.states().into_iter().map(|q| (q, Continuation::Empty)).collect();
    for f in &c.functions {
        heads.push((
            f.from.clone(),
            Continuation::Body {
                events: lower(&f.body),
                target: f.to.clone(),
            },
        ));
    }
    for e in c.events() {
        heads.push((
            e.from.clone(),
            Continuation::Body {
                events: PendingSet::new(),
                target: e.to.clone(),
            },
        ));
    }
    let heads: Vec<_> = heads.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = Vec::new();
    for (q, sigma) in &heads {
        for psi in &psis {
            out.push(Configuration::new(&c.name, q.clone(), sigma.clone(), psi.clone()));
        }
    }
    out
}

fn leq(a: &Configuration, b: &Configuration) -> bool {
    a.state == b.state && a.sigma == b.sigma && a.psi.is_sub_multiset(&b.psi)
}

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl Tally {
    pub fn fail(&mut self, msg: String) {
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }

    pub fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        for f in other.failures {
            self.fail(f);
        }
    }
}

/// Reflexivity, transitivity and antisymmetry of the ordering over the
/// well-formed configurations with at most three pending events.
pub fn check_quasi_order(c: &Contract) -> Tally {
    let mut t = Tally::default();
    let cfgs = well_formed_configs(c, 3);
    let mut groups: HashMap<(StateName, Continuation), Vec<&Configuration>> = HashMap::new();
    for cfg in &cfgs {
        groups
            .entry((cfg.state.clone(), cfg.sigma.clone()))
            .or_default()
            .push(cfg);
    }
    for cfg in &cfgs {
        t.checked += 1;
        if !ustipula::reachability::config_leq(cfg, cfg).unwrap() {
            t.fail(format!("not reflexive at {cfg}"));
        }
    }
    for members in groups.values() {
        let n = members.len();
        let up: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| leq(members[i], members[j])).collect())
            .collect();
        for a in 0..n {
            for &b in &up[a] {
                if b != a && up[b].contains(&a) && members[a] != members[b] {
                    t.fail(format!("antisymmetry fails for {} and {}", members[a], members[b]));
                }
                for &cc in &up[b] {
                    t.checked += 1;
                    if !leq(members[a], members[cc]) {
                        t.fail(format!(
                            "transitivity fails: {} {} {}",
                            members[a], members[b], members[cc]
                        ));
                    }
                }
            }
        }
    }
    t
}

/// For every `c1 <= c1'` and every step `c1 -> c2`, some path of length at
/// most two from `c1'` reaches a configuration above `c2`.
pub fn check_upward_compatibility(c: &Contract) -> Tally {
    let mut t = Tally::default();
    let sem = Semantics::new(c);
    let cfgs = well_formed_configs(c, 3);
    let mut groups: HashMap<(StateName, Continuation), Vec<&Configuration>> = HashMap::new();
    for cfg in &cfgs {
        groups
            .entry((cfg.state.clone(), cfg.sigma.clone()))
            .or_default()
            .push(cfg);
    }
    let succ = |cfg: &Configuration| sem.successors(cfg, SemanticsMode::TickPlus);
    for members in groups.values() {
        for small in members {
            let steps = succ(small);
            for big in members.iter().filter(|b| leq(small, b)) {
                let one: Vec<Configuration> = succ(big).into_iter().map(|(_, c)| c).collect();
                for (label, c2) in &steps {
                    t.checked += 1;
                    let ok =
                        one.iter().any(|b| leq(c2, b)) || one.iter().any(|b| succ(b).iter().any(|(_, bb)| leq(c2, bb)));
                    if !ok {
                        t.fail(format!("{small} -{label}-> {c2} not matched from {big}"));
                    }
                }
            }
        }
    }
    t
}

/// Every backward target of the contract: each state with nothing pending,
/// and each event source holding its event.
pub fn clause_targets(c: &Contract) -> Vec<Configuration> {
    let mut out: Vec<Configuration> = c
        .states()
        .into_iter()
        .map(|q| Configuration::new(&c.name, q, Continuation::Empty, PendingSet::new()))
        .collect();
    for e in declared_events(c) {
        out.push(Configuration::new(
            &c.name,
            e.from.clone(),
            Continuation::Empty,
            [e].into_iter().collect(),
        ));
    }
    out
}

/// One-step soundness for every predecessor generated while running the
/// backward procedure on all clause targets, then brute-force completeness
/// of the predecessor basis of every expanded element against the
/// well-formed configurations with at most three pending events.
pub fn check_pred_basis(c: &Contract) -> Tally {
    let mut t = Tally::default();
    let engine = PredEngine::new(c).expect("generated contracts are DI");
    let sem = engine.semantics();
    let mut expanded: Vec<(Configuration, Vec<Configuration>)> = Vec::new();
    let mut seen = HashSet::new();
    for target in clause_targets(c) {
        let run = engine.backward(&target, true).unwrap();
        for (tgt, preds) in run.expansions {
            for b in &preds {
                t.checked += 1;
                let ok = sem
                    .successors(b, SemanticsMode::TickPlus)
                    .iter()
                    .any(|(_, s)| leq(&tgt, s));
                if !ok {
                    t.fail(format!("unsound predecessor {b} of {tgt}"));
                }
            }
            if seen.insert(tgt.clone()) {
                expanded.push((tgt, preds));
            }
        }
    }
    let mut by_head: HashMap<(StateName, Continuation), Vec<usize>> = HashMap::new();
    for (i, (tgt, _)) in expanded.iter().enumerate() {
        by_head
            .entry((tgt.state.clone(), tgt.sigma.clone()))
            .or_default()
            .push(i);
    }
    for p in well_formed_configs(c, 3) {
        for (_, s) in sem.successors(&p, SemanticsMode::TickPlus) {
            let Some(ids) = by_head.get(&(s.state.clone(), s.sigma.clone())) else {
                continue;
            };
            for &i in ids {
                let (tgt, preds) = &expanded[i];
                if !leq(tgt, &s) {
                    continue;
                }
                t.checked += 1;
                if !preds.iter().any(|b| leq(b, &p)) {
                    t.fail(format!(
                        "{p} steps to {s} covering {tgt} but no basis element is below it"
                    ));
                }
            }
        }
    }
    t
}

/// Outcome of comparing the decision procedure against full enumeration.
#[derive(Debug, Default)]
pub struct Agreement {
    pub enumerable: usize,
    pub skipped: usize,
    pub tally: Tally,
}

/// Compares backward decisions with exhaustive Tick-Plus enumeration (psi
/// capped at 8) for every clause target of every contract whose space is
/// finite under the cap. Positive forward evidence is also checked on the
/// remaining contracts.
pub fn check_decide_agreement(contracts: &[Contract]) -> Agreement {
    let mut out = Agreement::default();
    let limits = ExplorationLimits::new(200_000, u64::MAX, 8);
    for c in contracts {
        let sem = Semantics::new(c);
        let ex = explore(&sem, &sem.initial(), SemanticsMode::TickPlus, &limits, |_, _| {
            Visit::Continue
        });
        let complete = ex.is_complete();
        if complete {
            out.enumerable += 1;
        } else {
            out.skipped += 1;
        }
        for target in clause_targets(c) {
            let forward = ex.configs().any(|cfg| leq(&target, cfg));
            let decided = ustipula::reachability::decide_coverable(c, &target).unwrap();
            out.tally.checked += 1;
            if (complete && forward != decided) || (forward && !decided) {
                out.tally.fail(format!(
                    "{}: target {target}: forward {forward}, decided {decided}",
                    c.name
                ));
            }
        }
    }
    out
}

/// States reached (with an empty continuation) by bounded exploration.
pub fn reached_states(c: &Contract, mode: SemanticsMode, limits: &ExplorationLimits) -> BTreeSet<StateName> {
    let sem = Semantics::new(c);
    let ex = explore(&sem, &sem.initial(), mode, limits, |_, _| Visit::Continue);
    ex.configs()
        .filter(|cfg| cfg.sigma.is_empty())
        .map(|cfg| cfg.state.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Minsky machines

pub struct NamedMachine {
    pub name: &'static str,
    pub machine: MinskyMachine,
    pub halts: bool,
}

pub fn minsky_suite() -> Vec<NamedMachine> {
    use Register::{R1, R2};
    let m = |name, program: Vec<(&'static str, _)>, halts| NamedMachine {
        name,
        machine: MinskyMachine::new("Q0", "QF", program).unwrap(),
        halts,
    };
    vec![
        m(
            "inc-dec-inc",
            vec![
                ("Q0", inc(R1, "Q1")),
                ("Q1", decjump(R1, "QF", "Q2")),
                ("Q2", inc(R2, "QF")),
            ],
            true,
        ),
        m(
            "pulse-loop",
            vec![("Q0", inc(R1, "Q1")), ("Q1", decjump(R1, "Q0", "Q0"))],
            false,
        ),
        m(
            "transfer",
            vec![
                ("Q0", inc(R1, "Q1")),
                ("Q1", decjump(R1, "QF", "Q2")),
                ("Q2", inc(R2, "Q1")),
            ],
            true,
        ),
        m(
            "countdown",
            vec![
                ("Q0", inc(R2, "Q1")),
                ("Q1", inc(R2, "Q2")),
                ("Q2", decjump(R2, "QF", "Q2")),
            ],
            true,
        ),
        m(
            "zero-loop",
            vec![
                ("Q0", decjump(R2, "Q1", "QF")),
                ("Q1", inc(R1, "Q2")),
                ("Q2", decjump(R1, "Q0", "Q0")),
            ],
            false,
        ),
        m(
            "fill-three",
            vec![("Q0", inc(R1, "Q1")), ("Q1", inc(R1, "Q2")), ("Q2", inc(R1, "QF"))],
            true,
        ),
    ]
}

/// Machine configurations reachable from the initial one, with `fuel` steps.
pub fn machine_reachable(m: &MinskyMachine, fuel: usize) -> HashSet<MachineConfig> {
    let mut seen = HashSet::from([m.initial()]);
    let mut queue = VecDeque::from([m.initial()]);
    let mut steps = 0;
    while let Some(c) = queue.pop_front() {
        steps += 1;
        if steps > fuel {
            break;
        }
        if let Some(n) = minsky_step(m, &c) {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Limits for searching an encoding.
pub fn encoding_limits(f: Fragment) -> ExplorationLimits {
    match f {
        Fragment::I => ExplorationLimits::new(200_000, 1_000, 32),
        Fragment::TA => ExplorationLimits::new(400_000, 1_000, 48),
        Fragment::D => ExplorationLimits::new(800_000, 1_000, 64),
    }
}

/// Reads a machine configuration from a configuration just entered at a
/// machine state. The D encoding lands one tick early after a decrement, so
/// there the tick successor is consulted too.
pub fn decode_entry(enc: &Encoding, sem: &Semantics, cfg: &Configuration) -> Option<MachineConfig> {
    if let Some((mc, _)) = enc.decode(cfg) {
        return Some(mc);
    }
    if enc.fragment == Fragment::D {
        let ticked = sem
            .successors(cfg, SemanticsMode::Tick)
            .into_iter()
            .find(|(l, _)| *l == Label::Tick)?
            .1;
        return enc.decode(&ticked).map(|(mc, _)| mc);
    }
    None
}

/// Every configuration entered at a machine state during exploration from
/// the contract's initial configuration decodes to a reachable machine
/// configuration. Returns the number of entries checked.
pub fn check_adequacy(enc: &Encoding, reachable: &HashSet<MachineConfig>) -> Tally {
    let mut t = Tally::default();
    let sem = Semantics::new(&enc.contract);
    let mut entries = Vec::new();
    let ex = explore(
        &sem,
        &sem.initial(),
        SemanticsMode::Tick,
        &encoding_limits(enc.fragment),
        |cfg, label| {
            if label == Some(&Label::StateChange) && enc.is_machine_state(&cfg.state) {
                entries.push(cfg.clone());
            }
            Visit::Continue
        },
    );
    let _ = ex;
    for cfg in entries {
        t.checked += 1;
        match decode_entry(enc, &sem, &cfg) {
            Some(mc) if reachable.contains(&mc) => {}
            Some(mc) => t.fail(format!("{}: entry {cfg} decodes to unreachable {mc}", enc.fragment)),
            None => t.fail(format!("{}: entry {cfg} is not a denotation", enc.fragment)),
        }
    }
    t
}

/// Each machine step from a reachable configuration is simulated: starting
/// at the denotation, the contract enters the successor's machine state with
/// the successor's denotation.
pub fn check_soundness(enc: &Encoding, reachable: &HashSet<MachineConfig>) -> Tally {
    let mut t = Tally::default();
    let sem = Semantics::new(&enc.contract);
    let limits = encoding_limits(enc.fragment);
    let flags: &[Flag] = if enc.fragment == Fragment::D {
        &[Flag::A, Flag::B]
    } else {
        &[Flag::A]
    };
    for mc in reachable {
        let Some(next) = minsky_step(&enc.machine, mc) else {
            continue;
        };
        for &flag in flags {
            t.checked += 1;
            let start = enc.config_for(mc, flag);
            let mut hit = false;
            explore(&sem, &start, SemanticsMode::Tick, &limits, |cfg, label| {
                if label != Some(&Label::StateChange) || !enc.is_machine_state(&cfg.state) {
                    return Visit::Continue;
                }
                if decode_entry(enc, &sem, cfg).as_ref() == Some(&next) {
                    hit = true;
                    Visit::Stop
                } else {
                    Visit::Prune
                }
            });
            if !hit {
                t.fail(format!(
                    "{}: step {mc} -> {next} not simulated (flag {flag:?})",
                    enc.fragment
                ));
            }
        }
    }
    t
}

pub fn encodings(m: &MinskyMachine) -> Vec<Encoding> {
    [Fragment::I, Fragment::TA, Fragment::D]
        .into_iter()
        .map(|f| encode(m, f))
        .collect()
}
