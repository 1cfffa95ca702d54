//! Command-line front end.
//!
//! Exit codes: 0 success, 1 `reach` gave up without a witness, 2 a parse or
//! usage error, 3 the contract is outside the DI fragment, 4 an I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::ast::{parse, render, Contract, StateName};
use crate::fragments::{classify, init_ev};
use crate::minsky::{encode, minsky_run, parse_minsky, Fragment};
use crate::reachability::{
    bounded_reach, decide_coverable, unreachable_clauses, verdicts_json, CoverError, ExplorationLimits, Verdict,
};
use crate::semantics::{run_random, Configuration, Continuation, PendingSet, SemanticsMode};

#[derive(Parser, Debug)]
#[command(name = "ustipula", version, about = "Analyse uStipula contracts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Tick,
    Tickplus,
}

impl From<ModeArg> for SemanticsMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Tick => SemanticsMode::Tick,
            ModeArg::Tickplus => SemanticsMode::TickPlus,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FragmentArg {
    I,
    Ta,
    D,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct DecideTarget {
    /// Target state.
    #[arg(long)]
    state: Option<String>,
    /// Line-code of the target event.
    #[arg(long)]
    event: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a contract and print it in canonical form.
    Parse {
        file: PathBuf,
        /// Print the syntax tree as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Report fragment membership and event source states.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Sample a random execution.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "tick")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// Bounded forward search for a state.
    Reach {
        file: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_configs: usize,
        #[arg(long, default_value_t = 1_000)]
        max_clock: u64,
        #[arg(long, default_value_t = 64)]
        max_psi: usize,
        #[arg(long, value_enum, default_value = "tick")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// Decide state or event reachability for a DI contract.
    Decide {
        file: PathBuf,
        #[command(flatten)]
        target: DecideTarget,
    },
    /// Per-clause reachability.
    Unreachable {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compile a Minsky machine into a contract.
    EncodeMinsky {
        mfile: PathBuf,
        #[arg(long, value_enum)]
        fragment: FragmentArg,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long = "output")]
        out: Option<PathBuf>,
    },
    /// Run a Minsky machine.
    MinskyRun {
        mfile: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        fuel: u64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotDI(CoverError),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::NotDI(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load(path: &Path) -> Result<Contract, CliError> {
    parse(&read(path)?).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn io_out(e: std::io::Error) -> CliError {
    CliError::Io {
        path: "<output>".into(),
        source: e,
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Parse { file, json } => {
            let c = load(&file)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&c).expect("AST serializes")).map_err(io_out)?;
            } else {
                write!(out, "{}", render(&c)).map_err(io_out)?;
            }
            Ok(0)
        }
        Command::Classify { file, json } => {
            let c = load(&file)?;
            let f = classify(&c);
            let ev: Vec<String> = init_ev(&c).iter().map(|s| s.to_string()).collect();
            if json {
                let doc = json!({ "fragments": f.names(), "init_ev": ev });
                writeln!(out, "{doc}").map_err(io_out)?;
            } else {
                writeln!(out, "fragments: {}", f.names().join(" ")).map_err(io_out)?;
                writeln!(out, "init_ev: {}", ev.join(" ")).map_err(io_out)?;
            }
            Ok(0)
        }
        Command::Run {
            file,
            steps,
            seed,
            mode,
            json,
        } => {
            let c = load(&file)?;
            let t = run_random(&c, steps, seed, mode.into());
            if json {
                writeln!(out, "{}", t.to_json()).map_err(io_out)?;
            } else {
                write!(out, "{t}").map_err(io_out)?;
            }
            Ok(0)
        }
        Command::Reach {
            file,
            state,
            max_configs,
            max_clock,
            max_psi,
            mode,
            json,
        } => {
            let c = load(&file)?;
            if max_configs == 0 || max_clock == 0 || max_psi == 0 {
                return Err(CliError::Usage("limits must be positive".into()));
            }
            let limits = ExplorationLimits::new(max_configs, max_clock, max_psi);
            match bounded_reach(&c, &StateName::new(&state), &limits, mode.into()) {
                Verdict::Reachable(t) => {
                    if json {
                        writeln!(out, "{}", json!({ "verdict": "reachable", "witness": t })).map_err(io_out)?;
                    } else {
                        writeln!(out, "REACHABLE").map_err(io_out)?;
                        let labels: Vec<String> = t.labels().iter().map(|l| l.to_string()).collect();
                        writeln!(out, "witness: {}", labels.join(" ")).map_err(io_out)?;
                    }
                    Ok(0)
                }
                Verdict::Unreachable => unreachable!("bounded search never proves absence"),
                Verdict::Unknown(hit) => {
                    if json {
                        writeln!(out, "{}", json!({ "verdict": "unknown", "limits_hit": hit })).map_err(io_out)?;
                    } else {
                        writeln!(out, "UNKNOWN ({hit})").map_err(io_out)?;
                    }
                    Ok(1)
                }
            }
        }
        Command::Decide { file, target } => {
            let c = load(&file)?;
            let cfg = match (target.state, target.event) {
                (Some(q), _) => Configuration::new(&c.name, StateName::new(&q), Continuation::Empty, PendingSet::new()),
                (None, Some(line)) => {
                    let e = c
                        .event_at_line(line)
                        .ok_or_else(|| CliError::Usage(format!("no event declared at line {line}")))?;
                    let psi = crate::semantics::lower(std::slice::from_ref(e));
                    Configuration::new(&c.name, e.from.clone(), Continuation::Empty, psi)
                }
                (None, None) => unreachable!("clap requires one target"),
            };
            let covered = decide_coverable(&c, &cfg).map_err(|e| match e {
                CoverError::NotDI => CliError::NotDI(e),
                other => CliError::Usage(other.to_string()),
            })?;
            writeln!(out, "{}", if covered { "REACHABLE" } else { "UNREACHABLE" }).map_err(io_out)?;
            Ok(0)
        }
        Command::Unreachable { file, json } => {
            let c = load(&file)?;
            let verdicts = unreachable_clauses(&c);
            if json {
                writeln!(out, "{}", verdicts_json(&verdicts)).map_err(io_out)?;
            } else {
                let width = verdicts.keys().map(|k| k.to_string().len()).max().unwrap_or(0);
                for (clause, v) in &verdicts {
                    writeln!(out, "{:<width$}  {}", clause.to_string(), v.keyword()).map_err(io_out)?;
                }
            }
            Ok(0)
        }
        Command::EncodeMinsky {
            mfile,
            fragment,
            out: target,
        } => {
            let m = load_machine(&mfile)?;
            let fragment = match fragment {
                FragmentArg::I => Fragment::I,
                FragmentArg::Ta => Fragment::TA,
                FragmentArg::D => Fragment::D,
            };
            let text = render(&encode(&m, fragment).contract);
            match target {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?,
                None => write!(out, "{text}").map_err(io_out)?,
            }
            Ok(0)
        }
        Command::MinskyRun { mfile, fuel } => {
            let m = load_machine(&mfile)?;
            writeln!(out, "{}", minsky_run(&m, fuel)).map_err(io_out)?;
            Ok(0)
        }
    }
}

fn load_machine(path: &Path) -> Result<crate::minsky::MinskyMachine, CliError> {
    parse_minsky(&read(path)?).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
