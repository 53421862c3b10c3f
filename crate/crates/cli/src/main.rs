//! `clopen-lab` command-line driver. Every run prints one JSON report.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use clopen_lab::Error;
use serde_json::{json, Value};

pub const SCHEMA: &str = "clopen-lab/1";

#[derive(Parser, Debug)]
#[command(name = "clopen-lab", version, about = "Equidecomposition and type-semigroup experiments on symbolic actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Invariant-state gap between two clopen sets, then a search for a subequidecomposition.
    Compare(Common),
    /// Search for an (sub)equidecomposition of two clopen sets.
    Equidecompose(Common),
    /// `[A] ≤ [B]` for type expressions such as `2*[0] + [1]`.
    TypeLeq(Common),
    /// Extreme values of an invariant state on `--A` at `--depth`.
    Measures(Common),
    /// Search for `(n+1)[B] ≤ n[B]` with `n ≤ --bound`.
    Paradox(Common),
    /// Bounded property checks for a finitely presented commutative monoid.
    MonoidCheck(Common),
    /// Coinvariant group of the action at `--depth`.
    Coinvariants(Common),
    /// Translation matching between subsets of the integers.
    Zsubset(Common),
    /// One ample-ladder step from the trivial unit system, merging `--A` with `--B`.
    UnitLadder(Common),
    /// Krieger's construction up the ladder of invariant partitions of levels `1..=--depth`.
    Krieger(Common),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Action spec: a TOML file or a builtin name (odometer2, shift2, amoo, amoo-x-odometer2, swap2, trivial2).
    #[arg(long)]
    pub action: Option<String>,
    #[arg(long = "A", alias = "a")]
    pub a: Option<String>,
    #[arg(long = "B", alias = "b")]
    pub b: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub wordlen: Option<usize>,
    /// Search depth for the piece search.
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub bound: Option<u32>,
    /// Comma-separated translation set, e.g. `-1,0,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub shifts: Option<String>,
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Replay a witness from a report file instead of searching.
    #[arg(long)]
    pub verify: Option<PathBuf>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Write the witness matching graph as DOT.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// `equi` (tile the target) or `sub`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub gens: Option<usize>,
    /// A relation `l = r`; repeatable.
    #[arg(long = "rel")]
    pub rel: Vec<String>,
    /// A property name or `all`.
    #[arg(long)]
    pub property: Option<String>,
    /// Designated element, space separated.
    #[arg(long)]
    pub unit: Option<String>,
    /// Refuse polytopes that are only outer approximations.
    #[arg(long)]
    pub exact_only: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Compare(_) => "compare",
            Command::Equidecompose(_) => "equidecompose",
            Command::TypeLeq(_) => "type-leq",
            Command::Measures(_) => "measures",
            Command::Paradox(_) => "paradox",
            Command::MonoidCheck(_) => "monoid-check",
            Command::Coinvariants(_) => "coinvariants",
            Command::Zsubset(_) => "zsubset",
            Command::UnitLadder(_) => "unit-ladder",
            Command::Krieger(_) => "krieger",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Compare(c)
            | Command::Equidecompose(c)
            | Command::TypeLeq(c)
            | Command::Measures(c)
            | Command::Paradox(c)
            | Command::MonoidCheck(c)
            | Command::Coinvariants(c)
            | Command::Zsubset(c)
            | Command::UnitLadder(c)
            | Command::Krieger(c) => c,
        }
    }
}

/// What a command produced: a verdict word and its payload, plus the resolved configuration.
pub struct Outcome {
    pub verdict: String,
    pub result: Value,
    pub config: Value,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_internal() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let name = cli.command.name();
    let common = cli.command.common().clone();
    let (report, code) = match commands::run(&cli.command) {
        Ok(out) => (
            json!({
                "schema": SCHEMA,
                "tool": {"name": "clopen-lab", "version": env!("CARGO_PKG_VERSION")},
                "command": name,
                "config": out.config,
                "verdict": out.verdict,
                "result": out.result,
                "timing": {"elapsed_ms": started.elapsed().as_millis() as u64},
            }),
            0,
        ),
        Err(e) => {
            eprintln!("clopen-lab {name}: {e}");
            (
                json!({
                    "schema": SCHEMA,
                    "tool": {"name": "clopen-lab", "version": env!("CARGO_PKG_VERSION")},
                    "command": name,
                    "verdict": "error",
                    "error": {"kind": if e.is_internal() { "internal" } else { "input" }, "message": e.to_string()},
                    "timing": {"elapsed_ms": started.elapsed().as_millis() as u64},
                }),
                exit_code(&e),
            )
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    // A closed pipe is not worth a panic.
    let _ = writeln!(std::io::stdout(), "{text}");
    if let Some(path) = &common.json_out {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            eprintln!("cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
