//! `vchain`: runs one experiment from a TOML file and prints a JSON report.
//!
//! Exit codes: 0 success, 2 invalid input or library error, 3 a check ran
//! but missed its tolerance.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use commands::{CliError, Method, Outcome};
use config::{Config, EisensteinCfg, NpointCfg};
use serde_json::json;

#[derive(Parser)]
#[command(name = "vchain", version, about = "Reduction differentials and chain checks for the Heisenberg VOA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact q-expansion of the Eisenstein series E_k.
    EvalEisenstein {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<i64>,
        #[arg(long)]
        order: Option<i64>,
    },
    /// Weierstrass function P_k at a point of the torus.
    EvalWeierstrass(Common),
    /// The q-expansion of P_m and its value at a modular point.
    EvalPm(Common),
    /// The genus-zero kernel f0 and its two-variable expansion.
    EvalF0(Common),
    /// An n-point function by the direct oracle or by reduction.
    Npoint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        genus: Option<usize>,
        #[arg(long, conflicts_with = "reduction")]
        oracle: bool,
        #[arg(long)]
        reduction: bool,
    },
    /// Attaches one handle to a sphere correlation function.
    Sew(Common),
    /// Genus-g partition function of a Schottky surface.
    Partition(Common),
    /// Reduction against the oracle, with the zero-point factorization.
    Reduce(Common),
    /// Residuals of the chain conditions for a list of cases.
    CheckComplex(Common),
    /// The connection functional of an operator on a pair of tuples.
    Connection(Common),
    /// Numerical ranks of the total differential on a probe.
    Cohomology(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EvalEisenstein { .. } => "eval-eisenstein",
            Command::EvalWeierstrass(_) => "eval-weierstrass",
            Command::EvalPm(_) => "eval-pm",
            Command::EvalF0(_) => "eval-f0",
            Command::Npoint { .. } => "npoint",
            Command::Sew(_) => "sew",
            Command::Partition(_) => "partition",
            Command::Reduce(_) => "reduce",
            Command::CheckComplex(_) => "check-complex",
            Command::Connection(_) => "connection",
            Command::Cohomology(_) => "cohomology",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::EvalEisenstein { common, .. } | Command::Npoint { common, .. } => common,
            Command::EvalWeierstrass(c)
            | Command::EvalPm(c)
            | Command::EvalF0(c)
            | Command::Sew(c)
            | Command::Partition(c)
            | Command::Reduce(c)
            | Command::CheckComplex(c)
            | Command::Connection(c)
            | Command::Cohomology(c) => c,
        }
    }
}

fn load(common: &Common) -> Result<Config, CliError> {
    match &common.config {
        None => Ok(Config::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError { kind: "io".into(), message: format!("{}: {e}", path.display()) })?;
            Ok(config::parse(&text)?)
        }
    }
}

fn run(cmd: &Command) -> Result<(Config, Outcome), CliError> {
    let mut cfg = load(cmd.common())?;
    let outcome = match cmd {
        Command::EvalEisenstein { k, order, .. } => {
            if k.is_some() || order.is_some() {
                let base = cfg.eisenstein.clone();
                let k = k.or(base.as_ref().map(|b| b.k)).ok_or_else(|| CliError::config("--k is required"))?;
                let order = order.or(base.as_ref().map(|b| b.order)).unwrap_or(cfg.truncation.q_order);
                cfg.eisenstein = Some(EisensteinCfg { k, order });
            }
            commands::eval_eisenstein(&cfg)?
        }
        Command::EvalWeierstrass(_) => commands::eval_weierstrass(&cfg)?,
        Command::EvalPm(_) => commands::eval_pm(&cfg)?,
        Command::EvalF0(_) => commands::eval_f0(&cfg)?,
        Command::Npoint { genus, reduction, .. } => {
            if let Some(g) = genus {
                let mut n = cfg.npoint.clone().unwrap_or(NpointCfg {
                    genus: *g,
                    insertions: vec![],
                    out_state: config::StateSpec::Named("vacuum".into()),
                    in_state: config::StateSpec::Named("vacuum".into()),
                });
                n.genus = *g;
                cfg.npoint = Some(n);
            }
            let method = if *reduction { Method::Reduction } else { Method::Oracle };
            commands::npoint(&cfg, method)?
        }
        Command::Sew(_) => commands::sew(&cfg)?,
        Command::Partition(_) => commands::partition(&cfg)?,
        Command::Reduce(_) => commands::reduce(&cfg)?,
        Command::CheckComplex(_) => commands::check_complex(&cfg)?,
        Command::Connection(_) => commands::connection(&cfg)?,
        Command::Cohomology(_) => commands::cohomology(&cfg)?,
    };
    Ok((cfg, outcome))
}

fn print(v: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("JSON values always serialize"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    eprintln!("vchain {name}: parallel={}", reduction_core::exec::PARALLEL);
    match run(&cli.command) {
        Ok((cfg, outcome)) => {
            let truncation = cfg.truncation.clone();
            let deterministic = cfg.tolerance.deterministic;
            print(&json!({
                "command": name,
                "config": cfg,
                "truncation": truncation,
                "passed": outcome.passed,
                "result": outcome.result,
                "manifest": {
                    "tool": "vchain",
                    "version": env!("CARGO_PKG_VERSION"),
                    "parallel": reduction_core::exec::PARALLEL,
                    "deterministic": deterministic,
                },
            }));
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("vchain {name}: a check missed its tolerance");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("vchain {name}: {}: {}", e.kind, e.message);
            print(&json!({"command": name, "error": {"kind": e.kind, "message": e.message}}));
            ExitCode::from(2)
        }
    }
}
