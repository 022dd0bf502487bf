//! `entropy-lab`: free-group and lattice entropy experiments.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 on numeric failure.

mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{load_config, GlobalOpts, Params};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "entropy-lab", version, about = "Furstenberg f-entropy experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hitting probabilities and cylinder masses of a walk on F_d.
    Qsolve(Params),
    /// Entropy of the harmonic measure on the boundary.
    BoundaryEntropy(Params),
    /// Minimizer criterion on depth-one cylinders (λ defaults to T(p)).
    Criterion(Params),
    /// The correspondence T from walks to entropy weights.
    Tmap(Params),
    /// The inverse of T.
    TmapInv(Params),
    /// Abel-measure entropy against the boundary value over a list of a.
    Sweep(Params),
    /// Abel-measure entropy of the lazy walk on Z or Z^2.
    Amenable(Params),
    /// Entropy rate H(μ^n)/n of the uniform walk.
    Kv(Params),
    /// Monte Carlo limit points against harmonic cylinder masses.
    WalkSim(Params),
    /// Closed-form Abel masses against a truncated convolution sum.
    OracleAbel(Params),
    /// Random densities around the harmonic measure.
    MinimizeCheck(Params),
    /// Run the command named in the config file.
    Run(Params),
}

impl Command {
    fn split(self) -> (Option<&'static str>, Params) {
        match self {
            Command::Qsolve(p) => (Some("qsolve"), p),
            Command::BoundaryEntropy(p) => (Some("boundary-entropy"), p),
            Command::Criterion(p) => (Some("criterion"), p),
            Command::Tmap(p) => (Some("tmap"), p),
            Command::TmapInv(p) => (Some("tmap-inv"), p),
            Command::Sweep(p) => (Some("sweep"), p),
            Command::Amenable(p) => (Some("amenable"), p),
            Command::Kv(p) => (Some("kv"), p),
            Command::WalkSim(p) => (Some("walk-sim"), p),
            Command::OracleAbel(p) => (Some("oracle-abel"), p),
            Command::MinimizeCheck(p) => (Some("minimize-check"), p),
            Command::Run(p) => (None, p),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ENTROPY_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Validation(format!("ENTROPY_LAB_THREADS must be a positive integer, got {raw:?}"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Option<String>, CliError> {
    configure_threads()?;
    let (named, flags) = cli.command.split();
    let base = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => Params::default(),
    };
    let mut params = base.overridden_by(flags).with_globals(&cli.global);
    let command = match (named, params.command.as_deref()) {
        (Some(name), Some(file)) if file != name => {
            return Err(CliError::Validation(format!(
                "config is for {file:?} but {name:?} was requested"
            )))
        }
        (Some(name), _) => name.to_string(),
        (None, Some(file)) => file.to_string(),
        (None, None) => {
            return Err(CliError::Validation(
                "run needs a config with a \"command\" field".into(),
            ))
        }
    };
    params.command = Some(command.clone());

    let start = Instant::now();
    let outcome = commands::dispatch(&command, &params)?;
    let runtime_ms = cli
        .global
        .timings
        .then(|| start.elapsed().as_secs_f64() * 1e3);
    let bytes = report::render(&command, &params, &outcome, runtime_ms)?;
    report::emit(&bytes, &params)?;
    // CSV has no place for runtimes
    if let Some(ms) = runtime_ms {
        if outcome.csv.is_some() && params.format != Some(config::Format::Json) {
            eprintln!("{command}: {ms:.1} ms");
        }
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("entropy-lab: check failed: {failure}");
            ExitCode::from(error::EXIT_NUMERIC)
        }
        Err(e) => {
            eprintln!("entropy-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
