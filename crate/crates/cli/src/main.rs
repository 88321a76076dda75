//! `kg-s3`: configuration-driven runs of the periodic-solution solver and its
//! verification suites.
//!
//! Exit codes: `0` success, `1` configuration error (including rejected frequencies and
//! unsupported exponents), `2` solver divergence, `3` failed checks or residual above
//! tolerance, `4` output error. Failures also print a JSON error record to stderr and,
//! once the output directory exists, write it as `error.json`.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{to_json_bytes, OutputDir, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "kg-s3",
    version,
    about = "Time-periodic solutions of the resonant Klein–Gordon equation on S³"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, or JSON with a `.json` extension); defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (overrides `verify.seed`).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for sweeps and multiplicity searches (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Compute one solution at the configured ε.
    Solve,
    /// Solve over an ε grid and fit the amplitude scaling law.
    Sweep,
    /// Search for solutions with distinct minimal periods.
    Multiplicity,
    /// Run the verification suites.
    Verify,
    /// Solve, then integrate the solution in time and compare after each period.
    Evolve,
    /// Basis and identity self-checks at fixed seeds.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Multiplicity => "multiplicity",
            Command::Verify => "verify",
            Command::Evolve => "evolve",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(serde::Serialize)]
struct ErrorFile {
    schema_version: u32,
    command: &'static str,
    error: error::ErrorRecord,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.verify.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_pool(jobs: Option<usize>) -> Result<(), CliError> {
    match jobs {
        Some(0) => Err(CliError::Config("--jobs must be ≥ 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}"))),
        None => Ok(()),
    }
}

fn dispatch(command: Command, cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    match command {
        Command::Solve => commands::cmd_solve(cfg, out),
        Command::Sweep => commands::cmd_sweep(cfg, out),
        Command::Multiplicity => commands::cmd_multiplicity(cfg, out),
        Command::Verify => commands::cmd_verify(cfg, out),
        Command::Evolve => commands::cmd_evolve(cfg, out),
        Command::Selftest => commands::cmd_selftest(cfg, out),
    }
}

fn report_error(command: Command, err: &CliError, out: Option<&mut OutputDir>) {
    let file = ErrorFile {
        schema_version: SCHEMA_VERSION,
        command: command.name(),
        error: err.record(),
    };
    if let Ok(bytes) = to_json_bytes(&file) {
        eprint!("{}", String::from_utf8_lossy(&bytes));
        if let Some(out) = out {
            // Best effort: the error record itself is already on stderr.
            let _ = out.write_bytes("error.json", &bytes);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command;
    let cfg = match load_config(&cli).and_then(|cfg| configure_pool(cli.jobs).map(|()| cfg)) {
        Ok(cfg) => cfg,
        Err(e) => {
            report_error(command, &e, None);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut out = match OutputDir::create(&cfg.output.directory) {
        Ok(out) => out,
        Err(e) => {
            report_error(command, &e, None);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = dispatch(command, &cfg, &mut out);
    if let Err(e) = &result {
        report_error(command, e, Some(&mut out));
    }
    let manifest = out.write_manifest(command.name());
    match (result, manifest) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(e), _) | (Ok(()), Err(e)) => ExitCode::from(e.exit_code() as u8),
    }
}
