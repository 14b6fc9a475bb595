//! The `drlab` command line: configuration, experiment drivers and output
//! files.
//!
//! Every command writes `summary.json` and `manifest.json` into the output
//! directory, plus its own tables. Both are byte-identical for a given
//! configuration and seed whatever the worker count; timing and the worker
//! count go to `run_info.json` instead.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

pub use commands::{DefectSummary, LabeledFit, Outcome, Summary, SweepPoint};
pub use config::ExperimentConfig;

use crate::error::Error;
use output::Artifacts;

/// Process exit status for a command that ran and whose checks passed.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
/// A checked inequality or acceptance band failed.
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
/// Node budget or support cap exhausted.
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Lib(e) => match e {
                Error::DegenerateStarLaw
                | Error::InvalidStarLaw(_)
                | Error::InvalidModel(_)
                | Error::InvalidArgument(_) => EXIT_CONFIG,
                Error::InequalityViolated(_) => EXIT_ASSERTION,
                Error::NodeBudgetExceeded { .. } | Error::TruncationTooAggressive { .. } => {
                    EXIT_BUDGET
                }
                _ => EXIT_OTHER,
            },
            CliError::Io(_) | CliError::Failed(_) => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print the critical point and the distance to it.
    Pc,
    /// Iterate the law and write the per-generation trace.
    Iterate,
    /// Fit the decay rate for several distances to criticality.
    ExponentSweep,
    /// Diagnostics of the critical system.
    Critical,
    /// Compare the subcritical survival with the open-path transform.
    Coupling,
    /// Sample the deviation event of the critical tree.
    Deviation,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pc => "pc",
            Command::Iterate => "iterate",
            Command::ExponentSweep => "exponent-sweep",
            Command::Critical => "critical",
            Command::Coupling => "coupling",
            Command::Deviation => "deviation",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "drlab",
    version,
    about = "Numerics for the Derrida-Retaux recursion"
)]
pub struct Args {
    pub command: Command,
    /// TOML experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `mc.workers`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    p_c: f64,
    files: &'a [String],
    defects: &'a [DefectSummary],
    fits: &'a [LabeledFit],
}

#[derive(Serialize)]
struct RunInfo {
    wall_clock_seconds: f64,
    workers: usize,
}

/// Loads the configuration, applies command-line overrides and runs.
pub fn execute(args: &Args) -> Result<Outcome, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.mc.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.mc.workers = w;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    cfg.validate()?;

    let started = Instant::now();
    let mut out = Artifacts::new(&cfg.output.dir, cfg.output.format)?;
    let outcome = match args.command {
        Command::Pc => commands::pc(&cfg, &mut out),
        Command::Iterate => commands::iterate(&cfg, &mut out),
        Command::ExponentSweep => commands::exponent_sweep(&cfg, &mut out),
        Command::Critical => commands::critical(&cfg, &mut out),
        Command::Coupling => commands::coupling(&cfg, &mut out),
        Command::Deviation => commands::deviation(&cfg, &mut out),
    }?;
    out.json("summary.json", &outcome.summary)?;
    let mut files = out.files().to_vec();
    files.push("summary.json".into());
    let manifest = Manifest {
        command: args.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        p_c: outcome.summary.p_c,
        files: &files,
        defects: &outcome.defects,
        fits: &outcome.fits,
    };
    out.json("manifest.json", &manifest)?;
    out.json(
        "run_info.json",
        &RunInfo {
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            workers: cfg.mc.workers,
        },
    )?;
    Ok(outcome)
}

/// Entry point of the binary; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    match execute(&args) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("pass: {}", outcome.summary.pass);
            if outcome.summary.pass {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("drlab: {e}");
            e.exit_code()
        }
    }
}
