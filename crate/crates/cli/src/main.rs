//! `samplex`: distortion, bounds, schemes, simulation and search from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 I/O.

mod commands;
mod config;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::Ctx;
use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "samplex", version, about = "Distortion of noisy sampling of periodic bandlimited Gaussian signals")]
struct Cli {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Average and variance of the MMSE distortion for one scheme.
    Distortion(commands::DistortionArgs),
    /// Lower and upper bounds on the distortion for M samples.
    Bounds(commands::BoundsArgs),
    /// Generate a scheme and report the optimality conditions.
    Points(commands::PointsArgs),
    /// Report the optimality conditions of a given scheme.
    Check(commands::PointsArgs),
    /// Monte Carlo estimate of the distortion moments.
    Simulate(commands::SimulateArgs),
    /// Exhaustive search over subsets of the integer grid.
    SearchDiscrete(commands::SearchArgs),
    /// Distortion sweep over M or over the second instant, as CSV.
    Sweep(commands::SweepArgs),
    /// Rate bound and sampling/compression decomposition.
    Compress(commands::CompressArgs),
    /// Regenerate figure CSVs and a plotting script.
    Figures(commands::FiguresArgs),
}

const THREADS_VAR: &str = "SAMPLEX_THREADS";

fn configure_threads() -> Result<()> {
    if let Ok(text) = std::env::var(THREADS_VAR) {
        let n: usize = text.trim().parse().with_context(|| format!("{THREADS_VAR}={text:?} is not a count"))?;
        if n == 0 {
            anyhow::bail!("{THREADS_VAR} must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let ctx = Ctx { config, seed: cli.seed, out: cli.out };
    match &cli.command {
        Command::Distortion(a) => commands::distortion(&ctx, a),
        Command::Bounds(a) => commands::bounds(&ctx, a),
        Command::Points(a) => commands::points(&ctx, a),
        Command::Check(a) => commands::check(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::SearchDiscrete(a) => commands::search_discrete(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Compress(a) => commands::compress(&ctx, a),
        Command::Figures(a) => commands::figures(&ctx, a),
    }
}

/// Variant name of a library error, e.g. `FilterViolation`.
fn kind(e: &samplex::Error) -> String {
    let debug = format!("{e:?}");
    debug.split([' ', '(', '{']).next().unwrap_or_default().to_string()
}

fn exit_code(err: &anyhow::Error) -> (u8, Option<String>) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<samplex::Error>() {
            return (if e.is_numerical() { 3 } else { 2 }, Some(kind(e)));
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (1, None);
        }
    }
    (2, None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            match kind {
                Some(k) => eprintln!("error[{k}]: {err:#}"),
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::from(code)
        }
    }
}
