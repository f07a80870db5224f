//! `gkdv` — run orchestration for the generalized-KdV laboratory.
//!
//! Usage: `gkdv <simulate|picard|regularity|validate> --config <path>
//! [--out <dir>] [--seed <u64>]`. The environment variable `GKDV_THREADS`
//! caps data-parallel diagnostic workers (default: hardware count); results
//! are bit-identical regardless of the cap.

mod config;
mod manifest;
mod out;
mod run;
mod snapshot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, Command as RunCommand};

#[derive(Parser)]
#[command(name = "gkdv", version, about = "Pseudospectral laboratory for the generalized KdV equation with fractional-power nonlinearity")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the run configuration (section.key = value format)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides outputs.dir; default: gkdv-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized validation data (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Integrate the equation and write per-slice diagnostics
    Simulate(CommonArgs),
    /// Run the Duhamel fixed-point iteration with contraction reporting
    Picard(CommonArgs),
    /// Run the propagation-of-regularity experiment
    Regularity(CommonArgs),
    /// Run the built-in invariant suite
    Validate(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        CliCommand::Simulate(a) => (RunCommand::Simulate, a),
        CliCommand::Picard(a) => (RunCommand::Picard, a),
        CliCommand::Regularity(a) => (RunCommand::Regularity, a),
        CliCommand::Validate(a) => (RunCommand::Validate, a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("gkdv: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match parse_config(&text, Some(cmd)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gkdv: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gkdv-out"));

    let outcome = run::run(&cfg, &out_dir);
    ExitCode::from(outcome.exit_code.clamp(0, 255) as u8)
}
