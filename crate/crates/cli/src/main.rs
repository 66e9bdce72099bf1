//! `windscale` command-line entry point.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, CalibrateArgs, CleanseArgs, CompareArgs, DfaArgs, FgnArgs, SimulateArgs};

/// Cleansing, characterization and stochastic modelling of 10-minute wind power series.
#[derive(Debug, Parser)]
#[command(name = "windscale", version, about)]
struct Cli {
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every stochastic step. Required by stochastic commands unless set in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply the three cleansing rules; writes cleaned CSV and a JSON report.
    Cleanse(CleanseArgs),
    /// PDF, ACF with surrogate band, spectrum and increment statistics.
    Analyze(AnalyzeArgs),
    /// Detrended fluctuation analysis with crossover detection.
    Dfa(DfaArgs),
    /// Simulate the bistable fractional-noise model.
    Simulate(SimulateArgs),
    /// Estimate model parameters from a cleaned series.
    Calibrate(CalibrateArgs),
    /// Distance metrics between a measured and a simulated series.
    Compare(CompareArgs),
    /// Generate fractional Gaussian noise in the ingestion schema.
    Fgn(FgnArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = match commands::Context::load(cli.config.as_deref(), cli.seed) {
        Ok(c) => c,
        Err(e) => return e.report(),
    };
    let result = match cli.command {
        Command::Cleanse(a) => commands::cleanse(&ctx, a),
        Command::Analyze(a) => commands::analyze(&ctx, a),
        Command::Dfa(a) => commands::dfa(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Calibrate(a) => commands::calibrate(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::Fgn(a) => commands::fgn(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
