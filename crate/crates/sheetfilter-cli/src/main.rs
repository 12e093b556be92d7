use clap::{Parser, ValueEnum};
use sheetfilter::harness::checks::CheckLevel;
use sheetfilter::harness::run::{run, RunOptions, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Filtering of two-parameter signals observed in fractional Brownian sheet noise.
///
/// Exit codes: 0 ok, 1 check failed, 2 invalid config, 3 numerical failure.
#[derive(Parser)]
#[command(name = "sheetfilter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; the built-in default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seeds.master`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Level::Full)]
    check_level: Level,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    /// A quarter of the Monte Carlo samples.
    Fast,
    Full,
}

#[derive(clap::Subcommand, Clone, Copy)]
enum Command {
    /// Simulate signal, noise and observation fields.
    Simulate,
    /// Bayes-formula filter at every grid corner.
    FilterBayes,
    /// Curve-equation filter along each configured path.
    FilterCurve,
    /// Residual of the planar evolution equation at the top corner.
    DmzCheck,
    /// Statistical invariant suite (criteria 4 to 10).
    Properties,
    /// Grid-refinement studies (criteria 1 to 3).
    Convergence,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Command::Simulate => Subcommand::Simulate,
        Command::FilterBayes => Subcommand::FilterBayes,
        Command::FilterCurve => Subcommand::FilterCurve,
        Command::DmzCheck => Subcommand::DmzCheck,
        Command::Properties => Subcommand::Properties,
        Command::Convergence => Subcommand::Convergence,
    };
    let opts = RunOptions {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        jobs: cli.jobs,
        level: match cli.check_level {
            Level::Fast => CheckLevel::Fast,
            Level::Full => CheckLevel::Full,
        },
    };
    ExitCode::from(run(cmd, &opts) as u8)
}
