// SPDX-License-Identifier: Apache-2.0

//! `projcore` command-line tool.
//!
//! Exit codes: 0 success, 2 bad arguments or config, 3 unreadable data,
//! 4 construction or solver failure, 5 verification found a violation,
//! 6 experiment finished with failed cells.

mod commands;
mod files;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "projcore", version, about = "Coresets for projective clustering and robust regression")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "PROJCORE_WORKERS")]
    workers: Option<usize>,

    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated dataset as CSV.
    Synth(SynthArgs),
    /// Build an L∞ or sampled L2 coreset for projective clustering.
    Coreset(CoresetArgs),
    /// Build a coreset for robust regression.
    RegressionCoreset(RegressionCoresetArgs),
    /// Solve clustering or regression on the full data or a coreset.
    Solve(SolveArgs),
    /// Check a coreset against random and adversarial queries.
    Verify(VerifyArgs),
    /// Run a coreset-versus-uniform experiment from a TOML config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Points on the x-axis plus outliers.
    Synthetic,
    /// Many points at the origin and one far away.
    TwoCenter,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    kind: SynthKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of points (two-center) or axis points (synthetic).
    #[arg(long)]
    n: Option<usize>,
    /// Outliers for the synthetic kind.
    #[arg(long, default_value_t = 10)]
    outliers: usize,
    /// Distance of the far point for two-center data.
    #[arg(long, default_value_t = 1000)]
    far: u64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    output: std::path::PathBuf,
}

/// Where the data comes from.
#[derive(Debug, Args)]
struct InputArgs {
    /// Headered numeric CSV.
    #[arg(long)]
    input: std::path::PathBuf,
    /// Feature columns (comma separated); default is every column except the label.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Integer grid bound Δ; inferred when every coordinate is an integer.
    #[arg(long)]
    grid: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Linf,
    L2,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, value_enum, default_value = "linf")]
    mode: Mode,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Constant in the sample-size formula.
    #[arg(long, default_value_t = 1.0, conflicts_with = "size")]
    c_sample: f64,
    /// Draw exactly this many samples instead of using the formula.
    #[arg(long)]
    size: Option<usize>,
    /// Sum the weights of repeated samples into one row.
    #[arg(long)]
    merge: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CoresetArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    j: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Distance exponent for the reported guarantee.
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    #[command(flatten)]
    sample: SampleArgs,
    /// Band-floor exponent for k >= 2.
    #[arg(long, default_value_t = 2.0)]
    c_exp: f64,
    /// Recursion node cap for k >= 2.
    #[arg(long, default_value_t = 2_000_000)]
    node_budget: usize,
    /// Project off-flat data onto its best-fit j-flat instead of using its hull.
    #[arg(long)]
    project: bool,
    #[arg(long)]
    output: std::path::PathBuf,
}

#[derive(Debug, Args)]
struct LossArgs {
    /// cauchy, welsch, huber, geman-mcclure, tukey, l1-l2, fair, concave or power.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Exponent of the power loss, or of plain distances when no loss is given.
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Debug, Args)]
struct RegressionCoresetArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    label: String,
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(long)]
    output: std::path::PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Coreset file (`index,weight`); solves on the full data when absent.
    #[arg(long)]
    coreset: Option<std::path::PathBuf>,
    /// Label column: solve robust regression instead of clustering.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 6)]
    em_steps: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the solution as JSON here instead of standard output.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    coreset: std::path::PathBuf,
    #[arg(long, default_value_t = 1)]
    j: usize,
    /// With k >= 2, check cylinder coverage with expansion `xi` instead of the ratio.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    #[arg(long, default_value_t = 32.0)]
    xi: f64,
    /// Check regression residuals under `--loss` instead of flat distances.
    #[arg(long, requires = "loss")]
    label: Option<String>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Override the bound the observed ratio is compared against.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not start {n} workers: {e}");
            return ExitCode::from(4);
        }
    }
    let outcome = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Coreset(a) => commands::coreset(a),
        Command::RegressionCoreset(a) => commands::regression_coreset(a),
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.error);
            ExitCode::from(e.code)
        }
    }
}
