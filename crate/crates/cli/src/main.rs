//! `dyce`: configuration search, sweeps and controller replay over exit traces.

mod commands;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dyce_core::{Algorithm, ThresholdMethod};

/// Exit codes: 0 ok, 2 bad input, 3 search failure, 4 internal inconsistency.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn search(message: impl ToString) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }

    pub fn internal(message: impl ToString) -> Self {
        Self {
            code: 4,
            message: message.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "dyce", version, about = "Exit-configuration search and simulation for multi-exit models")]
pub struct Cli {
    /// Trace directory (or manifest.json path)
    #[arg(long, global = true)]
    trace: Option<PathBuf>,

    /// Output file or directory, depending on the command
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for `synthesize`
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for parallel sweeps (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Search one configuration for a given lambda
    Search(SearchArgs),
    /// Search across a lambda grid and write the frontier and config store
    Sweep(SweepArgs),
    /// Replay the exit controller for a stored configuration
    Simulate(SimulateArgs),
    /// Uniform-threshold baseline with a single exit type
    Baseline(BaselineArgs),
    /// Accuracy and complexity of every exit used on its own
    Standalone,
    /// Load and validate a trace
    Validate,
    /// Render frontier.csv as an SVG scatter plot
    Plot(PlotArgs),
    /// Write a synthetic trace (test helper)
    Synthesize(SynthesizeArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum AlgoArg {
    SinglePass,
    Iterative,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ThresholdArg {
    Exact,
    Golden,
}

#[derive(Args, Debug, Clone)]
pub struct SearchOptions {
    #[arg(long, value_enum, default_value = "single-pass")]
    algo: AlgoArg,
    #[arg(long, value_enum, default_value = "exact")]
    threshold: ThresholdArg,
    #[arg(long, default_value_t = 1e-4)]
    golden_tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_rounds: usize,
}

impl SearchOptions {
    pub fn settings(&self) -> dyce_core::SearchSettings {
        dyce_core::SearchSettings {
            algorithm: match self.algo {
                AlgoArg::SinglePass => Algorithm::SinglePass,
                AlgoArg::Iterative => Algorithm::Iterative,
            },
            threshold_method: match self.threshold {
                ThresholdArg::Exact => ThresholdMethod::ExactScan,
                ThresholdArg::Golden => ThresholdMethod::GoldenSection,
            },
            golden_tolerance: self.golden_tol,
            max_rounds: self.max_rounds,
        }
    }
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    options: SearchOptions,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    #[arg(long, default_value_t = 1.0)]
    end: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[command(flatten)]
    options: SearchOptions,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// config.json to replay
    #[arg(long)]
    config: PathBuf,
    /// Override the lambda stored in the config
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    k_fixed: usize,
    /// Number of evenly spaced thresholds in [0, 1]
    #[arg(long = "grid", default_value_t = 1001)]
    grid_size: usize,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// frontier.csv written by `sweep`; frontier_pareto.csv beside it is drawn too
    #[arg(long)]
    frontier: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    #[arg(long)]
    samples: usize,
    /// Candidates per position, comma separated (e.g. 2,2,1)
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<usize>,
    #[arg(long, default_value_t = 0.8)]
    calibration: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
