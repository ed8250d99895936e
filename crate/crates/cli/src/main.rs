// SPDX-License-Identifier: MIT OR Apache-2.0

//! `fcpd`: mean change point detection for functional time series.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 model validation error,
//! 4 internal invariant breach.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fcpd_core::binseg::{ThresholdPolicy, DEFAULT_EXPONENT};

use crate::commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "fcpd", version, about = "Functional CUSUM binary segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect mean change points in a series CSV.
    Detect(DetectArgs),
    /// Simulate a series from a scenario JSON.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo consistency experiment over a scenario family.
    Experiment(ExperimentArgs),
    /// Calibrate a threshold from the pure-noise CUSUM maximum.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ThresholdKind {
    Fixed,
    PowerLaw,
    LogLaw,
}

#[derive(Debug, Args)]
struct PolicyArgs {
    /// Threshold law: fixed ξ = c, power-law ξ = c·n^e, log-law ξ = c·(ln n)^p.
    #[arg(long, value_enum)]
    threshold_kind: Option<ThresholdKind>,
    /// Multiplier c.
    #[arg(long)]
    threshold_c: Option<f64>,
    /// Power-law exponent e, strictly between 0.375 and 0.5.
    #[arg(long, default_value_t = DEFAULT_EXPONENT)]
    threshold_exponent: f64,
    /// Log-law power p (experimental law).
    #[arg(short = 'p', long, default_value_t = 1.0)]
    threshold_p: f64,
}

impl PolicyArgs {
    /// Policy from the flags; `c` falls back to `default_c` when not given.
    fn policy(&self, default_c: Option<f64>) -> Result<Option<ThresholdPolicy<f64>>, Failure> {
        if self.threshold_kind.is_none() && self.threshold_c.is_none() {
            return Ok(None);
        }
        let c = self.threshold_c.or(default_c).ok_or_else(|| {
            Failure::Input(
                "--threshold-c is required (see `fcpd calibrate` for a noise-based value)".into(),
            )
        })?;
        let policy = match self.threshold_kind.unwrap_or(ThresholdKind::PowerLaw) {
            ThresholdKind::Fixed => ThresholdPolicy::fixed(c),
            ThresholdKind::PowerLaw => ThresholdPolicy::power_law(c, self.threshold_exponent),
            ThresholdKind::LogLaw => ThresholdPolicy::log_law(c, self.threshold_p),
        };
        policy.validate()?;
        Ok(Some(policy))
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Series CSV: one observation per row, optional `t=` header of grid points.
    #[arg(long)]
    input: PathBuf,
    /// Result JSON; printed to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// First-level CUSUM profile CSV; defaults to `<output stem>.profile.csv`.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    scenario: PathBuf,
    /// Series CSV; the ground truth goes to `<stem>.truth.json`.
    #[arg(long)]
    output: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, env = "FCPD_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Scenario family JSON.
    #[arg(long)]
    scenario: PathBuf,
    /// Report JSON; per-replication rows go to `<stem>.records.csv`.
    #[arg(long)]
    output: PathBuf,
    /// Replications per sample size (overrides the family).
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed (overrides the family).
    #[arg(long, env = "FCPD_SEED")]
    seed: Option<u64>,
    /// Worker threads for replications.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Scenario or scenario family JSON; its grid and noise model are used.
    #[arg(long)]
    scenario: PathBuf,
    /// Calibration JSON; printed to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Sample size at which the quantile is taken.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Quantile in (0, 1].
    #[arg(long, default_value_t = 0.95)]
    quantile: f64,
    #[arg(long, env = "FCPD_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Exponent of the suggested power-law policy.
    #[arg(long, default_value_t = DEFAULT_EXPONENT)]
    threshold_exponent: f64,
    /// Also tabulate the noise maximum at these sample sizes.
    #[arg(long, value_delimiter = ',')]
    noise_max_n: Vec<usize>,
    /// Maximize over every segment instead of the full one (n ≤ 30).
    #[arg(long)]
    exhaustive_noise_max: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| match cli.command {
        Command::Detect(a) => commands::detect(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
    });
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
        Err(_) => ExitCode::from(4),
    }
}
