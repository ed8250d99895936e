// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use fcpd_core::binseg::{detect_with_threshold, threshold_value, ThresholdPolicy};
use fcpd_core::cusum::{cusum_profile, PrefixSums, Segment};
use fcpd_core::evalsuite::{
    calibrate_threshold, noise_max_diagnostic, run_family, ExperimentFamily, NoiseMaxRow,
};
use fcpd_core::io::{read_series_csv, write_series_csv};
use fcpd_core::simgen::{simulate as run_simulation, GridSpec, MeanSpec, NoiseModel, ScenarioSpec};
use fcpd_core::{Error, FunctionalSeries, Grid};
use serde::{Deserialize, Serialize};

use crate::{CalibrateArgs, DetectArgs, ExperimentArgs, SimulateArgs};

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Validation(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Validation(_) => 3,
            Self::Internal(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) | Self::Validation(m) | Self::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(violations) => {
                let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
                Self::Validation(format!(
                    "scenario violates {} model condition(s):\n{}",
                    violations.len(),
                    lines.join("\n")
                ))
            }
            Error::Stationarity { .. } => Self::Validation(e.to_string()),
            Error::Index { .. } => Self::Internal(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

fn input_error(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| input_error(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_reader(open(path)?).map_err(|e| input_error(path, e))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| input_error(path, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file_mut());
        fill(&mut out)?;
        out.flush().map_err(|e| input_error(path, e))?;
    }
    tmp.persist(path).map_err(|e| input_error(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    write_atomic(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value).map_err(|e| input_error(path, e))?;
        writeln!(out).map_err(|e| input_error(path, e))
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// `dir/stem.json` → `dir/stem.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> u64 {
    flag.or(file).unwrap_or(0)
}

pub fn detect(args: &DetectArgs) -> Result<(), Failure> {
    let series: FunctionalSeries<f64> =
        read_series_csv(open(&args.input)?).map_err(|e| input_error(&args.input, e))?;
    let n = series.len();
    if n < 2 {
        return Err(Error::SegmentTooShort { l: 0, u: n, n }.into());
    }
    let policy = args.policy.policy(None)?.ok_or_else(|| {
        Failure::Input(
            "a threshold is required: pass --threshold-c (and optionally --threshold-kind)".into(),
        )
    })?;
    let threshold = threshold_value(&policy, n)?;
    let result = detect_with_threshold(&series, threshold)?;

    match &args.output {
        Some(path) => write_json(path, &result)?,
        None => print_json(&result)?,
    }
    let profile_path = args
        .profile
        .clone()
        .or_else(|| args.output.as_ref().map(|p| sibling(p, "profile.csv")));
    if let Some(path) = profile_path {
        let prefix = PrefixSums::build(&series)?;
        let profile = cusum_profile(&prefix, Segment::new(0, n))?;
        write_atomic(&path, |out| {
            let io = |e: io::Error| input_error(&path, e);
            writeln!(out, "k,norm,threshold").map_err(io)?;
            for (k, v) in profile.split_points().zip(&profile.norms) {
                writeln!(out, "{k},{v:?},{threshold:?}").map_err(io)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Ground truth written next to a simulated series.
#[derive(Debug, Serialize)]
struct Truth<'a> {
    n: usize,
    change_points: &'a [usize],
    means: &'a [MeanSpec],
    grid: &'a GridSpec,
    seed: u64,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut spec: ScenarioSpec = read_json(&args.scenario)?;
    spec.seed = resolve_seed(args.seed, Some(spec.seed));
    let sim = run_simulation::<f64>(&spec)?;
    write_atomic(&args.output, |out| Ok(write_series_csv(&sim.series, out)?))?;
    let truth = Truth {
        n: spec.n,
        change_points: &spec.change_points,
        means: &spec.means,
        grid: &spec.grid,
        seed: spec.seed,
    };
    write_json(&sibling(&args.output, "truth.json"), &truth)
}

pub fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let family: ExperimentFamily = read_json(&args.scenario)?;
    let default_c = family.calibration.map(|_| 1.0);
    let policy = args.policy.policy(default_c)?;
    let seed = resolve_seed(args.seed, family.seed);

    let start = Instant::now();
    let report = run_family(&family, policy, args.reps, Some(seed), args.jobs)?;
    let elapsed = start.elapsed();

    write_json(&args.output, &report)?;
    write_atomic(&sibling(&args.output, "records.csv"), |out| {
        Ok(report.write_records_csv(out)?)
    })?;

    if let Some(cal) = &report.calibration {
        println!(
            "calibrated: q{:.2} of the noise maximum at n={} over {} reps = {:.4}",
            cal.quantile, cal.n, cal.reps, cal.value
        );
    }
    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10} {:>12}",
        "n", "xi_n", "f_n", "P[m=m]", "P[B_n]", "median_H"
    );
    for a in &report.aggregates {
        println!(
            "{:>8} {:>10.4} {:>10.2} {:>10.3} {:>10.3} {:>12}",
            a.n, a.threshold, a.radius, a.p_count, a.p_event, a.hausdorff_median
        );
    }
    for (n, secs) in &report.timing.seconds {
        eprintln!("n={n}: {secs:.2}s");
    }
    eprintln!("total: {:.2}s", elapsed.as_secs_f64());
    Ok(())
}

/// The parts of a scenario or family that define pure noise.
#[derive(Debug, Deserialize)]
struct NoiseSource {
    grid: GridSpec,
    #[serde(default)]
    noise: NoiseModel,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Calibration {
    n: usize,
    reps: usize,
    quantile: f64,
    seed: u64,
    value: f64,
    /// Power law passing through `value` at `n`; absent when `value` is 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    suggested_policy: Option<ThresholdPolicy<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    noise_max: Vec<NoiseMaxRow>,
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), Failure> {
    let source: NoiseSource = read_json(&args.scenario)?;
    let seed = resolve_seed(args.seed, source.seed);
    let grid: Arc<Grid<f64>> = source.grid.build()?;
    let value = calibrate_threshold(
        &source.noise,
        &grid,
        args.n,
        args.reps,
        args.quantile,
        seed,
        args.jobs,
    )?;
    let noise_max = if args.noise_max_n.is_empty() {
        Vec::new()
    } else {
        noise_max_diagnostic(
            &source.noise,
            &grid,
            &args.noise_max_n,
            args.reps,
            seed,
            args.exhaustive_noise_max,
            args.jobs,
        )?
    };
    ThresholdPolicy::power_law(1.0, args.threshold_exponent).validate()?;
    let suggested_policy = ThresholdPolicy::power_law(1.0, args.threshold_exponent)
        .anchored_at(value, args.n)
        .ok();
    let out = Calibration {
        n: args.n,
        reps: args.reps,
        quantile: args.quantile,
        seed,
        value,
        suggested_policy,
        noise_max,
    };
    match &args.output {
        Some(path) => write_json(path, &out),
        None => print_json(&out),
    }
}
