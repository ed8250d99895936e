// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo evaluation of binary segmentation.
//!
//! A replication simulates one series, detects change points and records
//! whether the count is right and every sorted-matched location error is within
//! the localization radius `f_n`. Replications carry seeds derived from a master
//! seed and are reduced in index order, so reports do not depend on scheduling.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binseg::{detect_prefix, localization_radius, threshold_value, ThresholdPolicy};
use crate::cusum::{cusum_profile, PrefixSums, Segment};
use crate::error::{Error, Result};
use crate::hilbert::{Curve, FunctionalSeries, Grid};
use crate::simgen::rng::{derive_seed, seeded};
use crate::simgen::{
    validate_spec, GridSpec, MeanSpec, ModelBounds, NoiseModel, NoiseSampler, ScenarioSpec,
};

/// Largest `n` for the all-segments noise maximum (cubic in `n`).
pub const EXHAUSTIVE_MAX_N: usize = 30;

/// Seed domain for pure-noise runs, kept apart from scenario replications.
const NOISE_DOMAIN: u64 = 1 << 48;

/// Symmetric Hausdorff distance between two index sets.
///
/// Both empty gives 0; exactly one empty gives `+∞`.
pub fn hausdorff(est: &[usize], truth: &[usize]) -> f64 {
    match (est.is_empty(), truth.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed(est, truth).max(directed(truth, est)) as f64,
    }
}

fn directed(from: &[usize], to: &[usize]) -> usize {
    from.iter()
        .map(|&a| {
            to.iter()
                .map(|&b| a.abs_diff(b))
                .min()
                .unwrap_or(usize::MAX)
        })
        .max()
        .unwrap_or(0)
}

/// `max_j |v̂_j − v_j|` after sorting both sets; `None` when the counts differ.
pub fn matched_error(est: &[usize], truth: &[usize]) -> Option<usize> {
    if est.len() != truth.len() {
        return None;
    }
    let mut a = est.to_vec();
    let mut b = truth.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    Some(
        a.iter()
            .zip(&b)
            .map(|(x, y)| x.abs_diff(*y))
            .max()
            .unwrap_or(0),
    )
}

/// Wilson score interval for `successes` out of `trials` at `z` standard errors.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical quantile by the nearest-rank rule: the `⌈q·r⌉`-th smallest of `r`
/// values, so `q = 1` is the maximum.
pub fn empirical_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// Outcome of one generate → detect cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub m_true: usize,
    pub m_hat: usize,
    pub change_points: Vec<usize>,
    pub matched_error: Option<usize>,
    #[serde(with = "crate::serde_float")]
    pub hausdorff: f64,
    /// Correct count and every matched error within `f_n`.
    pub within_f_n: bool,
}

/// Per-`n` summary; recomputable from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub reps: usize,
    #[serde(with = "crate::serde_float")]
    pub threshold: f64,
    pub radius: f64,
    pub p_count: f64,
    pub p_count_ci: (f64, f64),
    pub p_event: f64,
    pub p_event_ci: (f64, f64),
    #[serde(with = "crate::serde_float")]
    pub hausdorff_mean: f64,
    #[serde(with = "crate::serde_float")]
    pub hausdorff_median: f64,
    #[serde(with = "crate::serde_float")]
    pub hausdorff_p95: f64,
}

/// z for the reported 95% Wilson intervals.
pub const REPORT_Z: f64 = 1.959_963_984_540_054;

/// Summarizes the records of one sample size.
pub fn aggregate(
    n: usize,
    threshold: f64,
    radius: f64,
    records: &[&ReplicationRecord],
) -> Aggregate {
    let reps = records.len();
    let counts = records.iter().filter(|r| r.m_hat == r.m_true).count();
    let events = records.iter().filter(|r| r.within_f_n).count();
    let h: Vec<f64> = records.iter().map(|r| r.hausdorff).collect();
    let frac = |k: usize| {
        if reps == 0 {
            0.0
        } else {
            k as f64 / reps as f64
        }
    };
    let (mean, median, p95) = if h.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mut sorted = h.clone();
        sorted.sort_by(f64::total_cmp);
        // Distances are integers or +∞, so this sum is exact in any order.
        (
            sorted.iter().sum::<f64>() / reps as f64,
            empirical_quantile(&sorted, 0.5),
            empirical_quantile(&sorted, 0.95),
        )
    };
    Aggregate {
        n,
        reps,
        threshold,
        radius,
        p_count: frac(counts),
        p_count_ci: wilson_interval(counts, reps, REPORT_Z),
        p_event: frac(events),
        p_event_ci: wilson_interval(events, reps, REPORT_Z),
        hausdorff_mean: mean,
        hausdorff_median: median,
        hausdorff_p95: p95,
    }
}

/// Pure-noise calibration settings: the threshold is anchored so that
/// `ξ_n = quantile` of the noise maximum at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub n: usize,
    pub reps: usize,
    pub quantile: f64,
}

/// Scenario template evaluated over a list of sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFamily {
    pub n_values: Vec<usize>,
    pub grid: GridSpec,
    /// Change point locations as fractions of `n`; `v_j = round(fraction_j·n)`.
    pub change_fractions: Vec<f64>,
    pub means: Vec<MeanSpec>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub omega_label: f64,
    #[serde(default)]
    pub bounds: ModelBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<ThresholdPolicy<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentFamily {
    pub fn instantiate(&self, n: usize, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            n,
            grid: self.grid.clone(),
            change_points: self
                .change_fractions
                .iter()
                .map(|f| (f * n as f64).round() as usize)
                .collect(),
            means: self.means.clone(),
            noise: self.noise.clone(),
            seed,
            omega_label: self.omega_label,
            bounds: self.bounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub n: usize,
    pub reps: usize,
    pub quantile: f64,
    pub value: f64,
}

/// Wall-clock seconds per sample size. Kept out of the serialized report so that
/// reports are byte-identical across runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timing {
    pub seconds: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub family: ExperimentFamily,
    pub policy: ThresholdPolicy<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationOutcome>,
    pub seed: u64,
    pub reps: usize,
    pub aggregates: Vec<Aggregate>,
    pub records: Vec<ReplicationRecord>,
    #[serde(skip)]
    pub timing: Timing,
}

impl EvalReport {
    pub fn aggregate_for(&self, n: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n)
    }

    /// Rebuilds the aggregates from the records.
    pub fn recompute_aggregates(&self) -> Vec<Aggregate> {
        self.aggregates
            .iter()
            .map(|a| {
                let recs: Vec<&ReplicationRecord> =
                    self.records.iter().filter(|r| r.n == a.n).collect();
                aggregate(a.n, a.threshold, a.radius, &recs)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per replication.
    pub fn write_records_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "n,rep,seed,m_true,m_hat,matched_error,hausdorff,within_f_n,change_points"
        )?;
        for r in &self.records {
            let matched = r.matched_error.map_or(String::new(), |e| e.to_string());
            let cps: Vec<String> = r.change_points.iter().map(ToString::to_string).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.rep,
                r.seed,
                r.m_true,
                r.m_hat,
                matched,
                r.hausdorff,
                r.within_f_n,
                cps.join(";")
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

fn run_in_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn series_from(
    grid: &Arc<Grid<f64>>,
    means: &[Curve<f64>],
    errors: Vec<Vec<f64>>,
) -> FunctionalSeries<f64> {
    let curves = means
        .iter()
        .zip(errors)
        .map(|(m, mut e)| {
            e.iter_mut().zip(m.values()).for_each(|(x, &mu)| *x += mu);
            Curve::from_trusted(grid, e)
        })
        .collect();
    FunctionalSeries::new(Arc::clone(grid), curves).expect("shared grid")
}

/// For each `n` in the family, runs `reps` independent replications and
/// evaluates the event `{m̂ = m, max_j |v̂_j − v_j| ≤ f_n}`.
pub fn run_consistency_experiment(
    family: &ExperimentFamily,
    policy: &ThresholdPolicy<f64>,
    reps: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<EvalReport> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    policy.validate()?;
    let grid: Arc<Grid<f64>> = family.grid.build()?;

    let mut records = Vec::with_capacity(reps * family.n_values.len());
    let mut aggregates = Vec::with_capacity(family.n_values.len());
    let mut timing = Timing::default();
    for &n in &family.n_values {
        let start = Instant::now();
        let spec = family.instantiate(n, seed);
        let violations = validate_spec(&spec);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let threshold = threshold_value(policy, n)?;
        let radius = localization_radius(n as f64, family.omega_label)?;
        let sampler = spec.noise.prepare(&grid)?;
        let means = spec.index_means(&grid)?;
        let truth = spec.change_points.clone();

        let batch: Vec<ReplicationRecord> = run_in_pool(jobs, || {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let rep_seed = derive_seed(seed, n as u64, rep as u64);
                    let errors = sampler.errors(n, &mut seeded(rep_seed));
                    let series = series_from(&grid, &means, errors);
                    let prefix = PrefixSums::build(&series)?;
                    let found = detect_prefix(&prefix, threshold)?.change_points;
                    let matched = matched_error(&found, &truth);
                    let within = matched.is_some_and(|e| (e as f64) <= radius);
                    Ok(ReplicationRecord {
                        n,
                        rep,
                        seed: rep_seed,
                        m_true: truth.len(),
                        m_hat: found.len(),
                        hausdorff: hausdorff(&found, &truth),
                        matched_error: matched,
                        within_f_n: within,
                        change_points: found,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })??;

        let refs: Vec<&ReplicationRecord> = batch.iter().collect();
        aggregates.push(aggregate(n, threshold, radius, &refs));
        records.extend(batch);
        timing.seconds.push((n, start.elapsed().as_secs_f64()));
    }

    Ok(EvalReport {
        family: family.clone(),
        policy: *policy,
        calibration: None,
        seed,
        reps,
        aggregates,
        records,
        timing,
    })
}

/// Resolves the family's threshold (calibrating when requested) and runs it.
///
/// `reps` and `seed` override the family's own values; `policy` overrides the
/// family's policy. A power-law policy at the default exponent is used when
/// neither supplies one.
pub fn run_family(
    family: &ExperimentFamily,
    policy: Option<ThresholdPolicy<f64>>,
    reps: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<EvalReport> {
    let reps = reps.or(family.reps).unwrap_or(100);
    let seed = seed.or(family.seed).unwrap_or(0);
    let base = policy
        .or(family.policy)
        .unwrap_or(ThresholdPolicy::power_law(
            1.0,
            crate::binseg::DEFAULT_EXPONENT,
        ));

    let (policy, calibration) = match family.calibration {
        Some(cal) => {
            let grid: Arc<Grid<f64>> = family.grid.build()?;
            let value = calibrate_threshold(
                &family.noise,
                &grid,
                cal.n,
                cal.reps,
                cal.quantile,
                seed,
                jobs,
            )?;
            let anchored = base.anchored_at(value, cal.n)?;
            (
                anchored,
                Some(CalibrationOutcome {
                    n: cal.n,
                    reps: cal.reps,
                    quantile: cal.quantile,
                    value,
                }),
            )
        }
        None => (base, None),
    };

    let mut report = run_consistency_experiment(family, &policy, reps, seed, jobs)?;
    report.calibration = calibration;
    Ok(report)
}

/// Largest CUSUM norm of a series: over the full segment `(0, n)`, or with
/// `exhaustive` over every segment `0 ≤ l < k < u ≤ n`.
pub fn max_cusum_norm(prefix: &PrefixSums<f64>, exhaustive: bool) -> Result<f64> {
    let n = prefix.n();
    if !exhaustive {
        return Ok(cusum_profile(prefix, Segment::new(0, n))?.max_norm);
    }
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "exhaustive noise maximum is limited to n ≤ {EXHAUSTIVE_MAX_N}, got {n}"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for l in 0..n {
        for u in (l + 2)..=n {
            best = best.max(cusum_profile(prefix, Segment::new(l, u))?.max_norm);
        }
    }
    Ok(best)
}

fn noise_maxima(
    sampler: &NoiseSampler<f64>,
    n: usize,
    reps: usize,
    seed: u64,
    exhaustive: bool,
) -> Result<Vec<f64>> {
    let grid = Arc::clone(sampler.grid());
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, NOISE_DOMAIN | n as u64, rep as u64);
            let rows = sampler.errors(n, &mut seeded(rep_seed));
            let series = FunctionalSeries::from_rows(Arc::clone(&grid), rows)?;
            max_cusum_norm(&PrefixSums::build(&series)?, exhaustive)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMaxRow {
    pub n: usize,
    pub reps: usize,
    pub q95: f64,
    pub median: f64,
    pub max: f64,
}

/// Empirical distribution of the pure-noise CUSUM maximum as `n` grows.
pub fn noise_max_diagnostic(
    model: &NoiseModel,
    grid: &Arc<Grid<f64>>,
    n_values: &[usize],
    reps: usize,
    seed: u64,
    exhaustive: bool,
    jobs: Option<usize>,
) -> Result<Vec<NoiseMaxRow>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let sampler = model.prepare(grid)?;
    n_values
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::InvalidArgument(format!("n = {n} is below 2")));
            }
            let stats = run_in_pool(jobs, || noise_maxima(&sampler, n, reps, seed, exhaustive))??;
            Ok(NoiseMaxRow {
                n,
                reps,
                q95: empirical_quantile(&stats, 0.95),
                median: empirical_quantile(&stats, 0.5),
                max: empirical_quantile(&stats, 1.0),
            })
        })
        .collect()
}

/// The `quantile` of the full-segment pure-noise CUSUM maximum at sample size `n`.
pub fn calibrate_threshold(
    model: &NoiseModel,
    grid: &Arc<Grid<f64>>,
    n: usize,
    reps: usize,
    quantile: f64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<f64> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile {quantile} must lie in (0, 1]"
        )));
    }
    if reps == 0 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "calibration needs reps ≥ 1 and n ≥ 2 (got reps = {reps}, n = {n})"
        )));
    }
    let sampler = model.prepare(grid)?;
    let stats = run_in_pool(jobs, || noise_maxima(&sampler, n, reps, seed, false))??;
    Ok(empirical_quantile(&stats, quantile))
}
