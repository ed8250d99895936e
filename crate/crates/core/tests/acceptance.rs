// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance run: every criterion prints one `PASS`/`FAIL` line with the
//! measured quantity, and the process exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fcpd_core::binseg::{
    detect_with_threshold, threshold_value, ThresholdPolicy, DEFAULT_EXPONENT,
};
use fcpd_core::cusum::{cusum_profile, theta_profile, PrefixSums, Segment};
use fcpd_core::evalsuite::{
    calibrate_threshold, noise_max_diagnostic, run_consistency_experiment, wilson_interval,
    EvalReport, ExperimentFamily,
};
use fcpd_core::simgen::rng::seeded;
use fcpd_core::simgen::{
    gen_series, GridSpec, Kernel, MeanSpec, ModelBounds, NoiseModel, ScenarioSpec,
    ScoreDistribution, Spectrum,
};
use fcpd_core::{Curve, FunctionalSeries, Grid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 20_240_601;

/// Criterion 1: relative agreement of engine and direct summation.
const ORACLE_REL_TOL: f64 = 1e-10;
/// Criterion 5: ℬ_n monotonicity band in standard errors, and the n = 1000 floor.
const WILSON_Z: f64 = 2.0;
const EVENT_FLOOR: f64 = 0.8;
/// Criterion 6: largest admissible false-positive fraction.
const FALSE_POSITIVE_CEIL: f64 = 0.10;
/// Criterion 7: largest admissible q95(1600) / q95(100).
const NOISE_GROWTH_CEIL: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

// ---------------------------------------------------------------------------
// Random noiseless configurations
// ---------------------------------------------------------------------------

/// Random smooth curve: a few sine/cosine terms with Gaussian-ish coefficients.
fn random_shape(rng: &mut ChaCha8Rng, grid: &Arc<Grid<f64>>) -> Vec<f64> {
    let coef: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shift: f64 = rng.random_range(-1.0..1.0);
    grid.points()
        .iter()
        .map(|&t| {
            let tau = std::f64::consts::TAU;
            shift
                + coef[0] * (tau * t).sin()
                + coef[1] * (tau * t).cos()
                + coef[2] * (2.0 * tau * t).sin()
                + coef[3] * (3.0 * tau * t).cos()
        })
        .collect()
}

/// Mean vectors whose consecutive jumps have norm in `[min_jump, 3·min_jump]`.
fn random_means(
    rng: &mut ChaCha8Rng,
    grid: &Arc<Grid<f64>>,
    count: usize,
    min_jump: f64,
) -> Vec<Vec<f64>> {
    let mut current = random_shape(rng, grid);
    let mut out = vec![current.clone()];
    for _ in 1..count {
        let mut jump = random_shape(rng, grid);
        let norm = grid.sq_norm(&jump).sqrt();
        let target = rng.random_range(min_jump..3.0 * min_jump);
        jump.iter_mut().for_each(|x| *x *= target / norm);
        current = current.iter().zip(&jump).map(|(a, b)| a + b).collect();
        out.push(current.clone());
    }
    out
}

/// `m` change points in `(0, n)` with every gap (including the ends) at least `spacing`.
fn random_change_points(rng: &mut ChaCha8Rng, n: usize, m: usize, spacing: usize) -> Vec<usize> {
    let slack = n - spacing * (m + 1);
    let mut extra: Vec<usize> = (0..m).map(|_| rng.random_range(0..=slack)).collect();
    extra.sort_unstable();
    extra
        .iter()
        .enumerate()
        .map(|(j, e)| spacing * (j + 1) + e)
        .collect()
}

fn index_curves(
    grid: &Arc<Grid<f64>>,
    n: usize,
    cps: &[usize],
    means: &[Vec<f64>],
) -> Vec<Curve<f64>> {
    (1..=n)
        .map(|i| {
            let seg = cps.partition_point(|&v| v < i);
            Curve::new(grid, means[seg].clone()).unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Criterion 1
// ---------------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(MASTER_SEED ^ 1);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let g = rng.random_range(1..=20);
        let grid = Arc::new(Grid::uniform(g).unwrap());
        let cps_count = rng.random_range(0..=3.min(n - 1));
        let mut cps: Vec<usize> = (0..cps_count).map(|_| rng.random_range(1..n)).collect();
        cps.sort_unstable();
        cps.dedup();
        let means = random_means(&mut rng, &grid, cps.len() + 1, 1.0);
        let scale: f64 = rng.random_range(0.1..3.0);
        let rows: Vec<Vec<f64>> = index_curves(&grid, n, &cps, &means)
            .into_iter()
            .map(|c| {
                c.values()
                    .iter()
                    .map(|m| m + scale * rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let series = FunctionalSeries::from_rows(Arc::clone(&grid), rows.clone()).unwrap();
        let prefix = PrefixSums::build(&series).unwrap();

        for l in 0..n {
            for u in (l + 2)..=n {
                let profile = cusum_profile(&prefix, Segment::new(l, u)).unwrap();
                let total: Vec<f64> = (0..g)
                    .map(|c| rows[l..u].iter().map(|r| r[c]).sum())
                    .collect();
                let mut partial = vec![0.0; g];
                for k in (l + 1)..u {
                    partial
                        .iter_mut()
                        .zip(&rows[k - 1])
                        .for_each(|(p, x)| *p += x);
                    let (kl, uk, ul) = ((k - l) as f64, (u - k) as f64, (u - l) as f64);
                    let factor = (ul / (kl * uk)).sqrt();
                    let direct: Vec<f64> = partial
                        .iter()
                        .zip(&total)
                        .map(|(p, t)| factor * (p - kl / ul * t))
                        .collect();
                    let expected = grid.sq_norm(&direct).sqrt();
                    let got = profile.norm_at(k).unwrap();
                    let rel = (got - expected).abs() / expected.max(f64::MIN_POSITIVE);
                    worst = worst.max(rel);
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= ORACLE_REL_TOL && within(Duration::from_secs(10), elapsed),
        format!(
            "{checked} norms, worst relative error {worst:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 2
// ---------------------------------------------------------------------------

/// Split norms met by the noiseless recursion on segments that contain a change.
fn noiseless_split_norms(means: &[Curve<f64>], seg: Segment, cps: &[usize], out: &mut Vec<f64>) {
    if !cps.iter().any(|&v| seg.contains_interior(v)) {
        return;
    }
    let p = theta_profile(means, seg).unwrap();
    out.push(p.max_norm);
    let k = p.argmax_k;
    noiseless_split_norms(means, Segment::new(seg.l, k), cps, out);
    noiseless_split_norms(means, Segment::new(k, seg.u), cps, out);
}

fn noiseless_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(MASTER_SEED ^ 2);
    let mut exact = 0usize;
    let trials = 200;
    for trial in 0..trials {
        let m = rng.random_range(1..=5);
        let g = if trial % 2 == 0 { 1 } else { 50 };
        let n = rng.random_range((m + 1) * 10..=400);
        let grid: Arc<Grid<f64>> = GridSpec::Uniform { size: g }.build().unwrap();
        let cps = random_change_points(&mut rng, n, m, 10);
        let means = random_means(&mut rng, &grid, m + 1, 0.5);
        let spec = ScenarioSpec {
            n,
            grid: GridSpec::Uniform { size: g },
            change_points: cps.clone(),
            means: means.iter().cloned().map(MeanSpec::Values).collect(),
            noise: NoiseModel::silent(),
            seed: trial as u64,
            omega_label: 0.0,
            bounds: ModelBounds::default(),
        };
        let series = gen_series::<f64>(&spec).unwrap();
        let mut norms = Vec::new();
        noiseless_split_norms(series.curves(), Segment::new(0, n), &cps, &mut norms);
        let xi = 0.5 * norms.iter().copied().fold(f64::INFINITY, f64::min);
        let found = detect_with_threshold(&series, xi).unwrap().change_points;
        if found == cps {
            exact += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        exact == trials && within(Duration::from_secs(30), elapsed),
        format!(
            "{exact}/{trials} exact recoveries, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// Criteria 3 and 4
// ---------------------------------------------------------------------------

struct Config {
    means: Vec<Curve<f64>>,
    cps: Vec<usize>,
    seg: Segment,
}

/// Random noiseless configuration with at least one change strictly inside `seg`.
fn random_config(rng: &mut ChaCha8Rng) -> Config {
    let n = rng.random_range(4..=200);
    let g = [1, 5, 20][rng.random_range(0..3)];
    let grid = Arc::new(Grid::uniform(g).unwrap());
    let m = rng.random_range(1..=6.min(n - 1));
    let mut cps: Vec<usize> = (0..m).map(|_| rng.random_range(1..n)).collect();
    cps.sort_unstable();
    cps.dedup();
    let means = random_means(rng, &grid, cps.len() + 1, 0.2);
    let curves = index_curves(&grid, n, &cps, &means);
    loop {
        let l = rng.random_range(0..n - 1);
        let u = rng.random_range(l + 2..=n);
        let seg = Segment::new(l, u);
        if cps.iter().any(|&v| seg.contains_interior(v)) {
            return Config {
                means: curves,
                cps,
                seg,
            };
        }
    }
}

fn argmax_on_change_point() -> Outcome {
    let mut rng = seeded(MASTER_SEED ^ 3);
    let trials = 200;
    let hits = (0..trials)
        .filter(|_| {
            let c = random_config(&mut rng);
            let k = theta_profile(&c.means, c.seg).unwrap().argmax_k;
            c.cps.contains(&k)
        })
        .count();
    outcome(
        hits == trials,
        format!("{hits}/{trials} maximizers on a change point"),
    )
}

fn profile_shape() -> Outcome {
    let mut rng = seeded(MASTER_SEED ^ 4);
    let trials = 200;
    let mut clean = 0;
    for _ in 0..trials {
        let c = random_config(&mut rng);
        let grid = Arc::clone(c.means[0].grid());
        let series = FunctionalSeries::new(grid, c.means.clone()).unwrap();
        let prefix = PrefixSums::build(&series).unwrap();
        let profile = cusum_profile(&prefix, c.seg).unwrap();
        let sq = |k: usize| profile.norm_at(k).unwrap().powi(2);
        let peak = profile.max_norm.powi(2);
        let tol = 1e-9 * peak.max(1e-300);

        let (lo, hi) = (c.seg.l + 1, c.seg.u - 1);
        let mut knots = vec![lo];
        knots.extend(c.cps.iter().copied().filter(|&v| v > lo && v < hi));
        knots.push(hi);
        let bump = knots.windows(2).any(|w| {
            ((w[0] + 1)..w[1]).any(|k| sq(k) > sq(k - 1) + tol && sq(k) > sq(k + 1) + tol)
        });
        if !bump {
            clean += 1;
        }
    }
    outcome(
        clean == trials,
        format!("{clean}/{trials} profiles without an interior local maximum"),
    )
}

// ---------------------------------------------------------------------------
// Criteria 5, 6, 7
// ---------------------------------------------------------------------------

const CONSISTENCY_N: [usize; 3] = [200, 500, 1000];
const CALIBRATION_N: usize = 200;
const REPS: usize = 200;

fn noise_model() -> NoiseModel {
    NoiseModel::far1(
        ScoreDistribution::Gaussian,
        Spectrum::PowerDecay {
            scale: 1.0,
            decay: 2.0,
            terms: 20,
        },
        Kernel::gaussian(0.25, 0.3),
    )
}

fn grid_spec() -> GridSpec {
    GridSpec::Uniform { size: 50 }
}

/// Staircase of constant means, so every jump has norm 1.
fn consistency_family() -> ExperimentFamily {
    ExperimentFamily {
        n_values: CONSISTENCY_N.to_vec(),
        grid: grid_spec(),
        change_fractions: vec![0.25, 0.5, 0.75],
        means: (0..4).map(|j| MeanSpec::Constant(j as f64)).collect(),
        noise: noise_model(),
        omega_label: 0.0,
        bounds: ModelBounds::default(),
        policy: None,
        calibration: None,
        reps: None,
        seed: None,
    }
}

fn calibrated_policy() -> (ThresholdPolicy<f64>, f64) {
    let grid = grid_spec().build().unwrap();
    let q = calibrate_threshold(
        &noise_model(),
        &grid,
        CALIBRATION_N,
        REPS,
        0.95,
        MASTER_SEED,
        None,
    )
    .unwrap();
    (
        ThresholdPolicy::power_law_through(q, CALIBRATION_N, DEFAULT_EXPONENT),
        q,
    )
}

fn write_report(dir: &Path, name: &str, report: &EvalReport) -> Vec<u8> {
    let json = dir.join(format!("{name}.json"));
    let csv = dir.join(format!("{name}.csv"));
    fs::write(&json, report.to_json().unwrap()).unwrap();
    report
        .write_records_csv(fs::File::create(&csv).unwrap())
        .unwrap();
    let mut bytes = fs::read(json).unwrap();
    bytes.extend(fs::read(csv).unwrap());
    bytes
}

fn consistency(dir: &Path) -> (Outcome, Vec<u8>) {
    let start = Instant::now();
    let (policy, q) = calibrated_policy();
    let report =
        run_consistency_experiment(&consistency_family(), &policy, REPS, MASTER_SEED, None)
            .unwrap();
    let elapsed = start.elapsed();

    let mut monotone = true;
    let mut rows = Vec::new();
    for w in report.aggregates.windows(2) {
        let successes = (w[0].p_event * REPS as f64).round() as usize;
        let (lower, _) = wilson_interval(successes, REPS, WILSON_Z);
        monotone &= w[1].p_event >= lower;
    }
    for a in &report.aggregates {
        rows.push(format!(
            "n={} ξ={:.2} P[m̂=m]={:.3} P[B]={:.3}",
            a.n, a.threshold, a.p_count, a.p_event
        ));
    }
    let last = report.aggregates.last().unwrap().p_event;
    let pass = monotone && last >= EVENT_FLOOR && within(Duration::from_secs(600), elapsed);
    let bytes = write_report(dir, "consistency", &report);
    (
        outcome(
            pass,
            format!(
                "q95(200)={q:.3}; {}; monotone within band: {monotone}; {:.1}s",
                rows.join("; "),
                elapsed.as_secs_f64()
            ),
        ),
        bytes,
    )
}

fn false_positives(dir: &Path) -> (Outcome, Vec<u8>) {
    let (policy, _) = calibrated_policy();
    let family = ExperimentFamily {
        n_values: vec![1000],
        change_fractions: vec![],
        means: vec![MeanSpec::Constant(0.0)],
        ..consistency_family()
    };
    let report = run_consistency_experiment(&family, &policy, REPS, MASTER_SEED ^ 6, None).unwrap();
    let positives = report.records.iter().filter(|r| r.m_hat > 0).count();
    let frac = positives as f64 / REPS as f64;
    let xi = threshold_value(&policy, 1000).unwrap();
    let bytes = write_report(dir, "false_positives", &report);
    (
        outcome(
            frac <= FALSE_POSITIVE_CEIL,
            format!("{positives}/{REPS} replications with m̂ > 0 ({frac:.3}) at ξ={xi:.2}"),
        ),
        bytes,
    )
}

fn noise_growth(dir: &Path) -> (Outcome, Vec<u8>) {
    let grid = grid_spec().build().unwrap();
    let rows = noise_max_diagnostic(
        &noise_model(),
        &grid,
        &[100, 1600],
        REPS,
        MASTER_SEED ^ 7,
        false,
        None,
    )
    .unwrap();
    let ratio = rows[1].q95 / rows[0].q95;
    let path = dir.join("noise_max.json");
    fs::write(&path, serde_json::to_string_pretty(&rows).unwrap()).unwrap();
    (
        outcome(
            ratio < NOISE_GROWTH_CEIL,
            format!(
                "q95(100)={:.3}, q95(1600)={:.3}, ratio {ratio:.3} (n^(3/8) would give {:.2})",
                rows[0].q95,
                rows[1].q95,
                16f64.powf(0.375)
            ),
        ),
        fs::read(path).unwrap(),
    )
}

// ---------------------------------------------------------------------------
// Criterion 8
// ---------------------------------------------------------------------------

fn performance() -> Outcome {
    let (n, g) = (2000, 100);
    let mut rng = seeded(MASTER_SEED ^ 8);
    let grid = Arc::new(Grid::uniform(g).unwrap());
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let level = if (i / 400) % 2 == 0 { 0.0 } else { 1.0 };
            (0..g)
                .map(|_| level + rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let series = FunctionalSeries::from_rows(grid, rows).unwrap();

    let start = Instant::now();
    let prefix = PrefixSums::build(&series).unwrap();
    let result = fcpd_core::binseg::detect_prefix(&prefix, 5.0).unwrap();
    let elapsed = start.elapsed();

    let storage_ok = (0..=n).all(|k| prefix.row(k).len() == g);
    outcome(
        within(Duration::from_secs(5), elapsed) && storage_ok,
        format!(
            "n={n}, G={g}: {:.3}s, {} change points, prefix storage (n+1)·G = {} values",
            elapsed.as_secs_f64(),
            result.count(),
            (n + 1) * g
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 oracle equivalence", oracle_equivalence()),
        ("2 noiseless exactness", noiseless_exactness()),
        ("3 noiseless argmax", argmax_on_change_point()),
        ("4 profile shape", profile_shape()),
    ];

    let (c5, bytes5) = consistency(first.path());
    let (c6, bytes6) = false_positives(first.path());
    let (c7, bytes7) = noise_growth(first.path());
    results.push(("5 empirical consistency", c5));
    results.push(("6 false-positive control", c6));
    results.push(("7 noise-max growth", c7));
    results.push(("8 performance", performance()));

    let again = [
        consistency(second.path()).1 == bytes5,
        false_positives(second.path()).1 == bytes6,
        noise_growth(second.path()).1 == bytes7,
    ];
    results.push((
        "9 reproducibility",
        outcome(
            again.iter().all(|&same| same),
            format!("identical bytes for consistency/false-positive/noise-max reports: {again:?}"),
        ),
    ));

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
