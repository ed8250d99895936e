// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scenario simulation: `X_i = u_i + ε_i` with a piecewise-constant mean
//! `u_i = μ_j` for `v_{j−1} < i ≤ v_j` (with `v_0 = 0`, `v_{m+1} = n`) and
//! errors from a [`NoiseModel`].

mod noise;
pub mod rng;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use noise::{
    gen_errors, gen_errors_truncated, gen_white_noise, sine_basis, weighted_operator_norm, Kernel,
    KernelShape, NoiseModel, NoiseSampler, Operator, ScoreDistribution, Spectrum,
};

use crate::error::{Error, Result};
use crate::hilbert::{combine, Curve, FunctionalSeries, Grid};
use crate::scalar::Scalar;

/// Grid description inside scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    /// Uniform trapezoid grid with this many points.
    Uniform { size: usize },
    /// Explicit points with trapezoid weights.
    Points { points: Vec<f64> },
}

impl GridSpec {
    pub fn build<T: Scalar>(&self) -> Result<Arc<Grid<T>>> {
        let grid = match self {
            Self::Uniform { size } => Grid::uniform(*size)?,
            Self::Points { points } => {
                Grid::from_points(points.iter().map(|&p| T::of(p)).collect())?
            }
        };
        Ok(Arc::new(grid))
    }

    pub fn size(&self) -> usize {
        match self {
            Self::Uniform { size } => *size,
            Self::Points { points } => points.len(),
        }
    }
}

/// A segment mean: a constant function or explicit grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Constant(f64),
    Values(Vec<f64>),
}

impl MeanSpec {
    pub fn to_curve<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<Curve<T>> {
        match self {
            Self::Constant(c) => Curve::new(grid, vec![T::of(*c); grid.len()]),
            Self::Values(v) => Curve::new(grid, v.iter().map(|&x| T::of(x)).collect()),
        }
    }
}

fn default_jump_floor() -> f64 {
    1e-6
}
fn default_spacing_c1() -> f64 {
    0.01
}
fn default_mean_bound() -> f64 {
    1e6
}

/// Constants of the model conditions a scenario is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelBounds {
    /// Smallest admissible jump norm `‖μ_{j+1} − μ_j‖`.
    #[serde(default = "default_jump_floor")]
    pub jump_floor: f64,
    /// `c₁` in the spacing floor `c₁·n^(1−ω)`.
    #[serde(default = "default_spacing_c1")]
    pub spacing_c1: f64,
    /// Strict upper bound `B` on every `‖μ_j‖`.
    #[serde(default = "default_mean_bound")]
    pub mean_bound: f64,
}

impl Default for ModelBounds {
    fn default() -> Self {
        Self {
            jump_floor: default_jump_floor(),
            spacing_c1: default_spacing_c1(),
            mean_bound: default_mean_bound(),
        }
    }
}

/// Full generative description of one simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub grid: GridSpec,
    /// `v_1 < … < v_m`, each in `(0, n)`.
    pub change_points: Vec<usize>,
    /// `μ_1..μ_{m+1}`.
    pub means: Vec<MeanSpec>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub seed: u64,
    /// Spacing regime `ω ∈ [0, 1/8)`; also used for the localization radius.
    #[serde(default)]
    pub omega_label: f64,
    #[serde(default)]
    pub bounds: ModelBounds,
}

/// Which model condition a scenario breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Basic well-formedness: sizes, ordering, grid.
    Structure,
    /// Error process: spectrum and stationarity of the linear process.
    Noise,
    /// Minimal jump magnitude.
    Jump,
    /// Minimal spacing between consecutive change points.
    Spacing,
    /// Uniform bound on the mean norms.
    MeanBound,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Structure => "structure",
            Self::Noise => "noise condition",
            Self::Jump => "jump condition",
            Self::Spacing => "spacing condition",
            Self::MeanBound => "mean bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.condition, self.message)
    }
}

fn violation(condition: Condition, message: impl Into<String>) -> Violation {
    Violation {
        condition,
        message: message.into(),
    }
}

/// Spacing floor `c₁·n^(1−ω)`.
pub fn spacing_floor(n: usize, c1: f64, omega: f64) -> f64 {
    c1 * (n as f64).powf(1.0 - omega)
}

/// Checks every model condition; an empty list means the scenario is admissible.
pub fn validate_spec(spec: &ScenarioSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = spec.n;
    if n < 2 {
        out.push(violation(
            Condition::Structure,
            format!("n = {n} must be at least 2"),
        ));
    }
    let grid = match spec.grid.build::<f64>() {
        Ok(g) => Some(g),
        Err(e) => {
            out.push(violation(Condition::Structure, e.to_string()));
            None
        }
    };

    let cps = &spec.change_points;
    if let Some(&bad) = cps.iter().find(|&&v| v == 0 || v >= n) {
        out.push(violation(
            Condition::Structure,
            format!("change point {bad} lies outside (0, {n})"),
        ));
    }
    if cps.windows(2).any(|w| w[1] <= w[0]) {
        out.push(violation(
            Condition::Structure,
            "change points must be strictly increasing",
        ));
    }
    if spec.means.len() != cps.len() + 1 {
        out.push(violation(
            Condition::Structure,
            format!(
                "{} change points need {} means, found {}",
                cps.len(),
                cps.len() + 1,
                spec.means.len()
            ),
        ));
    }

    let b = &spec.bounds;
    if !(b.jump_floor > 0.0 && b.spacing_c1 > 0.0 && b.mean_bound > 0.0) {
        out.push(violation(
            Condition::Structure,
            "model bounds must all be positive",
        ));
    }
    let omega = spec.omega_label;
    if !(0.0..0.125).contains(&omega) {
        out.push(violation(
            Condition::Spacing,
            format!("omega_label = {omega} must lie in [0, 1/8)"),
        ));
    }

    let Some(grid) = grid else { return out };

    match spec.noise.prepare(&grid) {
        Ok(_) => {}
        Err(e) => out.push(violation(Condition::Noise, e.to_string())),
    }

    let means: Vec<Option<Curve<f64>>> = spec
        .means
        .iter()
        .enumerate()
        .map(|(j, m)| match m.to_curve(&grid) {
            Ok(c) => Some(c),
            Err(e) => {
                out.push(violation(
                    Condition::Structure,
                    format!("mean {}: {e}", j + 1),
                ));
                None
            }
        })
        .collect();

    for (j, pair) in means.windows(2).enumerate() {
        if let [Some(a), Some(b)] = pair {
            let jump = combine(1.0, b, -1.0, a).map(|d| d.norm()).unwrap_or(0.0);
            if jump == 0.0 {
                out.push(violation(
                    Condition::Jump,
                    format!("zero jump between means {} and {}", j + 1, j + 2),
                ));
            } else if jump < spec.bounds.jump_floor {
                out.push(violation(
                    Condition::Jump,
                    format!(
                        "jump {jump:.3e} between means {} and {} is below the floor {:.3e}",
                        j + 1,
                        j + 2,
                        spec.bounds.jump_floor
                    ),
                ));
            }
        }
    }

    if let Some((j, norm)) = means
        .iter()
        .enumerate()
        .filter_map(|(j, m)| m.as_ref().map(|c| (j, c.norm())))
        .find(|&(_, norm)| norm >= spec.bounds.mean_bound)
    {
        out.push(violation(
            Condition::MeanBound,
            format!(
                "mean {} has norm {norm:.6} ≥ bound {}",
                j + 1,
                spec.bounds.mean_bound
            ),
        ));
    }

    if n >= 2 && (0.0..0.125).contains(&omega) {
        let floor = spacing_floor(n, spec.bounds.spacing_c1, omega);
        let min_gap = std::iter::once(0)
            .chain(cps.iter().copied())
            .zip(cps.iter().copied().chain(std::iter::once(n)))
            .map(|(a, b)| b.saturating_sub(a))
            .min()
            .unwrap_or(n);
        if (min_gap as f64) < floor {
            out.push(violation(
                Condition::Spacing,
                format!("spacing below floor: minimal gap {min_gap} < {floor:.3}"),
            ));
        }
    }
    out
}

/// A generated series with its deterministic and random parts.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub series: FunctionalSeries<T>,
    /// `u_1..u_n`.
    pub means: Vec<Curve<T>>,
    pub errors: FunctionalSeries<T>,
}

impl ScenarioSpec {
    /// Segment means `μ_1..μ_{m+1}` on the scenario grid.
    pub fn mean_curves<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<Vec<Curve<T>>> {
        self.means.iter().map(|m| m.to_curve(grid)).collect()
    }

    /// Per-index means `u_1..u_n`: index `i` (1-based) belongs to the segment `j`
    /// with `v_{j−1} < i ≤ v_j`.
    pub fn index_means<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<Vec<Curve<T>>> {
        let mus = self.mean_curves(grid)?;
        Ok((1..=self.n)
            .map(|i| {
                let j = self.change_points.partition_point(|&v| v < i);
                mus[j].clone()
            })
            .collect())
    }
}

/// Generates the series after validating the scenario.
pub fn simulate<T: Scalar>(spec: &ScenarioSpec) -> Result<Simulation<T>> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let grid = spec.grid.build::<T>()?;
    let means = spec.index_means(&grid)?;
    let errors = gen_errors(&spec.noise, &grid, spec.n, spec.seed)?;
    let curves = means
        .iter()
        .zip(errors.curves())
        .map(|(m, e)| combine(T::one(), m, T::one(), e))
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation {
        series: FunctionalSeries::new(grid, curves)?,
        means,
        errors,
    })
}

pub fn gen_series<T: Scalar>(spec: &ScenarioSpec) -> Result<FunctionalSeries<T>> {
    simulate(spec).map(|s| s.series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioSpec {
        ScenarioSpec {
            n: 100,
            grid: GridSpec::Uniform { size: 1 },
            change_points: vec![50],
            means: vec![MeanSpec::Constant(0.0), MeanSpec::Constant(1.0)],
            noise: NoiseModel::silent(),
            seed: 1,
            omega_label: 0.0,
            bounds: ModelBounds::default(),
        }
    }

    #[test]
    fn conforming_spec_has_no_violations() {
        assert!(validate_spec(&base()).is_empty());
    }

    #[test]
    fn zero_jump_reported() {
        let mut s = base();
        s.means[1] = MeanSpec::Constant(0.0);
        let v = validate_spec(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].condition, Condition::Jump);
        assert!(v[0].message.contains("zero jump"));
    }

    #[test]
    fn tight_spacing_reported() {
        let mut s = base();
        s.n = 1000;
        s.change_points = vec![500, 501];
        s.means.push(MeanSpec::Constant(0.0));
        let v = validate_spec(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].condition, Condition::Spacing);
        assert!(v[0].message.contains("spacing below floor"));
    }

    #[test]
    fn structural_and_bound_problems_reported() {
        let mut s = base();
        s.change_points = vec![0, 100];
        s.means = vec![MeanSpec::Constant(0.0); 2];
        s.omega_label = 0.2;
        s.bounds.mean_bound = 0.5;
        let v = validate_spec(&s);
        let conditions: Vec<Condition> = v.iter().map(|x| x.condition).collect();
        assert!(conditions.contains(&Condition::Structure));
        assert!(conditions.contains(&Condition::Spacing));

        let mut s = base();
        s.means[1] = MeanSpec::Constant(10.0);
        s.bounds.mean_bound = 5.0;
        assert_eq!(validate_spec(&s)[0].condition, Condition::MeanBound);

        let mut s = base();
        s.noise = NoiseModel::far1(
            ScoreDistribution::Gaussian,
            Spectrum::default(),
            Kernel::gaussian(0.2, 1.2),
        );
        assert_eq!(validate_spec(&s)[0].condition, Condition::Noise);

        let mut s = base();
        s.means[1] = MeanSpec::Values(vec![1.0, 2.0]);
        assert_eq!(validate_spec(&s)[0].condition, Condition::Structure);
    }

    #[test]
    fn generation_refuses_invalid_specs() {
        let mut s = base();
        s.means[1] = MeanSpec::Constant(0.0);
        assert!(matches!(gen_series::<f64>(&s), Err(Error::Validation(_))));
    }

    #[test]
    fn noiseless_step_and_boundary_convention() {
        let mut s = base();
        s.n = 10;
        s.change_points = vec![4, 7];
        s.means = vec![
            MeanSpec::Constant(0.0),
            MeanSpec::Constant(1.0),
            MeanSpec::Constant(-2.0),
        ];
        s.bounds.spacing_c1 = 0.1;
        let x = gen_series::<f64>(&s).unwrap();
        let v: Vec<f64> = x.curves().iter().map(|c| c.values()[0]).collect();
        // X_4 (index 3) is the last of the first segment; X_5 starts the second.
        assert_eq!(v, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, -2.0, -2.0, -2.0]);
    }

    #[test]
    fn reproducible_series() {
        let mut s = base();
        s.grid = GridSpec::Uniform { size: 8 };
        s.noise = NoiseModel::far1(
            ScoreDistribution::CenteredExponential,
            Spectrum::default(),
            Kernel::gaussian(0.3, 0.5),
        );
        let a = gen_series::<f64>(&s).unwrap();
        let b = gen_series::<f64>(&s).unwrap();
        assert_eq!(a, b);
        let bits = |x: &FunctionalSeries<f64>| -> Vec<u64> {
            x.curves()
                .iter()
                .flat_map(|c| c.values().iter().map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn scenario_json_round_trip() {
        let text = r#"{
            "n": 200,
            "grid": {"size": 5},
            "change_points": [100],
            "means": [0.0, [1.0, 1.0, 2.0, 1.0, 1.0]],
            "seed": 9,
            "omega_label": 0.05
        }"#;
        let s: ScenarioSpec = serde_json::from_str(text).unwrap();
        assert_eq!(s.noise, NoiseModel::default());
        assert_eq!(s.means[1], MeanSpec::Values(vec![1.0, 1.0, 2.0, 1.0, 1.0]));
        let back: ScenarioSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(validate_spec(&s).is_empty());
    }
}
