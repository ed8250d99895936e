// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error processes in the discretized space.
//!
//! White noise is a truncated Karhunen–Loève expansion
//! `w = Σ_j sqrt(λ_j)·z_j·φ_j` with i.i.d. unit-variance scores `z_j` and `φ_j`
//! the sine system `sqrt(2)·sin(jπt)` orthonormalized in the grid inner product.
//! Dependent errors follow the FAR(1) recursion `ε_i = Ψ(ε_{i−1}) + w_i`, i.e.
//! the linear process with coefficients `h_j = Ψ^j`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::seeded;
use crate::error::{Error, Result};
use crate::hilbert::{Curve, FunctionalSeries, Grid};
use crate::scalar::Scalar;

/// Distribution of the Karhunen–Loève scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreDistribution {
    #[default]
    Gaussian,
    /// `Exp(1) − 1`: mean zero, variance one, skewed.
    CenteredExponential,
}

/// Eigenvalues `λ_1 ≥ λ_2 ≥ … ≥ 0` of the white-noise covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spectrum {
    Explicit {
        eigenvalues: Vec<f64>,
    },
    /// `λ_j = scale·j^(−decay)` for `j = 1..=terms`.
    PowerDecay {
        scale: f64,
        decay: f64,
        terms: usize,
    },
}

impl Default for Spectrum {
    fn default() -> Self {
        Self::PowerDecay {
            scale: 1.0,
            decay: 2.0,
            terms: 20,
        }
    }
}

impl Spectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self {
            Self::Explicit { eigenvalues } => eigenvalues.clone(),
            Self::PowerDecay {
                scale,
                decay,
                terms,
            } => (1..=*terms)
                .map(|j| scale * (j as f64).powf(-decay))
                .collect(),
        }
    }

    fn validate(&self) -> Result<Vec<f64>> {
        let ev = self.eigenvalues();
        if ev.is_empty() {
            return Err(Error::InvalidNoise("spectrum has no eigenvalues".into()));
        }
        if let Some((j, v)) = ev
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidNoise(format!(
                "eigenvalue {} is {v}; eigenvalues must be finite and nonnegative",
                j + 1
            )));
        }
        if let Some(j) = ev.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidNoise(format!(
                "eigenvalues must be nonincreasing (λ_{} < λ_{})",
                j + 1,
                j + 2
            )));
        }
        Ok(ev)
    }
}

/// Kernel `ψ(t, s)` of the autoregressive integral operator
/// `(Ψx)(t) = ∫ ψ(t, s) x(s) ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum KernelShape {
    /// `ψ ≡ 1`.
    Constant,
    /// `ψ(t, s) = exp(−(t − s)² / (2·bandwidth²))`.
    Gaussian { bandwidth: f64 },
    /// `ψ(t_a, s_b)` given directly on the grid (`values[a][b]`).
    Matrix { values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    #[serde(flatten)]
    pub shape: KernelShape,
    /// When set, the kernel is rescaled so the discretized operator has this norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_norm: Option<f64>,
}

impl Kernel {
    pub fn gaussian(bandwidth: f64, operator_norm: f64) -> Self {
        Self {
            shape: KernelShape::Gaussian { bandwidth },
            operator_norm: Some(operator_norm),
        }
    }

    fn raw_matrix(&self, grid: &Grid<f64>) -> Result<Vec<f64>> {
        let g = grid.len();
        let pts = grid.points();
        let mut m = vec![0.0; g * g];
        match &self.shape {
            KernelShape::Constant => m.fill(1.0),
            KernelShape::Gaussian { bandwidth } => {
                if !(bandwidth.is_finite() && *bandwidth > 0.0) {
                    return Err(Error::InvalidNoise(format!(
                        "kernel bandwidth {bandwidth} must be positive"
                    )));
                }
                let denom = 2.0 * bandwidth * bandwidth;
                for a in 0..g {
                    for b in 0..g {
                        let d = pts[a] - pts[b];
                        m[a * g + b] = (-d * d / denom).exp();
                    }
                }
            }
            KernelShape::Matrix { values } => {
                if values.len() != g || values.iter().any(|r| r.len() != g) {
                    return Err(Error::InvalidNoise(format!(
                        "kernel matrix must be {g}×{g} to match the grid"
                    )));
                }
                for (a, row) in values.iter().enumerate() {
                    for (b, &v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::InvalidNoise(
                                "kernel matrix has a non-finite entry".into(),
                            ));
                        }
                        m[a * g + b] = v;
                    }
                }
            }
        }
        Ok(m)
    }

    /// Discretized operator `A[a][b] = ψ(t_a, t_b)·w_b` (row-major) and its norm.
    pub fn discretize(&self, grid: &Grid<f64>) -> Result<(Vec<f64>, f64)> {
        let mut kernel = self.raw_matrix(grid)?;
        let mut norm = weighted_operator_norm(&kernel, grid.weights());
        if let Some(target) = self.operator_norm {
            if !(target.is_finite() && target >= 0.0) {
                return Err(Error::InvalidNoise(format!(
                    "target operator norm {target} must be finite and nonnegative"
                )));
            }
            if norm == 0.0 {
                return Err(Error::InvalidNoise(
                    "kernel vanishes on this grid; cannot rescale".into(),
                ));
            }
            let scale = target / norm;
            kernel.iter_mut().for_each(|v| *v *= scale);
            norm = weighted_operator_norm(&kernel, grid.weights());
        }
        let g = grid.len();
        let w = grid.weights();
        for a in 0..g {
            for b in 0..g {
                kernel[a * g + b] *= w[b];
            }
        }
        Ok((kernel, norm))
    }
}

/// Norm of `x ↦ Σ_b ψ(·, t_b) w_b x_b` on the weighted space: the spectral norm of
/// `W^{1/2} K W^{1/2}`, by power iteration on its Gram matrix.
pub fn weighted_operator_norm(kernel: &[f64], weights: &[f64]) -> f64 {
    let g = weights.len();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let b: Vec<f64> = (0..g * g)
        .map(|idx| sw[idx / g] * kernel[idx] * sw[idx % g])
        .collect();
    let apply = |x: &[f64], transpose: bool| -> Vec<f64> {
        (0..g)
            .map(|r| {
                (0..g)
                    .map(|c| if transpose { b[c * g + r] } else { b[r * g + c] } * x[c])
                    .sum()
            })
            .collect()
    };
    let mut x: Vec<f64> = (0..g)
        .map(|i| 1.0 + 0.01 * (i as f64 + 1.0).sqrt())
        .collect();
    let mut sigma_sq = 0.0;
    for _ in 0..20_000 {
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if xn == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= xn);
        let y = apply(&apply(&x, false), true);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let done = (next - sigma_sq).abs() <= 1e-15 * next.abs();
        sigma_sq = next;
        x = y;
        if done {
            break;
        }
    }
    sigma_sq.max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Operator {
    /// Errors are the white noise itself.
    #[default]
    None,
    Far1 {
        kernel: Kernel,
    },
}

fn default_kappa() -> f64 {
    1.0
}

fn default_truncation_lag() -> usize {
    60
}

fn default_burn_in() -> usize {
    200
}

/// Generative description of the error sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(default)]
    pub white_noise: ScoreDistribution,
    #[serde(default)]
    pub spectrum: Spectrum,
    #[serde(default)]
    pub operator: Operator,
    /// The autoregressive operator norm must stay strictly below this bound (≤ 1).
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Number of lags kept by [`gen_errors_truncated`].
    #[serde(default = "default_truncation_lag")]
    pub truncation_lag: usize,
    /// Leading recursion steps discarded by [`gen_errors`].
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            white_noise: ScoreDistribution::Gaussian,
            spectrum: Spectrum::default(),
            operator: Operator::None,
            kappa: default_kappa(),
            truncation_lag: default_truncation_lag(),
            burn_in: default_burn_in(),
        }
    }
}

impl NoiseModel {
    pub fn white(scores: ScoreDistribution, spectrum: Spectrum) -> Self {
        Self {
            white_noise: scores,
            spectrum,
            ..Self::default()
        }
    }

    pub fn far1(scores: ScoreDistribution, spectrum: Spectrum, kernel: Kernel) -> Self {
        Self {
            white_noise: scores,
            spectrum,
            operator: Operator::Far1 { kernel },
            ..Self::default()
        }
    }

    /// Noise with zero covariance.
    pub fn silent() -> Self {
        Self::white(
            ScoreDistribution::Gaussian,
            Spectrum::Explicit {
                eigenvalues: vec![0.0],
            },
        )
    }

    /// Validates the model against `grid` and precomputes everything sampling needs.
    pub fn prepare<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<NoiseSampler<T>> {
        let eigenvalues = self.spectrum.validate()?;
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidNoise(format!(
                "kappa = {} must lie in (0, 1]",
                self.kappa
            )));
        }
        let grid64 = to_f64_grid(grid)?;
        let basis = sine_basis(&grid64, eigenvalues.len());
        let loadings: Vec<Vec<T>> = basis
            .into_iter()
            .filter_map(|(j, phi)| {
                let sd = eigenvalues[j].sqrt();
                (sd > 0.0).then(|| phi.into_iter().map(|v| T::of(sd * v)).collect())
            })
            .collect();

        let operator = match &self.operator {
            Operator::None => None,
            Operator::Far1 { kernel } => {
                let (matrix, norm) = kernel.discretize(&grid64)?;
                if norm >= self.kappa {
                    return Err(Error::Stationarity {
                        norm,
                        bound: self.kappa,
                    });
                }
                Some(matrix.into_iter().map(T::of).collect())
            }
        };
        Ok(NoiseSampler {
            grid: Arc::clone(grid),
            scores: self.white_noise,
            loadings,
            operator,
            burn_in: self.burn_in,
            truncation_lag: self.truncation_lag,
        })
    }

    /// Norm of the discretized autoregressive operator, zero when there is none.
    pub fn operator_norm<T: Scalar>(&self, grid: &Grid<T>) -> Result<f64> {
        match &self.operator {
            Operator::None => Ok(0.0),
            Operator::Far1 { kernel } => Ok(kernel.discretize(&to_f64_grid(grid)?)?.1),
        }
    }
}

fn to_f64_grid<T: Scalar>(grid: &Grid<T>) -> Result<Grid<f64>> {
    Grid::with_weights(
        grid.points().iter().map(|p| p.as_f64()).collect(),
        grid.weights().iter().map(|w| w.as_f64()).collect(),
    )
}

/// `sqrt(2)·sin(jπt)` for `j = 1..=terms`, Gram–Schmidt orthonormalized in the grid
/// inner product. Directions the grid cannot resolve are dropped; each survivor
/// is returned with its zero-based term index.
pub fn sine_basis(grid: &Grid<f64>, terms: usize) -> Vec<(usize, Vec<f64>)> {
    let mut kept: Vec<(usize, Vec<f64>)> = Vec::new();
    for j in 0..terms {
        let freq = (j + 1) as f64 * PI;
        let mut v: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| 2f64.sqrt() * (freq * t).sin())
            .collect();
        let original = grid.sq_norm(&v).sqrt();
        if original <= 1e-12 {
            continue;
        }
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for (_, e) in &kept {
                let c = grid.dot(&v, e);
                v.iter_mut().zip(e).for_each(|(x, &y)| *x -= c * y);
            }
        }
        let rest = grid.sq_norm(&v).sqrt();
        if rest <= 1e-8 * original {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= rest);
        kept.push((j, v));
    }
    kept
}

/// A validated [`NoiseModel`] bound to one grid.
#[derive(Debug, Clone)]
pub struct NoiseSampler<T> {
    grid: Arc<Grid<T>>,
    scores: ScoreDistribution,
    /// `sqrt(λ_j)·φ_j` for every retained term.
    loadings: Vec<Vec<T>>,
    /// Row-major `A[a][b] = ψ(t_a, t_b)·w_b`.
    operator: Option<Vec<T>>,
    burn_in: usize,
    truncation_lag: usize,
}

impl<T: Scalar> NoiseSampler<T> {
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn is_silent(&self) -> bool {
        self.loadings.is_empty()
    }

    fn score(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.scores {
            ScoreDistribution::Gaussian => StandardNormal.sample(rng),
            ScoreDistribution::CenteredExponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
        }
    }

    fn white_draw(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.len()];
        for phi in &self.loadings {
            let z = T::of(self.score(rng));
            out.iter_mut().zip(phi).for_each(|(o, &p)| *o += z * p);
        }
        out
    }

    /// `count` white-noise curves drawn from `rng`.
    pub fn white_noise(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
        (0..count).map(|_| self.white_draw(rng)).collect()
    }

    fn apply_operator(&self, a: &[T], x: &[T]) -> Vec<T> {
        let g = x.len();
        (0..g)
            .map(|r| {
                a[r * g..(r + 1) * g]
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&m, &v)| acc + m * v)
            })
            .collect()
    }

    /// Errors by recursion; the first `burn_in` steps are discarded for FAR(1).
    pub fn errors(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
        let Some(a) = &self.operator else {
            return self.white_noise(count, rng);
        };
        let mut state = vec![T::zero(); self.grid.len()];
        let mut out = Vec::with_capacity(count);
        for step in 0..self.burn_in + count {
            let w = self.white_draw(rng);
            let mut next = self.apply_operator(a, &state);
            next.iter_mut().zip(&w).for_each(|(s, &x)| *s += x);
            state = next;
            if step >= self.burn_in {
                out.push(state.clone());
            }
        }
        out
    }

    /// Errors from the truncated sum `ε_i = Σ_{j=0}^{L} Ψ^j(w_{i−j})` with
    /// `L = truncation_lag`, using `L` pre-sample white-noise draws.
    pub fn errors_truncated(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
        let Some(a) = &self.operator else {
            return self.white_noise(count, rng);
        };
        let lag = self.truncation_lag;
        let w = self.white_noise(lag + count, rng);
        (0..count)
            .map(|i| {
                // Horner form: w_{t} + Ψ(w_{t−1} + Ψ(w_{t−2} + …)).
                let t = lag + i;
                let mut acc = w[t - lag].clone();
                for j in (0..lag).rev() {
                    let mut next = self.apply_operator(a, &acc);
                    next.iter_mut().zip(&w[t - j]).for_each(|(s, &x)| *s += x);
                    acc = next;
                }
                acc
            })
            .collect()
    }

    fn series(&self, rows: Vec<Vec<T>>) -> FunctionalSeries<T> {
        let curves = rows
            .into_iter()
            .map(|r| Curve::from_trusted(&self.grid, r))
            .collect();
        FunctionalSeries::new(Arc::clone(&self.grid), curves)
            .expect("curves share the sampler grid")
    }
}

/// I.i.d. white-noise curves, reproducible from `seed`.
pub fn gen_white_noise<T: Scalar>(
    model: &NoiseModel,
    grid: &Arc<Grid<T>>,
    count: usize,
    seed: u64,
) -> Result<FunctionalSeries<T>> {
    check_count(count)?;
    let sampler = model.prepare(grid)?;
    let rows = sampler.white_noise(count, &mut seeded(seed));
    Ok(sampler.series(rows))
}

/// Linear-process errors, reproducible from `seed`.
pub fn gen_errors<T: Scalar>(
    model: &NoiseModel,
    grid: &Arc<Grid<T>>,
    count: usize,
    seed: u64,
) -> Result<FunctionalSeries<T>> {
    check_count(count)?;
    let sampler = model.prepare(grid)?;
    let rows = sampler.errors(count, &mut seeded(seed));
    Ok(sampler.series(rows))
}

/// Linear-process errors from the explicitly truncated operator series.
pub fn gen_errors_truncated<T: Scalar>(
    model: &NoiseModel,
    grid: &Arc<Grid<T>>,
    count: usize,
    seed: u64,
) -> Result<FunctionalSeries<T>> {
    check_count(count)?;
    let sampler = model.prepare(grid)?;
    let rows = sampler.errors_truncated(count, &mut seeded(seed));
    Ok(sampler.series(rows))
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        Err(Error::InvalidArgument("count must be at least 1".into()))
    } else {
        Ok(())
    }
}
