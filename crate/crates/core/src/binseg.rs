// SPDX-License-Identifier: MIT OR Apache-2.0

//! Binary segmentation on the norm of the CUSUM contrast.
//!
//! Starting from `(0, n)`, a segment with at least one interior point is split
//! at its first CUSUM-norm maximizer `k₀` whenever the maximum strictly exceeds
//! the threshold; both halves `(l, k₀)` and `(k₀, u)` are then processed, left
//! before right. The recursion runs on an explicit stack.

use serde::{Deserialize, Serialize};

use crate::cusum::{cusum_profile, PrefixSums, Segment};
use crate::error::{Error, Result};
use crate::hilbert::FunctionalSeries;
use crate::scalar::Scalar;

/// Exponent at the centre of the admissible window `(3/8, 1/2)`.
pub const DEFAULT_EXPONENT: f64 = 7.0 / 16.0;

const EXPONENT_FLOOR: f64 = 3.0 / 8.0;
const EXPONENT_CEIL: f64 = 0.5;

/// How the threshold `ξ_n` depends on the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound = "")]
pub enum ThresholdPolicy<T: Scalar> {
    /// `ξ_n = c`.
    Fixed {
        #[serde(with = "crate::serde_float")]
        c: T,
    },
    /// `ξ_n = c·n^exponent` with the exponent strictly inside `(3/8, 1/2)`.
    PowerLaw { c: T, exponent: T },
    /// `ξ_n = c·(ln n)^p`. Experimental: carries no consistency guarantee.
    LogLaw { c: T, p: T },
}

impl<T: Scalar> ThresholdPolicy<T> {
    pub fn fixed(c: T) -> Self {
        Self::Fixed { c }
    }

    pub fn power_law(c: T, exponent: T) -> Self {
        Self::PowerLaw { c, exponent }
    }

    /// Power law passing through `value` at sample size `n_ref`.
    pub fn power_law_through(value: T, n_ref: usize, exponent: T) -> Self {
        Self::PowerLaw {
            c: value / T::of_usize(n_ref).powf(exponent),
            exponent,
        }
    }

    pub fn log_law(c: T, p: T) -> Self {
        Self::LogLaw { c, p }
    }

    /// Same law with `c` rescaled so that `ξ_{n_ref} = value`.
    pub fn anchored_at(&self, value: T, n_ref: usize) -> Result<Self> {
        let unit = match *self {
            Self::Fixed { .. } => Self::Fixed { c: T::one() },
            Self::PowerLaw { exponent, .. } => Self::PowerLaw {
                c: T::one(),
                exponent,
            },
            Self::LogLaw { p, .. } => Self::LogLaw { c: T::one(), p },
        };
        let base = threshold_value(&unit, n_ref)?;
        let c = value / base;
        let anchored = match unit {
            Self::Fixed { .. } => Self::Fixed { c },
            Self::PowerLaw { exponent, .. } => Self::PowerLaw { c, exponent },
            Self::LogLaw { p, .. } => Self::LogLaw { c, p },
        };
        anchored.validate()?;
        Ok(anchored)
    }

    pub fn validate(&self) -> Result<()> {
        let c = match *self {
            Self::Fixed { c } | Self::PowerLaw { c, .. } | Self::LogLaw { c, .. } => c,
        };
        if c.is_nan() || c <= T::zero() {
            return Err(Error::InvalidPolicy(format!(
                "multiplier c = {c} must be positive"
            )));
        }
        match *self {
            Self::Fixed { .. } => Ok(()),
            Self::PowerLaw { exponent, .. } => {
                if exponent > T::of(EXPONENT_FLOOR) && exponent < T::of(EXPONENT_CEIL) {
                    Ok(())
                } else {
                    Err(Error::InvalidPolicy(format!(
                        "power-law exponent {exponent} must lie strictly between 0.375 and 0.5"
                    )))
                }
            }
            Self::LogLaw { p, .. } => {
                if p.is_finite() && p > T::zero() {
                    Ok(())
                } else {
                    Err(Error::InvalidPolicy(format!(
                        "log-law power p = {p} must be positive"
                    )))
                }
            }
        }
    }
}

/// `ξ_n` for the given policy and sample size.
pub fn threshold_value<T: Scalar>(policy: &ThresholdPolicy<T>, n: usize) -> Result<T> {
    policy.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "threshold needs a sample size of at least 2, got {n}"
        )));
    }
    let size = T::of_usize(n);
    Ok(match *policy {
        ThresholdPolicy::Fixed { c } => c,
        ThresholdPolicy::PowerLaw { c, exponent } => c * size.powf(exponent),
        ThresholdPolicy::LogLaw { c, p } => c * size.ln().powf(p),
    })
}

/// Localization radius `n^(5/8 + ω)·ln n`.
pub fn localization_radius<T: Scalar>(n: T, omega: T) -> Result<T> {
    if !(omega >= T::zero() && omega < T::of(0.125)) {
        return Err(Error::InvalidArgument(format!(
            "omega = {omega} must lie in [0, 1/8)"
        )));
    }
    if n.is_nan() || n < T::one() || n.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "sample size {n} must be at least 1"
        )));
    }
    Ok(n.powf(T::of(0.625) + omega) * n.ln())
}

/// One evaluated segment of the recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TraceEntry<T: Scalar> {
    pub segment: Segment,
    pub argmax_k: usize,
    pub max_norm: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DetectionResult<T: Scalar> {
    /// Sorted ascending, each in `(0, n)`.
    pub change_points: Vec<usize>,
    /// `split_norms[i]` is the CUSUM maximum that accepted `change_points[i]`.
    pub split_norms: Vec<T>,
    #[serde(with = "crate::serde_float")]
    pub threshold_used: T,
    /// Segments in depth-first, left-first visiting order.
    pub trace: Vec<TraceEntry<T>>,
}

impl<T: Scalar> DetectionResult<T> {
    pub fn count(&self) -> usize {
        self.change_points.len()
    }
}

/// Runs binary segmentation with `ξ_n = threshold_value(policy, n)`.
pub fn detect<T: Scalar>(
    series: &FunctionalSeries<T>,
    policy: &ThresholdPolicy<T>,
) -> Result<DetectionResult<T>> {
    let n = series.len();
    check_len(n)?;
    let threshold = threshold_value(policy, n)?;
    detect_prefix(&PrefixSums::build(series)?, threshold)
}

/// Runs binary segmentation against an explicit threshold.
pub fn detect_with_threshold<T: Scalar>(
    series: &FunctionalSeries<T>,
    threshold: T,
) -> Result<DetectionResult<T>> {
    check_len(series.len())?;
    detect_prefix(&PrefixSums::build(series)?, threshold)
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::SegmentTooShort { l: 0, u: n, n })
    } else {
        Ok(())
    }
}

/// Binary segmentation over prebuilt partial sums.
pub fn detect_prefix<T: Scalar>(p: &PrefixSums<T>, threshold: T) -> Result<DetectionResult<T>> {
    let n = p.n();
    check_len(n)?;
    if threshold.is_nan() {
        return Err(Error::InvalidPolicy("threshold is NaN".into()));
    }

    let mut accepted: Vec<(usize, T)> = Vec::new();
    let mut trace = Vec::new();
    let mut stack = vec![Segment::new(0, n)];
    while let Some(seg) = stack.pop() {
        if !seg.has_interior() {
            continue;
        }
        let profile = cusum_profile(p, seg)?;
        let k0 = profile.argmax_k;
        let hit = profile.max_norm > threshold;
        trace.push(TraceEntry {
            segment: seg,
            argmax_k: k0,
            max_norm: profile.max_norm,
            accepted: hit,
        });
        if hit {
            accepted.push((k0, profile.max_norm));
            // Right pushed first so the left child is processed next.
            stack.push(Segment::new(k0, seg.u));
            stack.push(Segment::new(seg.l, k0));
        }
    }

    accepted.sort_by_key(|&(k, _)| k);
    let (change_points, split_norms) = accepted.into_iter().unzip();
    Ok(DetectionResult {
        change_points,
        split_norms,
        threshold_used: threshold,
        trace,
    })
}
