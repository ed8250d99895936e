// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mean change point detection for functional time series.
//!
//! Curves live in a discretized L²([0,1]) ([`hilbert`]); the CUSUM contrast of
//! the partial-sum process ([`cusum`]) is maximized in norm and split
//! recursively by binary segmentation ([`binseg`]). [`simgen`] simulates
//! piecewise-constant means plus linear-process noise, and [`evalsuite`]
//! measures counting and localization accuracy over Monte Carlo replications.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiation.

pub mod binseg;
pub mod cusum;
pub mod error;
pub mod evalsuite;
pub mod hilbert;
pub mod io;
pub mod scalar;
mod serde_float;
pub mod simgen;

pub use binseg::{
    detect, detect_prefix, detect_with_threshold, localization_radius, threshold_value,
    DetectionResult, ThresholdPolicy, TraceEntry, DEFAULT_EXPONENT,
};
pub use cusum::{
    build_prefix_sums, cusum_profile, cusum_value, decompose, theta_profile, CusumProfile,
    PrefixSums, Segment,
};
pub use error::{Error, Result};
pub use hilbert::{combine, inner_product, norm, Curve, FunctionalSeries, Grid};
pub use scalar::Scalar;

pub type Grid64 = Grid<f64>;
pub type Curve64 = Curve<f64>;
pub type Series64 = FunctionalSeries<f64>;
pub type PrefixSums64 = PrefixSums<f64>;
pub type Profile64 = CusumProfile<f64>;
pub type Detection64 = DetectionResult<f64>;
pub type Policy64 = ThresholdPolicy<f64>;

pub type Grid32 = Grid<f32>;
pub type Curve32 = Curve<f32>;
pub type Series32 = FunctionalSeries<f32>;
pub type Detection32 = DetectionResult<f32>;
pub type Policy32 = ThresholdPolicy<f32>;
