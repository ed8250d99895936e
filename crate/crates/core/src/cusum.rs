// SPDX-License-Identifier: MIT OR Apache-2.0

//! Partial sums and the normalized CUSUM contrast
//!
//! ```text
//! S^k_{l,u} = sqrt((u−l) / ((u−k)(k−l))) · [S_k − S_l − (k−l)/(u−l) · (S_u − S_l)]
//! ```
//!
//! evaluated for interior split points `l < k < u`. Indices follow the
//! partial-sum convention: `S_0 = 0`, `S_k = X_1 + … + X_k`, so a split at `k`
//! separates `X_1..X_k` from `X_{k+1}..`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{same_grid, Curve, FunctionalSeries, Grid};
use crate::scalar::Scalar;

/// Cumulative sums `S_0..S_n` stored row-major, one grid row per index.
#[derive(Debug, Clone)]
pub struct PrefixSums<T> {
    grid: Arc<Grid<T>>,
    n: usize,
    sums: Vec<T>,
}

impl<T: Scalar> PrefixSums<T> {
    pub fn build(series: &FunctionalSeries<T>) -> Result<Self> {
        Self::from_curves(series.grid(), series.curves())
    }

    /// Accumulates `curves` sequentially; all curves must live on `grid`.
    pub fn from_curves(grid: &Arc<Grid<T>>, curves: &[Curve<T>]) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::EmptySeries);
        }
        let g = grid.len();
        let n = curves.len();
        let mut sums = Vec::with_capacity((n + 1) * g);
        sums.resize(g, T::zero());
        for (k, curve) in curves.iter().enumerate() {
            if !same_grid(grid, curve.grid()) {
                return Err(Error::GridMismatch);
            }
            let prev = k * g;
            for (i, &x) in curve.values().iter().enumerate() {
                let acc = sums[prev + i] + x;
                sums.push(acc);
            }
        }
        Ok(Self {
            grid: Arc::clone(grid),
            n,
            sums,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Raw values of `S_k`, `0 ≤ k ≤ n`.
    #[inline]
    pub fn row(&self, k: usize) -> &[T] {
        let g = self.grid.len();
        &self.sums[k * g..(k + 1) * g]
    }

    pub fn sum(&self, k: usize) -> Curve<T> {
        Curve::from_trusted(&self.grid, self.row(k).to_vec())
    }

    /// `X_{l+1} + … + X_u` in O(G).
    pub fn segment_sum(&self, seg: Segment) -> Result<Curve<T>> {
        seg.check_within(self.n)?;
        let values = self
            .row(seg.u)
            .iter()
            .zip(self.row(seg.l))
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(Curve::from_trusted(&self.grid, values))
    }
}

pub fn build_prefix_sums<T: Scalar>(series: &FunctionalSeries<T>) -> Result<PrefixSums<T>> {
    PrefixSums::build(series)
}

/// Half-open index range `(l, u]` of the sample under examination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub l: usize,
    pub u: usize,
}

impl Segment {
    pub fn new(l: usize, u: usize) -> Self {
        Self { l, u }
    }

    pub fn len(&self) -> usize {
        self.u.saturating_sub(self.l)
    }

    pub fn is_empty(&self) -> bool {
        self.u <= self.l
    }

    /// Whether at least one interior split point exists.
    pub fn has_interior(&self) -> bool {
        self.u >= self.l + 2
    }

    pub fn contains_interior(&self, k: usize) -> bool {
        self.l < k && k < self.u
    }

    fn check_within(&self, n: usize) -> Result<()> {
        if self.l < self.u && self.u <= n {
            Ok(())
        } else {
            Err(Error::SegmentTooShort {
                l: self.l,
                u: self.u,
                n,
            })
        }
    }

    fn check_interior(&self, n: usize) -> Result<()> {
        if self.has_interior() && self.u <= n {
            Ok(())
        } else {
            Err(Error::SegmentTooShort {
                l: self.l,
                u: self.u,
                n,
            })
        }
    }
}

/// CUSUM norms at every interior split of one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumProfile<T> {
    pub segment: Segment,
    /// `norms[j]` is the norm at `k = l + 1 + j`.
    pub norms: Vec<T>,
    /// Smallest maximizing split index.
    pub argmax_k: usize,
    pub max_norm: T,
}

impl<T: Scalar> CusumProfile<T> {
    pub fn split_points(&self) -> impl Iterator<Item = usize> + '_ {
        (self.segment.l + 1)..self.segment.u
    }

    pub fn norm_at(&self, k: usize) -> Option<T> {
        self.segment
            .contains_interior(k)
            .then(|| self.norms[k - self.segment.l - 1])
    }
}

#[inline]
fn scale_factor<T: Scalar>(l: usize, u: usize, k: usize) -> (T, T) {
    let span = T::of_usize(u - l);
    let left = T::of_usize(k - l);
    let right = T::of_usize(u - k);
    (span / (right * left), left / span)
}

/// The contrast `S^k_{l,u}` as a curve.
pub fn cusum_value<T: Scalar>(p: &PrefixSums<T>, seg: Segment, k: usize) -> Result<Curve<T>> {
    seg.check_within(p.n)?;
    if !seg.contains_interior(k) {
        return Err(Error::Index {
            l: seg.l,
            u: seg.u,
            k,
        });
    }
    let (factor, ratio) = scale_factor::<T>(seg.l, seg.u, k);
    let root = factor.sqrt();
    let (sl, sk, su) = (p.row(seg.l), p.row(k), p.row(seg.u));
    let values = (0..sl.len())
        .map(|i| root * (sk[i] - sl[i] - ratio * (su[i] - sl[i])))
        .collect();
    Ok(Curve::from_trusted(&p.grid, values))
}

/// Norms of the contrast over all `l < k < u`, with the first maximizer.
pub fn cusum_profile<T: Scalar>(p: &PrefixSums<T>, seg: Segment) -> Result<CusumProfile<T>> {
    seg.check_interior(p.n)?;
    let g = p.grid.len();
    let weights = p.grid.weights();
    let sl = p.row(seg.l);
    let total: Vec<T> = p.row(seg.u).iter().zip(sl).map(|(&a, &b)| a - b).collect();

    let mut norms = Vec::with_capacity(seg.u - seg.l - 1);
    let mut argmax_k = seg.l + 1;
    let mut max_norm = T::neg_infinity();
    for k in (seg.l + 1)..seg.u {
        let (factor, ratio) = scale_factor::<T>(seg.l, seg.u, k);
        let sk = p.row(k);
        let mut acc = T::zero();
        for i in 0..g {
            let d = sk[i] - sl[i] - ratio * total[i];
            acc += weights[i] * (d * d);
        }
        let value = (factor * acc).sqrt();
        if value > max_norm {
            max_norm = value;
            argmax_k = k;
        }
        norms.push(value);
    }
    Ok(CusumProfile {
        segment: seg,
        norms,
        argmax_k,
        max_norm,
    })
}

/// Noiseless profile: the same computation applied to the per-index means
/// `u_1..u_n`.
pub fn theta_profile<T: Scalar>(means: &[Curve<T>], seg: Segment) -> Result<CusumProfile<T>> {
    let grid = means.first().ok_or(Error::EmptySeries)?.grid();
    let p = PrefixSums::from_curves(grid, means)?;
    cusum_profile(&p, seg)
}

/// Splits `S^k_{l,u}` into the mean contrast Θ and the error contrast W.
pub fn decompose<T: Scalar>(
    series_means: &[Curve<T>],
    series: &FunctionalSeries<T>,
    seg: Segment,
    k: usize,
) -> Result<(Curve<T>, Curve<T>)> {
    if series_means.len() != series.len() {
        return Err(Error::Length {
            what: "means",
            expected: series.len(),
            found: series_means.len(),
        });
    }
    let grid = series.grid();
    let errors = series
        .curves()
        .iter()
        .zip(series_means)
        .map(|(x, m)| crate::hilbert::combine(T::one(), x, -T::one(), m))
        .collect::<Result<Vec<_>>>()?;
    let theta = cusum_value(&PrefixSums::from_curves(grid, series_means)?, seg, k)?;
    let noise = cusum_value(&PrefixSums::from_curves(grid, &errors)?, seg, k)?;
    Ok((theta, noise))
}
