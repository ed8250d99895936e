// SPDX-License-Identifier: MIT OR Apache-2.0

//! Discretized elements of L²([0,1]).
//!
//! A [`Grid`] fixes sampling locations and quadrature weights; a [`Curve`] is a
//! vector of function values on one shared grid. The inner product is the
//! quadrature rule `Σ w_i f_i g_i`, so every Hilbert-space identity holds exactly
//! for the discretized space (up to rounding), while agreement with the
//! continuous integral is limited by the quadrature error of the grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sampling locations and quadrature weights on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    /// Uniform grid with composite-trapezoid weights.
    ///
    /// `size == 1` yields the single point 0.5 with weight 1, which reduces the
    /// space to the real line.
    pub fn uniform(size: usize) -> Result<Self> {
        match size {
            0 => Err(Error::InvalidGrid("grid needs at least one point".into())),
            1 => Ok(Self {
                points: vec![T::of(0.5)],
                weights: vec![T::one()],
            }),
            _ => {
                let intervals = T::of_usize(size - 1);
                let h = T::one() / intervals;
                let half = h / T::of(2.0);
                let points = (0..size).map(|i| T::of_usize(i) / intervals).collect();
                let mut weights = vec![h; size];
                weights[0] = half;
                weights[size - 1] = half;
                Ok(Self { points, weights })
            }
        }
    }

    /// Arbitrary increasing points in [0,1] with trapezoid weights over their span.
    /// A single point gets weight 1.
    pub fn from_points(points: Vec<T>) -> Result<Self> {
        check_points(&points)?;
        let g = points.len();
        let weights = if g == 1 {
            vec![T::one()]
        } else {
            let half = T::of(0.5);
            (0..g)
                .map(|i| {
                    let left = if i == 0 { points[0] } else { points[i - 1] };
                    let right = if i + 1 == g {
                        points[g - 1]
                    } else {
                        points[i + 1]
                    };
                    (right - left) * half
                })
                .collect()
        };
        Ok(Self { points, weights })
    }

    /// Points with caller-supplied nonnegative quadrature weights.
    pub fn with_weights(points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        check_points(&points)?;
        if weights.len() != points.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < T::zero())
        {
            return Err(Error::InvalidGrid(format!(
                "weight {i} is {w}; weights must be finite and nonnegative"
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// True when this grid is exactly `Grid::uniform(self.len())`.
    pub fn is_default_uniform(&self) -> bool {
        Self::uniform(self.len()).is_ok_and(|u| &u == self)
    }

    /// Quadrature inner product of two raw value slices of length `len()`.
    #[inline]
    pub fn dot(&self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), self.weights.len());
        debug_assert_eq!(b.len(), self.weights.len());
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .fold(T::zero(), |acc, (&w, (&x, &y))| acc + w * (x * y))
    }

    #[inline]
    pub fn sq_norm(&self, a: &[T]) -> T {
        self.dot(a, a)
    }
}

fn check_points<T: Scalar>(points: &[T]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidGrid("grid needs at least one point".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() || *p < T::zero() || *p > T::one() {
            return Err(Error::InvalidGrid(format!(
                "point {i} = {p} lies outside [0, 1]"
            )));
        }
    }
    if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "points must be strictly increasing (positions {i} and {})",
            i + 1
        )));
    }
    Ok(())
}

pub(crate) fn same_grid<T: Scalar>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// One functional observation: finite values on a shared [`Grid`].
#[derive(Debug, Clone)]
pub struct Curve<T> {
    values: Vec<T>,
    grid: Arc<Grid<T>>,
}

impl<T: Scalar> Curve<T> {
    pub fn new(grid: &Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self {
            values,
            grid: Arc::clone(grid),
        })
    }

    pub fn zero(grid: &Arc<Grid<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Panics if `value` is not finite.
    pub fn constant(grid: &Arc<Grid<T>>, value: T) -> Self {
        assert!(value.is_finite(), "constant curve value must be finite");
        Self {
            values: vec![value; grid.len()],
            grid: Arc::clone(grid),
        }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_trusted(grid: &Arc<Grid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            values,
            grid: Arc::clone(grid),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> T {
        norm(self)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

impl<T: Scalar> PartialEq for Curve<T> {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && same_grid(&self.grid, &other.grid)
    }
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index].as_f64(),
        }),
        None => Ok(()),
    }
}

fn ensure_same_grid<T: Scalar>(f: &Curve<T>, g: &Curve<T>) -> Result<()> {
    if same_grid(&f.grid, &g.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `⟨f, g⟩ = Σ_i w_i f(t_i) g(t_i)`.
pub fn inner_product<T: Scalar>(f: &Curve<T>, g: &Curve<T>) -> Result<T> {
    ensure_same_grid(f, g)?;
    Ok(f.grid.dot(&f.values, &g.values))
}

pub fn norm<T: Scalar>(f: &Curve<T>) -> T {
    f.grid.sq_norm(&f.values).sqrt()
}

/// Pointwise `alpha·f + beta·g`.
pub fn combine<T: Scalar>(alpha: T, f: &Curve<T>, beta: T, g: &Curve<T>) -> Result<Curve<T>> {
    ensure_same_grid(f, g)?;
    let values: Vec<T> = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(&x, &y)| alpha * x + beta * y)
        .collect();
    check_finite(&values)?;
    Ok(Curve::from_trusted(&f.grid, values))
}

/// Ordered observations `X_1, …, X_n` sharing one grid.
#[derive(Debug, Clone)]
pub struct FunctionalSeries<T> {
    grid: Arc<Grid<T>>,
    curves: Vec<Curve<T>>,
}

impl<T: Scalar> PartialEq for FunctionalSeries<T> {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.curves == other.curves
    }
}

impl<T: Scalar> FunctionalSeries<T> {
    pub fn new(grid: Arc<Grid<T>>, curves: Vec<Curve<T>>) -> Result<Self> {
        if curves.iter().any(|c| !same_grid(&grid, &c.grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, curves })
    }

    /// One row of values per observation.
    pub fn from_rows(grid: Arc<Grid<T>>, rows: Vec<Vec<T>>) -> Result<Self> {
        let curves = rows
            .into_iter()
            .map(|r| Curve::new(&grid, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, curves })
    }

    /// Real-valued series on the one-point grid.
    pub fn scalar(values: &[T]) -> Result<Self> {
        let grid = Arc::new(Grid::uniform(1)?);
        Self::from_rows(grid, values.iter().map(|&v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve<T>] {
        &self.curves
    }

    pub fn into_curves(self) -> Vec<Curve<T>> {
        self.curves
    }

    /// Pointwise sum of two series of equal length.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Length {
                what: "series",
                expected: self.len(),
                found: other.len(),
            });
        }
        let curves = self
            .curves
            .iter()
            .zip(&other.curves)
            .map(|(a, b)| combine(T::one(), a, T::one(), b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Arc::clone(&self.grid), curves)
    }
}
