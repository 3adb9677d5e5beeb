//! Discretized functional data: sampling grids, curves, ordered series of
//! curves, and Riemann quadrature on the grid.
//!
//! Every integral over `[0, 1]` in this crate is the left-gap Riemann sum
//!
//! ```text
//! ∫ f(t) dt ≈ Σ_j f(t_j) (t_j − t_{j−1}),   t_0 = 0
//! ```
//!
//! so a grid whose first point is `0` gives that point zero weight.

use std::sync::Arc;

use crate::error::{FsacfError, Result};

/// Norms at or below this value are treated as zero by [`spatial_sign`].
pub const SIGN_FLOOR: f64 = 1e-12;

/// Number of points of the default simulation grid.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Strictly increasing sampling points in `[0, 1]` with their Riemann weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(FsacfError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (j, &t) in points.iter().enumerate() {
            if !t.is_finite() || !(0.0..=1.0).contains(&t) {
                return Err(FsacfError::InvalidGrid(format!(
                    "point {j} = {t} is outside [0, 1]"
                )));
            }
            if j > 0 && t <= points[j - 1] {
                return Err(FsacfError::InvalidGrid(format!(
                    "points must be strictly increasing (t_{j} = {t} <= t_{} = {})",
                    j - 1,
                    points[j - 1]
                )));
            }
        }
        let weights = points
            .iter()
            .scan(0.0, |prev, &t| {
                let w = t - *prev;
                *prev = t;
                Some(w)
            })
            .collect();
        Ok(Self { points, weights })
    }

    /// `m` equally spaced points on `[0, 1]`, both endpoints included.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(FsacfError::InvalidGrid(format!(
                "need at least 2 points, got {m}"
            )));
        }
        let last = (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|j| j as f64 / last).collect();
        points[m - 1] = 1.0;
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ_j w_j, which equals the last grid point.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Riemann integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Keeps grid points `from..`; weights are recomputed with `t_0 = 0`.
    pub fn drop_leading(&self, from: usize) -> Result<Self> {
        Self::new(self.points[from.min(self.points.len())..].to_vec())
    }
}

/// True when two grid handles describe the same discretization.
pub fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.as_ref() == b.as_ref()
}

fn check_same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(FsacfError::GridMismatch(format!(
            "grids with {} and {} points differ",
            a.len(),
            b.len()
        )))
    }
}

/// Weighted dot product Σ_j a_j b_j w_j of raw value slices.
#[inline]
pub(crate) fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

/// One observed function sampled on a grid.
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.values == other.values
    }
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FsacfError::InvalidCurve(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(FsacfError::InvalidCurve(format!(
                "non-finite value {} at grid point {j}",
                values[j]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Curve) -> Result<Curve> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scaled(&self, c: f64) -> Curve {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Curve {
        Curve {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Curve, f: impl Fn(f64, f64) -> f64) -> Result<Curve> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(Curve {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest absolute pointwise difference; `INFINITY` on grid mismatch.
    pub fn max_abs_diff(&self, other: &Curve) -> f64 {
        if !same_grid(&self.grid, &other.grid) {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Riemann inner product Σ_j f(t_j) g(t_j) w_j.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    check_same_grid(&f.grid, &g.grid)?;
    Ok(weighted_dot(&f.values, &g.values, f.grid.weights()))
}

pub fn norm(f: &Curve) -> f64 {
    weighted_dot(&f.values, &f.values, f.grid.weights()).sqrt()
}

/// Spatial sign of `f − center`: the difference scaled to unit norm, or the
/// zero curve when its norm is at most [`SIGN_FLOOR`].
pub fn spatial_sign(f: &Curve, center: &Curve) -> Result<Curve> {
    let diff = f.sub(center)?;
    let r = norm(&diff);
    if r <= SIGN_FLOOR {
        Ok(Curve::zeros(Arc::clone(&f.grid)))
    } else {
        Ok(diff.scaled(1.0 / r))
    }
}

/// Spatial signs of raw values around `center`, written into `out`.
/// Returns `false` (and writes zeros) for a degenerate difference.
pub(crate) fn sign_into(values: &[f64], center: &[f64], w: &[f64], out: &mut [f64]) -> bool {
    let mut ss = 0.0;
    for ((o, x), c) in out.iter_mut().zip(values).zip(center) {
        *o = x - c;
    }
    for (o, w) in out.iter().zip(w) {
        ss += o * o * w;
    }
    let r = ss.sqrt();
    if r <= SIGN_FLOOR {
        out.iter_mut().for_each(|o| *o = 0.0);
        false
    } else {
        let inv = 1.0 / r;
        out.iter_mut().for_each(|o| *o *= inv);
        true
    }
}

/// An ordered stretch `X_1, …, X_n` of curves on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSeries {
    grid: Arc<Grid>,
    curves: Vec<Curve>,
}

impl FunctionalSeries {
    pub fn new(grid: Arc<Grid>, curves: Vec<Curve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(FsacfError::TooShort { needed: 1, got: 0 });
        }
        for (i, c) in curves.iter().enumerate() {
            if !same_grid(&grid, &c.grid) {
                return Err(FsacfError::GridMismatch(format!(
                    "curve {i} is on a different grid"
                )));
            }
        }
        // Re-point every curve at the series grid so later checks are pointer hits.
        let curves = curves
            .into_iter()
            .map(|c| Curve {
                grid: Arc::clone(&grid),
                values: c.values,
            })
            .collect();
        Ok(Self { grid, curves })
    }

    /// Builds a series from raw rows of values.
    pub fn from_rows(grid: Arc<Grid>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let curves = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                Curve::new(Arc::clone(&grid), r).map_err(|e| match e {
                    FsacfError::InvalidCurve(m) => {
                        FsacfError::InvalidCurve(format!("curve {i}: {m}"))
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, curves)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Curve> {
        self.curves.iter()
    }

    pub fn into_curves(self) -> Vec<Curve> {
        self.curves
    }

    /// Cross-sectional sample mean curve.
    pub fn mean_curve(&self) -> Curve {
        let m = self.grid.len();
        let mut acc = vec![0.0; m];
        for c in &self.curves {
            for (a, v) in acc.iter_mut().zip(&c.values) {
                *a += v;
            }
        }
        let inv = 1.0 / self.curves.len() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Curve {
            grid: Arc::clone(&self.grid),
            values: acc,
        }
    }

    /// Applies `f` to every curve, keeping the grid.
    pub fn map_curves(&self, f: impl Fn(&Curve) -> Curve) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), self.curves.iter().map(f).collect())
    }

    /// Curves `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), self.curves[range].to_vec())
    }
}
