//! Functional (seasonal) autoregression fitted by least squares in FPC score
//! space, with fitted values and residuals for diagnosis.
//!
//! With lags `ℓ_1 < … < ℓ_k` and `p` principal components, the score vector
//! `ξ_i ∈ ℝ^p` is regressed on `(ξ_{i−ℓ_1}, …, ξ_{i−ℓ_k})`. Block `m` of the
//! stacked coefficient matrix maps to the kernel
//!
//! ```text
//! φ_{ℓ_m}(t, s) = Σ_{j,r} Φ_m[j, r] v_r(t) v_j(s)
//! ```
//!
//! so that `∫ φ_{ℓ_m}(t, s) x(s) ds` reproduces the score-space prediction.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{FsacfError, Result};
use crate::fpca::{fpca, select_cpv, FpcaResult};
use crate::functional::{same_grid, weighted_dot, Curve, FunctionalSeries, Grid};
use crate::linalg::{solve_spd, Matrix};

/// How many principal components enter the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dimension {
    Fixed(usize),
    /// Smallest `p` whose cumulative proportion of variance exceeds the threshold.
    Cpv(f64),
}

#[derive(Debug, Clone)]
pub struct FarModel {
    lags: Vec<usize>,
    p: usize,
    /// Stacked `k·p × p`; rows `m·p..(m+1)·p` form the block of `lags[m]`.
    coefficients: Matrix,
    eigenfunctions: Vec<Curve>,
    mean: Curve,
}

/// Serializable description of a fitted model.
#[derive(Debug, Clone, Serialize)]
pub struct FarSummary {
    pub lags: Vec<usize>,
    pub p: usize,
    /// One `p × p` block per lag, row-major.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub eigenvalues: Vec<f64>,
    pub cpv: Option<f64>,
}

impl FarModel {
    pub fn new(
        lags: Vec<usize>,
        coefficients: Matrix,
        eigenfunctions: Vec<Curve>,
        mean: Curve,
    ) -> Result<Self> {
        validate_lags(&lags)?;
        let p = eigenfunctions.len();
        if p == 0 {
            return Err(FsacfError::InvalidArgument(
                "model needs at least one eigenfunction".into(),
            ));
        }
        if coefficients.rows() != lags.len() * p || coefficients.cols() != p {
            return Err(FsacfError::InvalidArgument(format!(
                "coefficients are {}x{}, expected {}x{p}",
                coefficients.rows(),
                coefficients.cols(),
                lags.len() * p
            )));
        }
        if coefficients.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(FsacfError::InvalidArgument("non-finite coefficient".into()));
        }
        if eigenfunctions
            .iter()
            .any(|e| !same_grid(e.grid(), mean.grid()))
        {
            return Err(FsacfError::GridMismatch(
                "eigenfunctions and mean differ in grid".into(),
            ));
        }
        Ok(Self {
            lags,
            p,
            coefficients,
            eigenfunctions,
            mean,
        })
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coefficients(&self) -> &Matrix {
        &self.coefficients
    }

    pub fn eigenfunctions(&self) -> &[Curve] {
        &self.eigenfunctions
    }

    pub fn mean(&self) -> &Curve {
        &self.mean
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.mean.grid()
    }

    pub fn max_lag(&self) -> usize {
        *self.lags.last().expect("lags are nonempty")
    }

    /// `Φ_m[j, r]` for lag index `m`.
    pub fn block_entry(&self, m: usize, j: usize, r: usize) -> f64 {
        self.coefficients[(m * self.p + j, r)]
    }

    /// Kernel surface of `lags[m]` on the grid lattice, `k[(a, b)] = φ(t_a, s_b)`.
    pub fn kernel(&self, m: usize) -> Result<Matrix> {
        if m >= self.lags.len() {
            return Err(FsacfError::InvalidArgument(format!("no lag block {m}")));
        }
        let g = self.grid().len();
        let mut k = Matrix::zeros(g, g);
        for j in 0..self.p {
            let vj = self.eigenfunctions[j].values();
            for r in 0..self.p {
                let c = self.block_entry(m, j, r);
                if c == 0.0 {
                    continue;
                }
                let vr = self.eigenfunctions[r].values();
                for a in 0..g {
                    let ca = c * vr[a];
                    for b in 0..g {
                        k[(a, b)] += ca * vj[b];
                    }
                }
            }
        }
        Ok(k)
    }

    pub fn summary(&self, eigenvalues: &[f64], cpv: Option<f64>) -> FarSummary {
        let coefficients = (0..self.lags.len())
            .map(|m| {
                (0..self.p)
                    .map(|j| (0..self.p).map(|r| self.block_entry(m, j, r)).collect())
                    .collect()
            })
            .collect();
        FarSummary {
            lags: self.lags.clone(),
            p: self.p,
            coefficients,
            eigenvalues: eigenvalues.to_vec(),
            cpv,
        }
    }
}

fn validate_lags(lags: &[usize]) -> Result<()> {
    if lags.is_empty() {
        return Err(FsacfError::InvalidArgument(
            "at least one lag is required".into(),
        ));
    }
    if lags[0] == 0 || lags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FsacfError::InvalidArgument(format!(
            "lags must be strictly increasing positive integers, got {lags:?}"
        )));
    }
    Ok(())
}

/// A fitted model together with the FPCA it was built on.
#[derive(Debug, Clone)]
pub struct FarFit {
    pub model: FarModel,
    pub fpca: FpcaResult,
}

/// Least-squares FSAR fit; `lags = [1, …, p]` gives FAR(p).
pub fn fit_fsar(series: &FunctionalSeries, lags: &[usize], dimension: Dimension) -> Result<FarFit> {
    let mut lags = lags.to_vec();
    lags.sort_unstable();
    validate_lags(&lags)?;
    let decomposition = fpca(series)?;
    let p = resolve_dimension(&decomposition, dimension)?;
    let n = series.len();
    let top = *lags.last().unwrap();
    if n <= top + p {
        return Err(FsacfError::TooShort {
            needed: top + p + 1,
            got: n,
        });
    }
    let (xl, xr) = design(&decomposition.scores, &lags, p);
    let coefficients = solve_spd(&xl.gram(), &xl.transpose().matmul(&xr)?)?;
    let model = FarModel::new(
        lags,
        coefficients,
        decomposition.eigenfunctions[..p].to_vec(),
        decomposition.mean.clone(),
    )?;
    Ok(FarFit {
        model,
        fpca: decomposition,
    })
}

fn resolve_dimension(f: &FpcaResult, dimension: Dimension) -> Result<usize> {
    let p = match dimension {
        Dimension::Fixed(p) => p,
        Dimension::Cpv(threshold) => select_cpv(&f.eigenvalues, threshold)?,
    };
    if p == 0 || p > f.components() {
        return Err(FsacfError::InvalidArgument(format!(
            "FPC dimension must be in 1..={}, got {p}",
            f.components()
        )));
    }
    Ok(p)
}

/// Lagged design `X_L` ((n − ℓ_k) × kp) and response `X_R` ((n − ℓ_k) × p).
pub(crate) fn design(scores: &Matrix, lags: &[usize], p: usize) -> (Matrix, Matrix) {
    let n = scores.rows();
    let top = *lags.last().unwrap();
    let rows = n - top;
    let mut xl = Matrix::zeros(rows, lags.len() * p);
    let mut xr = Matrix::zeros(rows, p);
    for (row, i) in (top..n).enumerate() {
        for r in 0..p {
            xr[(row, r)] = scores[(i, r)];
        }
        for (m, &l) in lags.iter().enumerate() {
            for j in 0..p {
                xl[(row, m * p + j)] = scores[(i - l, j)];
            }
        }
    }
    (xl, xr)
}

/// The lag-one kernel estimator
///
/// ```text
/// φ(t, s) = (n−1)⁻¹ Σ_{k<n} Σ_{j,i ≤ J} λ_j⁻¹ ξ_{k,j} ξ_{k+1,i} v_j(s) v_i(t)
/// ```
///
/// with scores of the mean-centered curves.
pub fn far1_kernel_pca(series: &FunctionalSeries, components: usize) -> Result<Matrix> {
    far1_pca_model(series, components)?.kernel(0)
}

/// The same estimator as a lag-one [`FarModel`], for fitted values and residuals.
pub fn far1_pca_model(series: &FunctionalSeries, components: usize) -> Result<FarModel> {
    let n = series.len();
    if n < 2 {
        return Err(FsacfError::TooShort { needed: 2, got: n });
    }
    let f = fpca(series)?;
    let j = resolve_dimension(&f, Dimension::Fixed(components))?;
    let leading = f.eigenvalues[0];
    let last = f.eigenvalues[j - 1];
    if !(last > 1e-12 * leading) {
        return Err(FsacfError::IllConditioned {
            index: j,
            value: last,
            leading,
        });
    }
    let mut a = Matrix::zeros(j, j);
    let scale = 1.0 / (n - 1) as f64;
    for k in 0..n - 1 {
        for jj in 0..j {
            let left = f.scores[(k, jj)] * scale / f.eigenvalues[jj];
            for i in 0..j {
                a[(jj, i)] += left * f.scores[(k + 1, i)];
            }
        }
    }
    FarModel::new(vec![1], a, f.eigenfunctions[..j].to_vec(), f.mean.clone())
}

/// Fitted curves `X̂_i` and residuals `X_i − X̂_i` for `i = ℓ_k + 1, …, n`.
pub fn fitted_and_residuals(
    model: &FarModel,
    series: &FunctionalSeries,
) -> Result<(FunctionalSeries, FunctionalSeries)> {
    if series.grid().len() != model.grid().len() || series.grid().points() != model.grid().points()
    {
        return Err(FsacfError::GridMismatch(
            "series grid differs from the model's eigenfunction grid".into(),
        ));
    }
    let n = series.len();
    let top = model.max_lag();
    if n <= top {
        return Err(FsacfError::TooShort {
            needed: top + 1,
            got: n,
        });
    }
    let grid = Arc::clone(series.grid());
    let w = grid.weights();
    let p = model.p;
    let mean = model.mean.values();

    // scores of every curve about the model mean
    let mut centered = vec![0.0; w.len()];
    let scores: Vec<Vec<f64>> = series
        .iter()
        .map(|c| {
            for ((d, x), m) in centered.iter_mut().zip(c.values()).zip(mean) {
                *d = x - m;
            }
            model
                .eigenfunctions
                .iter()
                .map(|e| weighted_dot(&centered, e.values(), w))
                .collect()
        })
        .collect();

    let mut fitted = Vec::with_capacity(n - top);
    let mut residuals = Vec::with_capacity(n - top);
    let mut pred = vec![0.0; p];
    for i in top..n {
        pred.iter_mut().for_each(|v| *v = 0.0);
        for (m, &l) in model.lags.iter().enumerate() {
            let lagged = &scores[i - l];
            for (j, xj) in lagged.iter().enumerate() {
                for (r, pr) in pred.iter_mut().enumerate() {
                    *pr += xj * model.block_entry(m, j, r);
                }
            }
        }
        let mut f = mean.to_vec();
        for (r, pr) in pred.iter().enumerate() {
            for (a, e) in f.iter_mut().zip(model.eigenfunctions[r].values()) {
                *a += pr * e;
            }
        }
        let res: Vec<f64> = series.curves()[i]
            .values()
            .iter()
            .zip(&f)
            .map(|(x, y)| x - y)
            .collect();
        fitted.push(f);
        residuals.push(res);
    }
    Ok((
        FunctionalSeries::from_rows(Arc::clone(&grid), fitted)?,
        FunctionalSeries::from_rows(grid, residuals)?,
    ))
}
