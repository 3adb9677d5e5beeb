//! Spherical autocorrelation of a functional time series.
//!
//! Observations are centered at the spatial median (or a supplied center),
//! projected onto the unit sphere, and lagged pairs are compared by their
//! inner product:
//!
//! ```text
//! ρ_h = (1/n) Σ_{i=1}^{n−h} ⟨S(X_i − μ), S(X_{i+h} − μ)⟩
//! ```
//!
//! Under strong white noise `√n ρ_h` is asymptotically `N(0, ‖C_P‖₂²)`, where
//! `C_P` is the covariance kernel of the projected observations. That gives
//! the symmetric band `±z_{1−α/2} ‖Ĉ_P‖₂ / √n` and the portmanteau statistic
//! `Q = n Σ_h ρ_h²`, compared against `‖Ĉ_P‖₂² χ²(H)`.
//!
//! The classical functional autocorrelation (fACF) is provided alongside for
//! comparison.

use serde::Serialize;

use crate::distributions::{chi2_sf, normal_quantile};
use crate::error::{FsacfError, Result};
use crate::functional::{same_grid, sign_into, weighted_dot, Curve, FunctionalSeries};
use crate::median::{spatial_median, MedianConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    EstimatedMedian,
    SuppliedCenter,
}

#[derive(Debug, Clone)]
pub struct SacfEstimate {
    pub n: usize,
    /// Lags `1..=H`.
    pub lags: Vec<usize>,
    /// `rho[k]` is the estimate at lag `lags[k]`.
    pub rho: Vec<f64>,
    /// Lag-0 value: the fraction of curves that differ from the center.
    pub rho0: f64,
    /// Hilbert–Schmidt norm of the sign covariance kernel.
    pub cp_norm: f64,
    pub centered_by: Centering,
    pub center: Curve,
}

impl SacfEstimate {
    pub fn max_lag(&self) -> usize {
        self.lags.len()
    }

    /// Half-width of the `1 − alpha` white-noise band.
    pub fn bound(&self, alpha: f64) -> Result<f64> {
        confidence_bound(self.n, self.cp_norm, alpha)
    }

    pub fn rho_at(&self, lag: usize) -> Option<f64> {
        if lag == 0 {
            Some(self.rho0)
        } else {
            self.rho.get(lag - 1).copied()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortmanteauResult {
    #[serde(rename = "H")]
    pub max_lag: usize,
    #[serde(rename = "Q")]
    pub statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
}

/// Spatial signs of every curve around `center`, row-major `n × M`, and the
/// number of curves whose sign is nonzero.
pub(crate) fn signs(series: &FunctionalSeries, center: &[f64]) -> (Vec<f64>, usize) {
    let m = series.grid().len();
    let w = series.grid().weights();
    let mut out = vec![0.0; series.len() * m];
    let mut live = 0;
    for (c, row) in series.curves().iter().zip(out.chunks_exact_mut(m)) {
        if sign_into(c.values(), center, w, row) {
            live += 1;
        }
    }
    (out, live)
}

fn check_center(series: &FunctionalSeries, center: &Curve) -> Result<()> {
    if same_grid(series.grid(), center.grid()) {
        Ok(())
    } else {
        Err(FsacfError::GridMismatch(
            "center is on a different grid than the series".into(),
        ))
    }
}

/// Spherical autocorrelation at lags `1..=max_lag`.
///
/// With `center = None` the spatial median is estimated first; otherwise the
/// given center is used as is.
pub fn sacf(
    series: &FunctionalSeries,
    max_lag: usize,
    center: Option<&Curve>,
    config: &MedianConfig,
) -> Result<SacfEstimate> {
    let n = series.len();
    if max_lag >= n {
        return Err(FsacfError::InvalidArgument(format!(
            "max lag {max_lag} must be smaller than the series length {n}"
        )));
    }
    let (center, centered_by) = match center {
        Some(c) => {
            check_center(series, c)?;
            (c.clone(), Centering::SuppliedCenter)
        }
        None => (spatial_median(series, config)?, Centering::EstimatedMedian),
    };

    let m = series.grid().len();
    let w = series.grid().weights();
    let (s, live) = signs(series, center.values());
    let inv_n = 1.0 / n as f64;

    let rho = (1..=max_lag)
        .map(|h| {
            let mut acc = 0.0;
            for i in 0..n - h {
                acc += weighted_dot(&s[i * m..(i + 1) * m], &s[(i + h) * m..(i + h + 1) * m], w);
            }
            acc * inv_n
        })
        .collect();

    Ok(SacfEstimate {
        n,
        lags: (1..=max_lag).collect(),
        rho,
        rho0: live as f64 * inv_n,
        cp_norm: cp_norm_from_signs(&s, n, w),
        centered_by,
        center,
    })
}

/// `‖Ĉ_P‖₂` for the signs of `series` around `center`.
pub fn cp_norm(series: &FunctionalSeries, center: &Curve) -> Result<f64> {
    check_center(series, center)?;
    let (s, _) = signs(series, center.values());
    Ok(cp_norm_from_signs(
        &s,
        series.len(),
        series.grid().weights(),
    ))
}

/// Double Riemann sum `Σ_{j,k} Ĉ_P(t_j, t_k)² w_j w_k` with
/// `Ĉ_P(t, s) = (1/n) Σ_i S_i(t) S_i(s)`, square-rooted.
pub(crate) fn cp_norm_from_signs(s: &[f64], n: usize, w: &[f64]) -> f64 {
    let m = w.len();
    let active: Vec<usize> = (0..m).filter(|&j| w[j] > 0.0).collect();
    let ma = active.len();
    // Gather the signs on weighted points once; C is symmetric so only the
    // upper triangle is accumulated.
    let mut rows = vec![0.0; n * ma];
    for i in 0..n {
        for (a, &j) in active.iter().enumerate() {
            rows[i * ma + a] = s[i * m + j];
        }
    }
    let mut c = vec![0.0; ma * ma];
    for row in rows.chunks_exact(ma) {
        for a in 0..ma {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            let dst = &mut c[a * ma + a..(a + 1) * ma];
            for (d, rb) in dst.iter_mut().zip(&row[a..]) {
                *d += ra * rb;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    for a in 0..ma {
        let wa = w[active[a]];
        for b in a..ma {
            let v = c[a * ma + b] * inv_n;
            let term = v * v * wa * w[active[b]];
            total += if a == b { term } else { 2.0 * term };
        }
    }
    total.sqrt()
}

/// Half-width `z_{1−α/2} · ‖Ĉ_P‖₂ / √n` of the white-noise band.
pub fn confidence_bound(n: usize, cp_norm: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FsacfError::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if n == 0 {
        return Err(FsacfError::InvalidArgument(
            "sample size must be >= 1".into(),
        ));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    Ok(z * cp_norm / (n as f64).sqrt())
}

/// Portmanteau test of zero autocorrelation at lags `1..=max_lag`.
pub fn portmanteau(estimate: &SacfEstimate, max_lag: usize) -> Result<PortmanteauResult> {
    if max_lag == 0 || max_lag > estimate.rho.len() {
        return Err(FsacfError::InvalidArgument(format!(
            "portmanteau lag {max_lag} must be in 1..={}",
            estimate.rho.len()
        )));
    }
    portmanteau_from(&estimate.rho[..max_lag], estimate.n, estimate.cp_norm)
}

/// `Q = n Σ ρ_h²` and `p = P(‖Ĉ_P‖₂² χ²(H) > Q)` from raw lag values.
pub fn portmanteau_from(rho: &[f64], n: usize, cp_norm: f64) -> Result<PortmanteauResult> {
    let h = rho.len();
    if h == 0 {
        return Err(FsacfError::InvalidArgument("no lags supplied".into()));
    }
    let q = n as f64 * rho.iter().map(|r| r * r).sum::<f64>();
    let scale = cp_norm * cp_norm;
    let p = if q == 0.0 {
        1.0
    } else if scale == 0.0 {
        0.0
    } else {
        chi2_sf(q / scale, h)?
    };
    Ok(PortmanteauResult {
        max_lag: h,
        statistic: q,
        p_value: p,
    })
}

/// Classical functional autocorrelation `‖Ĉ_h‖₂ / ∫ Ĉ_0(t, t) dt` at lags
/// `1..=max_lag`, with mean centering.
pub fn facf(series: &FunctionalSeries, max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(FsacfError::InvalidArgument(format!(
            "max lag {max_lag} must be smaller than the series length {n}"
        )));
    }
    let prep = FacfData::new(series)?;
    Ok((1..=max_lag).map(|h| prep.lag(h)).collect())
}

/// fACF at a single lag (including 0).
pub fn facf_lag(series: &FunctionalSeries, lag: usize) -> Result<f64> {
    if lag >= series.len() {
        return Err(FsacfError::InvalidArgument(format!(
            "lag {lag} must be smaller than the series length {}",
            series.len()
        )));
    }
    Ok(FacfData::new(series)?.lag(lag))
}

/// Centered curves on the weighted grid points, scaled by `√w`, so that
/// Riemann double sums become plain Frobenius norms.
struct FacfData {
    y: Vec<f64>,
    n: usize,
    ma: usize,
    trace: f64,
}

impl FacfData {
    fn new(series: &FunctionalSeries) -> Result<Self> {
        let n = series.len();
        let w = series.grid().weights();
        let mean = series.mean_curve();
        let active: Vec<usize> = (0..w.len()).filter(|&j| w[j] > 0.0).collect();
        let ma = active.len();
        let sw: Vec<f64> = active.iter().map(|&j| w[j].sqrt()).collect();
        let mut y = vec![0.0; n * ma];
        for (i, c) in series.curves().iter().enumerate() {
            for (a, &j) in active.iter().enumerate() {
                y[i * ma + a] = (c.values()[j] - mean.values()[j]) * sw[a];
            }
        }
        let trace = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if !(trace > 0.0) {
            return Err(FsacfError::Degenerate(
                "zero total variance; the fACF is undefined".into(),
            ));
        }
        Ok(Self { y, n, ma, trace })
    }

    fn lag(&self, h: usize) -> f64 {
        let (n, ma) = (self.n, self.ma);
        let mut c = vec![0.0; ma * ma];
        for i in 0..n - h {
            let a_row = &self.y[i * ma..(i + 1) * ma];
            let b_row = &self.y[(i + h) * ma..(i + h + 1) * ma];
            for (a, &ya) in a_row.iter().enumerate() {
                if ya == 0.0 {
                    continue;
                }
                for (d, yb) in c[a * ma..(a + 1) * ma].iter_mut().zip(b_row) {
                    *d += ya * yb;
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        let hs = c
            .iter()
            .map(|v| (v * inv_n) * (v * inv_n))
            .sum::<f64>()
            .sqrt();
        hs / self.trace
    }
}
