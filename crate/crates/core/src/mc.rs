//! Monte Carlo harness: band coverage under white noise, portmanteau power
//! under FAR(1), variance-estimator comparison for the two-dimensional
//! Gaussian process, and residual diagnostics of misspecified FAR fits.
//!
//! Every replication draws from its own stream `(cell << 32) | replication`
//! of the master seed and replications are collected in index order, so a
//! report depends only on its configuration.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{normal_quantile, t_quantile};
use crate::error::{FsacfError, Result};
use crate::far::{fit_fsar, fitted_and_residuals, Dimension};
use crate::functional::{Curve, Grid, DEFAULT_GRID_POINTS};
use crate::median::MedianConfig;
use crate::sacf::{confidence_bound, portmanteau, sacf};
use crate::simulate::{generate_replication, ProcessSpec, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    Estimated,
    KnownZero,
    Both,
}

impl CenterMode {
    fn expand(self) -> Vec<CenterMode> {
        match self {
            CenterMode::Both => vec![CenterMode::Estimated, CenterMode::KnownZero],
            m => vec![m],
        }
    }
}

/// Rejection count of one cell with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub rejections: usize,
    /// Replications that produced a statistic.
    pub valid: usize,
    /// Replications dropped because the spatial median did not converge.
    pub failures: usize,
    pub rate: f64,
    pub se: f64,
}

impl Rate {
    pub fn new(rejections: usize, valid: usize, failures: usize) -> Self {
        let rate = if valid == 0 {
            f64::NAN
        } else {
            rejections as f64 / valid as f64
        };
        let se = if valid == 0 {
            f64::NAN
        } else {
            (rate * (1.0 - rate) / valid as f64).sqrt()
        };
        Self {
            rejections,
            valid,
            failures,
            rate,
            se,
        }
    }

    /// Whether `target` lies within `±max(floor, 3·SE)` of the rate.
    pub fn within(&self, target: f64, floor: f64) -> bool {
        (self.rate - target).abs() <= floor.max(3.0 * self.se)
    }
}

fn stream_id(cell: usize, replication: usize) -> u64 {
    ((cell as u64) << 32) | replication as u64
}

fn check_common(replications: usize, n_list: &[usize], alphas: &[f64]) -> Result<()> {
    if replications == 0 {
        return Err(FsacfError::InvalidArgument(
            "replications must be at least 1".into(),
        ));
    }
    if n_list.is_empty() || n_list.iter().any(|&n| n < 2) {
        return Err(FsacfError::InvalidArgument(
            "sample sizes must be at least 2".into(),
        ));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(FsacfError::InvalidArgument(
            "significance levels must lie in (0, 1)".into(),
        ));
    }
    Ok(())
}

fn default_grid(points: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::uniform(points)?))
}

/// Sums per-replication outcomes (`None` = median failure) in index order.
fn tally(outcomes: &[Option<Vec<bool>>], width: usize) -> Vec<Rate> {
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let valid = outcomes.len() - failures;
    (0..width)
        .map(|k| {
            let rej = outcomes.iter().flatten().filter(|o| o[k]).count();
            Rate::new(rej, valid, failures)
        })
        .collect()
}

fn is_median_failure(e: &FsacfError) -> bool {
    matches!(e, FsacfError::MedianNotConverged { .. })
}

/// Runs `f` for every replication in parallel; median failures become `None`.
fn replicate<F>(replications: usize, f: F) -> Result<Vec<Option<Vec<bool>>>>
where
    F: Fn(usize) -> Result<Vec<bool>> + Sync,
{
    (0..replications)
        .into_par_iter()
        .map(|r| match f(r) {
            Ok(v) => Ok(Some(v)),
            Err(e) if is_median_failure(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

// ============================================================================
// Coverage
// ============================================================================

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    pub n_list: Vec<usize>,
    pub alphas: Vec<f64>,
    /// Lags `h` at which the estimator is compared with the band.
    pub lags: Vec<usize>,
    pub replications: usize,
    pub seed: Seed,
    pub center_mode: CenterMode,
    pub grid_points: usize,
}

impl ExperimentConfig {
    pub fn new(process: ProcessSpec, seed: u64) -> Self {
        Self {
            process,
            n_list: vec![100, 250, 500, 1000, 2000],
            alphas: vec![0.01, 0.05],
            lags: vec![1, 5, 10],
            replications: 1000,
            seed: Seed::new(seed),
            center_mode: CenterMode::Estimated,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageCell {
    pub n: usize,
    pub h: usize,
    pub alpha: f64,
    pub center: CenterMode,
    #[serde(flatten)]
    pub rate: Rate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CoverageCell>,
}

/// Fraction of replications whose `ρ̂_h` falls outside the white-noise band.
pub fn coverage_study(config: &ExperimentConfig) -> Result<CoverageReport> {
    check_common(config.replications, &config.n_list, &config.alphas)?;
    config.process.validate()?;
    if config.lags.is_empty() || config.lags.contains(&0) {
        return Err(FsacfError::InvalidArgument(
            "evaluation lags must be positive".into(),
        ));
    }
    let grid = default_grid(config.grid_points)?;
    let zero = Curve::zeros(Arc::clone(&grid));
    let max_lag = *config.lags.iter().max().unwrap();
    let median_cfg = MedianConfig::default();
    let modes = config.center_mode.expand();
    let mut cells = Vec::new();

    for (ni, &n) in config.n_list.iter().enumerate() {
        if max_lag >= n {
            return Err(FsacfError::InvalidArgument(format!(
                "lag {max_lag} needs n > {max_lag}, got {n}"
            )));
        }
        for &mode in &modes {
            let width = config.lags.len() * config.alphas.len();
            let outcomes = replicate(config.replications, |r| {
                let s =
                    generate_replication(&config.process, n, &grid, config.seed, stream_id(ni, r))?;
                let center = (mode == CenterMode::KnownZero).then_some(&zero);
                let est = sacf(&s, max_lag, center, &median_cfg)?;
                let mut out = Vec::with_capacity(width);
                for &h in &config.lags {
                    for &alpha in &config.alphas {
                        out.push(est.rho[h - 1].abs() > est.bound(alpha)?);
                    }
                }
                Ok(out)
            })?;
            let rates = tally(&outcomes, width);
            let mut k = 0;
            for &h in &config.lags {
                for &alpha in &config.alphas {
                    cells.push(CoverageCell {
                        n,
                        h,
                        alpha,
                        center: mode,
                        rate: rates[k],
                    });
                    k += 1;
                }
            }
        }
    }
    Ok(CoverageReport {
        config: config.clone(),
        cells,
    })
}

// ============================================================================
// Power
// ============================================================================

#[derive(Debug, Clone, Serialize)]
pub struct PowerConfig {
    pub s_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub max_lags: Vec<usize>,
    pub alpha: f64,
    pub replications: usize,
    pub seed: Seed,
    pub grid_points: usize,
}

impl PowerConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            s_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45],
            n_list: vec![100, 250, 500],
            max_lags: vec![1, 5, 10],
            alpha: 0.05,
            replications: 500,
            seed: Seed::new(seed),
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerCell {
    /// Model label, e.g. `FAR(1,0.45)` or `fit FAR(2)`.
    pub model: String,
    pub n: usize,
    #[serde(rename = "H")]
    pub max_lag: usize,
    pub alpha: f64,
    #[serde(flatten)]
    pub rate: Rate,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerReport {
    pub description: String,
    pub seed: Seed,
    pub replications: usize,
    pub cells: Vec<PowerCell>,
}

/// Portmanteau rejection rate on FAR(1, S) data with an estimated median.
pub fn power_study(config: &PowerConfig) -> Result<PowerReport> {
    check_common(config.replications, &config.n_list, &[config.alpha])?;
    if config.max_lags.is_empty() || config.max_lags.contains(&0) {
        return Err(FsacfError::InvalidArgument(
            "portmanteau lags must be positive".into(),
        ));
    }
    if config.s_grid.iter().any(|s| !(*s >= 0.0 && *s < 1.0)) {
        return Err(FsacfError::InvalidArgument(
            "S values must lie in [0, 1)".into(),
        ));
    }
    let grid = default_grid(config.grid_points)?;
    let top = *config.max_lags.iter().max().unwrap();
    let median_cfg = MedianConfig::default();
    let mut cells = Vec::new();
    for (si, &s) in config.s_grid.iter().enumerate() {
        let spec = ProcessSpec::far1(s);
        for (ni, &n) in config.n_list.iter().enumerate() {
            if top >= n {
                return Err(FsacfError::InvalidArgument(format!(
                    "H = {top} needs n > {top}, got {n}"
                )));
            }
            let cell = si * config.n_list.len() + ni;
            let outcomes = replicate(config.replications, |r| {
                let x = generate_replication(&spec, n, &grid, config.seed, stream_id(cell, r))?;
                let est = sacf(&x, top, None, &median_cfg)?;
                config
                    .max_lags
                    .iter()
                    .map(|&h| Ok(portmanteau(&est, h)?.p_value < config.alpha))
                    .collect()
            })?;
            for (k, rate) in tally(&outcomes, config.max_lags.len())
                .into_iter()
                .enumerate()
            {
                cells.push(PowerCell {
                    model: spec.label(),
                    n,
                    max_lag: config.max_lags[k],
                    alpha: config.alpha,
                    rate,
                });
            }
        }
    }
    Ok(PowerReport {
        description: "portmanteau rejection rate on FAR(1,S) data".into(),
        seed: config.seed,
        replications: config.replications,
        cells,
    })
}

// ============================================================================
// Variance estimator
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interval {
    Normal,
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    True,
    Estimated,
}

/// Closed-form `‖C_P‖₂²` of the two-dimensional Gaussian process, available
/// for `(λ₁, λ₂) ∈ {(1, 1), (1, 2)}`.
pub fn true_cp_norm_squared(lambda1: f64, lambda2: f64) -> Result<f64> {
    if lambda1 == 1.0 && lambda2 == 1.0 {
        Ok(0.5)
    } else if lambda1 == 1.0 && lambda2 == 2.0 {
        Ok(9.0 - 6.0 * 2f64.sqrt())
    } else {
        Err(FsacfError::InvalidArgument(format!(
            "no closed-form norm for (lambda1, lambda2) = ({lambda1}, {lambda2}); supported: (1, 1), (1, 2)"
        )))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceConfig {
    pub lambda_pairs: Vec<(f64, f64)>,
    pub n_list: Vec<usize>,
    pub alphas: Vec<f64>,
    pub replications: usize,
    pub seed: Seed,
    pub grid_points: usize,
}

impl VarianceConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            lambda_pairs: vec![(1.0, 1.0), (1.0, 2.0)],
            n_list: vec![100, 250, 500],
            alphas: vec![0.01, 0.05, 0.1],
            replications: 1000,
            seed: Seed::new(seed),
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub n: usize,
    pub alpha: f64,
    pub interval: Interval,
    pub scale: Scale,
    #[serde(flatten)]
    pub rate: Rate,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub config: VarianceConfig,
    pub cells: Vec<VarianceCell>,
}

/// Non-coverage of the lag-one band for normal and t quantiles, each with
/// the true and the estimated `‖C_P‖₂`.
pub fn variance_study(config: &VarianceConfig) -> Result<VarianceReport> {
    check_common(config.replications, &config.n_list, &config.alphas)?;
    let truths = config
        .lambda_pairs
        .iter()
        .map(|&(a, b)| true_cp_norm_squared(a, b).map(f64::sqrt))
        .collect::<Result<Vec<_>>>()?;
    let grid = default_grid(config.grid_points)?;
    let median_cfg = MedianConfig::default();
    let arms = [
        (Interval::Normal, Scale::True),
        (Interval::Normal, Scale::Estimated),
        (Interval::StudentT, Scale::True),
        (Interval::StudentT, Scale::Estimated),
    ];
    let mut cells = Vec::new();
    for (pi, (&(l1, l2), &truth)) in config.lambda_pairs.iter().zip(&truths).enumerate() {
        let spec = ProcessSpec::TwoDimGaussian {
            lambda1: l1,
            lambda2: l2,
        };
        spec.validate()?;
        for (ni, &n) in config.n_list.iter().enumerate() {
            let quantiles = config
                .alphas
                .iter()
                .map(|&a| {
                    Ok((
                        normal_quantile(1.0 - a / 2.0)?,
                        t_quantile(1.0 - a / 2.0, (n - 1) as f64)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let cell = pi * config.n_list.len() + ni;
            let root_n = (n as f64).sqrt();
            let outcomes = replicate(config.replications, |r| {
                let x = generate_replication(&spec, n, &grid, config.seed, stream_id(cell, r))?;
                let est = sacf(&x, 1, None, &median_cfg)?;
                let rho = est.rho[0].abs();
                let mut out = Vec::with_capacity(quantiles.len() * arms.len());
                for &(z, t) in &quantiles {
                    for &(interval, scale) in &arms {
                        let q = if interval == Interval::Normal { z } else { t };
                        let c = if scale == Scale::True {
                            truth
                        } else {
                            est.cp_norm
                        };
                        out.push(rho > q * c / root_n);
                    }
                }
                Ok(out)
            })?;
            let rates = tally(&outcomes, quantiles.len() * arms.len());
            let mut k = 0;
            for &alpha in &config.alphas {
                for &(interval, scale) in &arms {
                    cells.push(VarianceCell {
                        lambda1: l1,
                        lambda2: l2,
                        n,
                        alpha,
                        interval,
                        scale,
                        rate: rates[k],
                    });
                    k += 1;
                }
            }
        }
    }
    Ok(VarianceReport {
        config: config.clone(),
        cells,
    })
}

// ============================================================================
// Residual misfit
// ============================================================================

#[derive(Debug, Clone, Serialize)]
pub struct MisfitConfig {
    pub s1: f64,
    pub s2: f64,
    pub n: usize,
    pub max_lag: usize,
    pub alpha: f64,
    pub cpv: f64,
    pub replications: usize,
    pub seed: Seed,
    pub grid_points: usize,
}

impl MisfitConfig {
    pub fn new(s1: f64, s2: f64, n: usize, seed: u64) -> Self {
        Self {
            s1,
            s2,
            n,
            max_lag: 10,
            alpha: 0.05,
            cpv: 0.9,
            replications: 200,
            seed: Seed::new(seed),
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Portmanteau rejection rates on residuals of FAR(2) and FAR(1) fits to
/// FAR(2, S₁, S₂) data.
pub fn misfit_study(config: &MisfitConfig) -> Result<PowerReport> {
    check_common(config.replications, &[config.n], &[config.alpha])?;
    let spec = ProcessSpec::far2(config.s1, config.s2);
    spec.validate()?;
    if config.max_lag == 0 || config.max_lag + 2 >= config.n {
        return Err(FsacfError::InvalidArgument(format!(
            "H = {} is incompatible with n = {}",
            config.max_lag, config.n
        )));
    }
    let grid = default_grid(config.grid_points)?;
    let median_cfg = MedianConfig::default();
    let fits: [&[usize]; 2] = [&[1, 2], &[1]];
    let outcomes = replicate(config.replications, |r| {
        let x = generate_replication(&spec, config.n, &grid, config.seed, stream_id(0, r))?;
        fits.iter()
            .map(|lags| {
                let fit = fit_fsar(&x, lags, Dimension::Cpv(config.cpv))?;
                let (_, residuals) = fitted_and_residuals(&fit.model, &x)?;
                let est = sacf(&residuals, config.max_lag, None, &median_cfg)?;
                Ok(portmanteau(&est, config.max_lag)?.p_value < config.alpha)
            })
            .collect()
    })?;
    let cells = tally(&outcomes, fits.len())
        .into_iter()
        .zip(["fit FAR(2)", "fit FAR(1)"])
        .map(|(rate, model)| PowerCell {
            model: model.into(),
            n: config.n,
            max_lag: config.max_lag,
            alpha: config.alpha,
            rate,
        })
        .collect();
    Ok(PowerReport {
        description: format!("residual portmanteau on {} data", spec.label()),
        seed: config.seed,
        replications: config.replications,
        cells,
    })
}

/// Lag-one band check used by the examples: is `|ρ̂_1|` outside the band?
pub fn outside_band(rho: f64, n: usize, cp_norm: f64, alpha: f64) -> Result<bool> {
    Ok(rho.abs() > confidence_bound(n, cp_norm, alpha)?)
}
