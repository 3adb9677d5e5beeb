//! Functional spatial (geometric) median via Weiszfeld iteration.
//!
//! The estimate minimizes `Σ_i ‖X_i − μ‖` over curves `μ` on the series grid.
//! Each step re-weights the observations by their inverse distance to the
//! current iterate:
//!
//! ```text
//! μ ← (Σ_i X_i / ‖X_i − μ‖) / (Σ_i 1 / ‖X_i − μ‖)
//! ```
//!
//! Observations closer than `singularity_floor` to the iterate are left out of
//! both sums for that step.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{FsacfError, Result};
use crate::functional::{weighted_dot, Curve, FunctionalSeries};
use crate::linalg::{solve_spd, Matrix};

/// Number of past steps mixed by the Anderson accelerator.
const ANDERSON_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianConfig {
    pub max_iterations: usize,
    /// Stop once the step length falls below `tolerance` times the mean
    /// distance of the observations to the iterate.
    pub tolerance: f64,
    pub singularity_floor: f64,
}

impl Default for MedianConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
            singularity_floor: 1e-10,
        }
    }
}

impl MedianConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(FsacfError::InvalidArgument(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(FsacfError::InvalidArgument(
                "tolerance must be positive".into(),
            ));
        }
        if !(self.singularity_floor > 0.0) {
            return Err(FsacfError::InvalidArgument(
                "singularity_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a Weiszfeld run with its diagnostics.
#[derive(Debug, Clone)]
pub struct MedianFit {
    pub median: Curve,
    pub iterations: usize,
    /// Objective `Σ_i ‖X_i − μ_k‖` at the starting point and after every step.
    pub objective_trace: Vec<f64>,
}

/// Spatial median of `series`.
pub fn spatial_median(series: &FunctionalSeries, config: &MedianConfig) -> Result<Curve> {
    spatial_median_fit(series, config).map(|fit| fit.median)
}

/// Spatial median together with the iteration trace.
pub fn spatial_median_fit(series: &FunctionalSeries, config: &MedianConfig) -> Result<MedianFit> {
    config.validate()?;
    let grid = Arc::clone(series.grid());
    let w = grid.weights();
    let m = grid.len();
    let n = series.len();

    if n == 1 {
        return Ok(MedianFit {
            median: series.curves()[0].clone(),
            iterations: 0,
            objective_trace: vec![0.0],
        });
    }

    let mut mu = series.mean_curve().into_values();
    let mut dist = vec![0.0; n];
    let mut diff = vec![0.0; m];
    let mut next = vec![0.0; m];
    let mut dir = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut trial_dist = vec![0.0; n];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(ANDERSON_DEPTH + 2);

    let objective = |mu: &[f64], dist: &mut [f64], diff: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for (c, d) in series.curves().iter().zip(dist.iter_mut()) {
            for ((o, x), u) in diff.iter_mut().zip(c.values()).zip(mu) {
                *o = x - u;
            }
            *d = weighted_dot(diff, diff, w).sqrt();
            total += *d;
        }
        total
    };

    let mut obj = objective(&mu, &mut dist, &mut diff);
    let mut trace = vec![obj];
    let mut last_step = f64::INFINITY;
    let mut last_change = f64::INFINITY;

    for iter in 1..=config.max_iterations {
        let scale = obj / n as f64;
        if scale == 0.0 {
            // every observation coincides with the iterate
            return Ok(finish(grid, mu, iter - 1, trace));
        }

        // Weiszfeld crawls toward a minimizer that is itself an observation,
        // so once an observation is close, test it for optimality directly.
        let (nearest, &near_dist) = dist
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("series is nonempty");
        if near_dist >= config.singularity_floor && near_dist < 0.05 * scale {
            let anchor = series.curves()[nearest].values();
            if observation_is_optimal(
                series,
                anchor,
                config.singularity_floor,
                &mut diff,
                &mut next,
            ) {
                mu.copy_from_slice(anchor);
                obj = objective(&mu, &mut dist, &mut diff);
                trace.push(obj);
                return Ok(finish(grid, mu, iter, trace));
            }
        }

        next.iter_mut().for_each(|v| *v = 0.0);
        let mut inv_sum = 0.0;
        let mut dropped = 0usize;
        for (c, &d) in series.curves().iter().zip(&dist) {
            if d < config.singularity_floor {
                dropped += 1;
                continue;
            }
            let inv = 1.0 / d;
            inv_sum += inv;
            for (a, x) in next.iter_mut().zip(c.values()) {
                *a += inv * x;
            }
        }
        if inv_sum == 0.0 {
            return Ok(finish(grid, mu, iter - 1, trace));
        }

        if dropped > 0 {
            // The iterate sits on `dropped` observations. It is the minimizer
            // when the remaining unit directions sum to norm at most `dropped`.
            for ((g, a), u) in diff.iter_mut().zip(&next).zip(&mu) {
                *g = a - inv_sum * u;
            }
            let pull = weighted_dot(&diff, &diff, w).sqrt();
            if pull <= dropped as f64 {
                return Ok(finish(grid, mu, iter - 1, trace));
            }
        }

        let inv_total = 1.0 / inv_sum;
        next.iter_mut().for_each(|v| *v *= inv_total);
        for ((o, a), u) in dir.iter_mut().zip(&next).zip(&mu) {
            *o = a - u;
        }
        let mut new_obj = objective(&next, &mut dist, &mut diff);

        // Anderson mixing of the last few Weiszfeld steps, kept only when it
        // beats the plain step, so the objective never increases.
        history.push_back((dir.clone(), next.clone()));
        if history.len() > ANDERSON_DEPTH + 1 {
            history.pop_front();
        }
        if history.len() >= 2 && anderson_candidate(&history, w, &mut trial) {
            let trial_obj = objective(&trial, &mut trial_dist, &mut diff);
            if trial_obj < new_obj {
                new_obj = trial_obj;
                std::mem::swap(&mut next, &mut trial);
                std::mem::swap(&mut dist, &mut trial_dist);
            } else {
                let last = history.pop_back().expect("history is nonempty");
                history.clear();
                history.push_back(last);
            }
        }
        for ((o, a), u) in diff.iter_mut().zip(&next).zip(&mu) {
            *o = a - u;
        }
        let step = weighted_dot(&diff, &diff, w).sqrt();
        std::mem::swap(&mut mu, &mut next);

        last_change = obj - new_obj;
        last_step = step / scale;
        obj = new_obj;
        trace.push(obj);

        if step <= config.tolerance * scale {
            return Ok(finish(grid, mu, iter, trace));
        }
    }

    Err(FsacfError::MedianNotConverged {
        iterations: config.max_iterations,
        last_step,
        objective_change: last_change,
        last_iterate: Box::new(Curve::new(grid, mu)?),
    })
}

/// Writes the Anderson extrapolation of the stored `(residual, image)` pairs
/// into `out`; returns `false` when the mixing system is degenerate.
fn anderson_candidate(
    history: &VecDeque<(Vec<f64>, Vec<f64>)>,
    w: &[f64],
    out: &mut [f64],
) -> bool {
    let k = history.len() - 1;
    let (g_last, t_last) = &history[k];
    let dg: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            history[j + 1]
                .0
                .iter()
                .zip(&history[j].0)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = Matrix::zeros(k, 1);
    for a in 0..k {
        for b in a..k {
            let v = weighted_dot(&dg[a], &dg[b], w);
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
        rhs[(a, 0)] = weighted_dot(&dg[a], g_last, w);
    }
    let ridge = 1e-10 * (0..k).map(|a| gram[(a, a)]).sum::<f64>() / k as f64;
    if !(ridge > 0.0) {
        return false;
    }
    for a in 0..k {
        gram[(a, a)] += ridge;
    }
    let gamma = match solve_spd(&gram, &rhs) {
        Ok(g) => g,
        Err(_) => return false,
    };
    out.copy_from_slice(t_last);
    for j in 0..k {
        let c = gamma[(j, 0)];
        for ((o, a), b) in out.iter_mut().zip(&history[j + 1].1).zip(&history[j].1) {
            *o -= c * (a - b);
        }
    }
    out.iter().all(|v| v.is_finite())
}

/// Whether `anchor` minimizes the objective: the unit directions from it to
/// the other observations must sum to norm at most its multiplicity.
fn observation_is_optimal(
    series: &FunctionalSeries,
    anchor: &[f64],
    floor: f64,
    diff: &mut [f64],
    pull: &mut [f64],
) -> bool {
    let w = series.grid().weights();
    pull.iter_mut().for_each(|v| *v = 0.0);
    let mut multiplicity = 0usize;
    for c in series.curves() {
        for ((d, x), a) in diff.iter_mut().zip(c.values()).zip(anchor) {
            *d = x - a;
        }
        let dist = weighted_dot(diff, diff, w).sqrt();
        if dist < floor {
            multiplicity += 1;
            continue;
        }
        for (p, d) in pull.iter_mut().zip(diff.iter()) {
            *p += d / dist;
        }
    }
    weighted_dot(pull, pull, w).sqrt() <= multiplicity as f64
}

fn finish(
    grid: Arc<crate::functional::Grid>,
    mu: Vec<f64>,
    iterations: usize,
    trace: Vec<f64>,
) -> MedianFit {
    MedianFit {
        median: Curve::new(grid, mu).expect("iterate stays finite"),
        iterations,
        objective_trace: trace,
    }
}
