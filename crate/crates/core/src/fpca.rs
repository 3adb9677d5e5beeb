//! Functional principal component analysis under Riemann weighting.
//!
//! The sample covariance kernel `K(t_j, t_k)` (divisor `n`) acts on curves
//! through the quadrature weights, so the eigenproblem solved is the
//! symmetric one for `W^{1/2} K W^{1/2}`. Eigenvectors `u` map back to
//! eigenfunctions `v = W^{−1/2} u`, which are orthonormal under the Riemann
//! inner product. Grid points with zero weight (the first point of a grid
//! starting at 0) are filled in through the kernel map `v = K v / λ`.

use std::sync::Arc;

use crate::error::{FsacfError, Result};
use crate::functional::{Curve, FunctionalSeries, Grid};
use crate::linalg::{symmetric_eigen, Matrix};

#[derive(Debug, Clone)]
pub struct FpcaResult {
    pub mean: Curve,
    /// Descending, nonnegative; one per positively weighted grid point.
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Curve>,
    /// `scores[(i, j)] = ⟨X_i − mean, v_j⟩`.
    pub scores: Matrix,
    /// Cumulative proportion of variance; `NaN` when the spectrum is all zero.
    pub cpv: Vec<f64>,
}

impl FpcaResult {
    pub fn grid(&self) -> &Arc<Grid> {
        self.mean.grid()
    }

    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Scores of arbitrary curves on the first `j` eigenfunctions.
    pub fn project(&self, series: &FunctionalSeries, j: usize) -> Result<Matrix> {
        self.check_components(j)?;
        let w = self.grid().weights();
        let mut out = Matrix::zeros(series.len(), j);
        let mut centered = vec![0.0; w.len()];
        for (i, c) in series.curves().iter().enumerate() {
            if c.len() != w.len() {
                return Err(FsacfError::GridMismatch(
                    "series and FPCA grids differ".into(),
                ));
            }
            for ((d, x), m) in centered.iter_mut().zip(c.values()).zip(self.mean.values()) {
                *d = x - m;
            }
            for k in 0..j {
                out[(i, k)] =
                    crate::functional::weighted_dot(&centered, self.eigenfunctions[k].values(), w);
            }
        }
        Ok(out)
    }

    fn check_components(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.components() {
            Err(FsacfError::InvalidArgument(format!(
                "number of components must be in 1..={}, got {j}",
                self.components()
            )))
        } else {
            Ok(())
        }
    }
}

pub fn fpca(series: &FunctionalSeries) -> Result<FpcaResult> {
    let n = series.len();
    if n < 2 {
        return Err(FsacfError::TooShort { needed: 2, got: n });
    }
    let grid = Arc::clone(series.grid());
    let w = grid.weights();
    let m = grid.len();
    let mean = series.mean_curve();
    let active: Vec<usize> = (0..m).filter(|&j| w[j] > 0.0).collect();
    let ma = active.len();
    let sw: Vec<f64> = active.iter().map(|&j| w[j].sqrt()).collect();

    // Z = centered curves on weighted points times √w, so B = ZᵀZ / n.
    let mut z = Matrix::zeros(n, ma);
    for (i, c) in series.curves().iter().enumerate() {
        for (a, &j) in active.iter().enumerate() {
            z[(i, a)] = (c.values()[j] - mean.values()[j]) * sw[a];
        }
    }
    let mut b = z.gram();
    let inv_n = 1.0 / n as f64;
    for a in 0..ma {
        for c in 0..ma {
            b[(a, c)] *= inv_n;
        }
    }
    let eig = symmetric_eigen(&b)?;
    let mut u = eig.vectors;
    // Eigenvalues at rounding level of the raw curve energy are reported as zero.
    let energy: f64 = series
        .iter()
        .map(|c| {
            active
                .iter()
                .map(|&j| c.values()[j] * c.values()[j] * w[j])
                .sum::<f64>()
        })
        .sum::<f64>()
        * inv_n;
    let noise = 1e-14 * energy;
    let eigenvalues: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l > noise { l } else { 0.0 })
        .collect();

    // Largest-magnitude entry of each eigenfunction is made positive.
    for k in 0..ma {
        let mut best = (0.0f64, 1.0f64);
        for a in 0..ma {
            let v = u[(a, k)] / sw[a];
            if v.abs() > best.0 {
                best = (v.abs(), v.signum());
            }
        }
        if best.1 < 0.0 {
            for a in 0..ma {
                u[(a, k)] = -u[(a, k)];
            }
        }
    }

    let scores = z.matmul(&u)?;

    let leading = eigenvalues.first().copied().unwrap_or(0.0);
    let zero_weight: Vec<usize> = (0..m).filter(|&j| w[j] == 0.0).collect();
    let mut eigenfunctions = Vec::with_capacity(ma);
    for k in 0..ma {
        let mut v = vec![0.0; m];
        for (a, &j) in active.iter().enumerate() {
            v[j] = u[(a, k)] / sw[a];
        }
        let lambda = eigenvalues[k];
        if lambda > 1e-12 * leading && lambda > 0.0 {
            for &j in &zero_weight {
                let mut acc = 0.0;
                for (i, c) in series.curves().iter().enumerate() {
                    acc += (c.values()[j] - mean.values()[j]) * scores[(i, k)];
                }
                v[j] = acc * inv_n / lambda;
            }
        }
        eigenfunctions.push(Curve::new(Arc::clone(&grid), v)?);
    }

    let total: f64 = eigenvalues.iter().sum();
    let cpv = eigenvalues
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(if total > 0.0 { *acc / total } else { f64::NAN })
        })
        .collect();

    Ok(FpcaResult {
        mean,
        eigenvalues,
        eigenfunctions,
        scores,
        cpv,
    })
}

/// Smallest `J` whose cumulative proportion of variance exceeds `threshold`.
pub fn select_cpv(eigenvalues: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(FsacfError::InvalidArgument(format!(
            "CPV threshold must be in (0, 1), got {threshold}"
        )));
    }
    let total: f64 = eigenvalues.iter().filter(|&&l| l > 0.0).sum();
    if !(total > 0.0) {
        return Err(FsacfError::Degenerate("all eigenvalues are zero".into()));
    }
    let mut acc = 0.0;
    for (k, &l) in eigenvalues.iter().enumerate() {
        acc += l.max(0.0);
        if acc / total > threshold {
            return Ok(k + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Rank-`j` reconstructions `mean + Σ_{k≤j} ξ_{i,k} v_k`.
pub fn reconstruct(result: &FpcaResult, j: usize) -> Result<FunctionalSeries> {
    result.check_components(j)?;
    let grid = Arc::clone(result.grid());
    let curves = (0..result.scores.rows())
        .map(|i| {
            let mut v = result.mean.values().to_vec();
            for k in 0..j {
                let s = result.scores[(i, k)];
                for (a, e) in v.iter_mut().zip(result.eigenfunctions[k].values()) {
                    *a += s * e;
                }
            }
            Curve::new(Arc::clone(&grid), v)
        })
        .collect::<Result<Vec<_>>>()?;
    FunctionalSeries::new(grid, curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{inner_product, norm};
    use std::f64::consts::PI;

    fn grid(m: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(m).unwrap())
    }

    /// Pseudo-random but deterministic rows, no RNG dependency.
    fn scrambled_rows(n: usize, m: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let x = ((i * 7919 + j * 104_729 + 13) as f64).sin() * 43758.5453;
                        x - x.floor() - 0.5 + 0.3 * ((i as f64) * 0.37 + j as f64 * 0.11).cos()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_curves_have_zero_spectrum() {
        let g = grid(21);
        let c = Curve::from_fn(Arc::clone(&g), |t| t.sin()).unwrap();
        let s = FunctionalSeries::new(g, vec![c; 5]).unwrap();
        let r = fpca(&s).unwrap();
        assert!(r.eigenvalues.iter().all(|&l| l == 0.0));
        assert!(select_cpv(&r.eigenvalues, 0.9).is_err());
    }

    #[test]
    fn rank_one_sine_series() {
        let g = grid(101);
        let v = Curve::from_fn(Arc::clone(&g), |t| (2.0 * PI * t).sin()).unwrap();
        let a = [1.3, -0.4, 2.2, 0.1, -1.7, 0.9];
        let s = FunctionalSeries::new(Arc::clone(&g), a.iter().map(|&x| v.scaled(x)).collect())
            .unwrap();
        let r = fpca(&s).unwrap();
        let mean_a = a.iter().sum::<f64>() / a.len() as f64;
        let s2 = a.iter().map(|x| (x - mean_a).powi(2)).sum::<f64>() / a.len() as f64;
        let expected = s2 * inner_product(&v, &v).unwrap();
        assert!((r.eigenvalues[0] - expected).abs() < 1e-10);
        assert!(r.eigenvalues[1..].iter().all(|&l| l < 1e-12));
        let unit = v.scaled(1.0 / norm(&v));
        let cos = inner_product(&r.eigenfunctions[0], &unit).unwrap();
        assert!((cos.abs() - 1.0).abs() < 1e-10);
        // J = 1 reproduces the rank-one data exactly
        let rec = reconstruct(&r, 1).unwrap();
        for (x, y) in s.iter().zip(rec.iter()) {
            assert!(x.max_abs_diff(y) < 1e-10);
        }
    }

    #[test]
    fn orthonormal_sorted_and_trace_preserving() {
        let g = grid(31);
        let s = FunctionalSeries::from_rows(Arc::clone(&g), scrambled_rows(40, 31)).unwrap();
        let r = fpca(&s).unwrap();
        for w in r.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for j in 0..r.components() {
            for k in 0..r.components() {
                let ip = inner_product(&r.eigenfunctions[j], &r.eigenfunctions[k]).unwrap();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "{j},{k}: {ip}");
            }
        }
        let mean = s.mean_curve();
        let trace: f64 = s
            .iter()
            .map(|c| norm(&c.sub(&mean).unwrap()).powi(2))
            .sum::<f64>()
            / s.len() as f64;
        assert!((r.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-8);
    }

    #[test]
    fn scores_are_uncorrelated_with_eigenvalue_variances() {
        let g = grid(25);
        let s = FunctionalSeries::from_rows(Arc::clone(&g), scrambled_rows(60, 25)).unwrap();
        let r = fpca(&s).unwrap();
        let n = s.len() as f64;
        for j in 0..5 {
            for k in 0..5 {
                let c: f64 = (0..s.len())
                    .map(|i| r.scores[(i, j)] * r.scores[(i, k)])
                    .sum::<f64>()
                    / n;
                let expect = if j == k { r.eigenvalues[j] } else { 0.0 };
                assert!((c - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn eigen_residual_of_weighted_operator() {
        let g = grid(21);
        let s = FunctionalSeries::from_rows(Arc::clone(&g), scrambled_rows(30, 21)).unwrap();
        let r = fpca(&s).unwrap();
        let w = g.weights();
        let mean = s.mean_curve();
        // rebuild W^{1/2} K W^{1/2} directly and check B u = λ u with u = W^{1/2} v
        let act: Vec<usize> = (0..21).filter(|&j| w[j] > 0.0).collect();
        let n = s.len() as f64;
        for (k, lambda) in r.eigenvalues.iter().enumerate() {
            let u: Vec<f64> = act
                .iter()
                .map(|&j| r.eigenfunctions[k].values()[j] * w[j].sqrt())
                .collect();
            let mut res = 0.0;
            for (a, &ja) in act.iter().enumerate() {
                let mut bu = 0.0;
                for (b, &jb) in act.iter().enumerate() {
                    let kab: f64 = s
                        .iter()
                        .map(|c| {
                            (c.values()[ja] - mean.values()[ja])
                                * (c.values()[jb] - mean.values()[jb])
                        })
                        .sum::<f64>()
                        / n;
                    bu += w[ja].sqrt() * kab * w[jb].sqrt() * u[b];
                }
                res += (bu - lambda * u[a]).powi(2);
            }
            assert!(res.sqrt() <= 1e-9 * r.eigenvalues[0], "component {k}");
        }
    }

    #[test]
    fn parseval_reconstruction_error() {
        let g = Arc::new(Grid::new((1..=20).map(|j| j as f64 / 20.0).collect()).unwrap());
        let s = FunctionalSeries::from_rows(Arc::clone(&g), scrambled_rows(35, 20)).unwrap();
        let r = fpca(&s).unwrap();
        for j in [1, 3, 7, 12] {
            let rec = reconstruct(&r, j).unwrap();
            let mse: f64 = s
                .iter()
                .zip(rec.iter())
                .map(|(x, y)| norm(&x.sub(y).unwrap()).powi(2))
                .sum::<f64>()
                / s.len() as f64;
            let tail: f64 = r.eigenvalues[j..].iter().sum();
            assert!((mse - tail).abs() < 1e-6, "J={j}: {mse} vs {tail}");
        }
        let full = reconstruct(&r, r.components()).unwrap();
        for (x, y) in s.iter().zip(full.iter()) {
            assert!(x.max_abs_diff(y) < 1e-6);
        }
        assert!(reconstruct(&r, 0).is_err());
        assert!(reconstruct(&r, r.components() + 1).is_err());
    }

    #[test]
    fn largest_entry_is_positive() {
        let g = grid(31);
        let s = FunctionalSeries::from_rows(Arc::clone(&g), scrambled_rows(40, 31)).unwrap();
        let r = fpca(&s).unwrap();
        for f in &r.eigenfunctions[..5] {
            let (mut best, mut val) = (0.0f64, 0.0);
            for &v in &f.values()[1..] {
                if v.abs() > best {
                    best = v.abs();
                    val = v;
                }
            }
            assert!(val > 0.0);
        }
    }

    #[test]
    fn cpv_selection_rules() {
        assert_eq!(select_cpv(&[9.0, 1.0], 0.9).unwrap(), 2);
        assert_eq!(select_cpv(&[9.5, 0.5], 0.9).unwrap(), 1);
        assert_eq!(select_cpv(&[3.0, 0.0, 0.0], 0.99).unwrap(), 1);
        assert_eq!(select_cpv(&[3.0], 0.5).unwrap(), 1);
        assert!(select_cpv(&[0.0, 0.0], 0.9).is_err());
        assert!(select_cpv(&[1.0], 1.0).is_err());
    }

    #[test]
    fn needs_two_curves() {
        let g = grid(5);
        let s = FunctionalSeries::new(Arc::clone(&g), vec![Curve::zeros(g)]).unwrap();
        assert!(matches!(fpca(&s), Err(FsacfError::TooShort { .. })));
    }
}
