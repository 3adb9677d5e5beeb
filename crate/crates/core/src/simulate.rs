//! Reproducible generators for white-noise and functional autoregressive
//! series.
//!
//! Randomness comes from ChaCha8 keyed by the master seed; each replication
//! reads its own ChaCha stream, so replication `r` produces the same curves no
//! matter which thread runs it or in what order. Normals are obtained by
//! inverting the normal CDF on open-interval uniforms, Cauchy variates by
//! `tan(π(U − 1/2))` and unit exponentials by `−ln U`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distributions::standard_normal_quantile;
use crate::error::{FsacfError, Result};
use crate::functional::{weighted_dot, FunctionalSeries, Grid};
use crate::linalg::Matrix;

pub const DEFAULT_BURN_IN: usize = 100;
pub const DEFAULT_BSPLINE_BASIS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Seed {
    pub master: u64,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    /// Independent stream for replication `replication`.
    pub fn stream(&self, replication: u64) -> Draws {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(replication);
        Draws { rng }
    }
}

/// Variate source for one replication.
pub struct Draws {
    rng: ChaCha8Rng,
}

impl Draws {
    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        standard_normal_quantile(self.uniform())
    }

    #[inline]
    pub fn cauchy(&mut self) -> f64 {
        (PI * (self.uniform() - 0.5)).tan()
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    BrownianMotion,
    BrownianBridge,
    /// Constant plus three Fourier frequencies with standard Cauchy coefficients.
    FourierCauchy,
    /// Unit-mean exponential coefficients on `basis` orthonormalized cubic B-splines.
    BSplineExp {
        basis: usize,
    },
    TwoDimGaussian {
        lambda1: f64,
        lambda2: f64,
    },
    Far1 {
        s: f64,
        innovation: Box<ProcessSpec>,
        burn_in: usize,
    },
    Far2 {
        s1: f64,
        s2: f64,
        innovation: Box<ProcessSpec>,
        burn_in: usize,
    },
}

impl ProcessSpec {
    /// FAR(1, S) with Brownian-bridge innovations and the default burn-in.
    pub fn far1(s: f64) -> Self {
        ProcessSpec::Far1 {
            s,
            innovation: Box::new(ProcessSpec::BrownianBridge),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn far2(s1: f64, s2: f64) -> Self {
        ProcessSpec::Far2 {
            s1,
            s2,
            innovation: Box::new(ProcessSpec::BrownianBridge),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn bspline_exp() -> Self {
        ProcessSpec::BSplineExp {
            basis: DEFAULT_BSPLINE_BASIS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FsacfError::InvalidArgument(m));
        match self {
            ProcessSpec::BSplineExp { basis } if *basis < 4 => bad(format!(
                "cubic B-splines need at least 4 basis functions, got {basis}"
            )),
            ProcessSpec::TwoDimGaussian { lambda1, lambda2 }
                if !(*lambda1 > 0.0 && *lambda2 > 0.0) =>
            {
                bad(format!(
                    "eigenvalues must be positive, got ({lambda1}, {lambda2})"
                ))
            }
            ProcessSpec::Far1 { s, innovation, .. } => {
                check_strength(*s)?;
                check_innovation(innovation)
            }
            ProcessSpec::Far2 {
                s1, s2, innovation, ..
            } => {
                check_strength(*s1)?;
                check_strength(*s2)?;
                check_innovation(innovation)
            }
            _ => Ok(()),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            ProcessSpec::BrownianMotion => "BM".into(),
            ProcessSpec::BrownianBridge => "BB".into(),
            ProcessSpec::FourierCauchy => "F".into(),
            ProcessSpec::BSplineExp { basis } => format!("BS({basis})"),
            ProcessSpec::TwoDimGaussian { lambda1, lambda2 } => format!("G2({lambda1},{lambda2})"),
            ProcessSpec::Far1 { s, .. } => format!("FAR(1,{s})"),
            ProcessSpec::Far2 { s1, s2, .. } => format!("FAR(2,{s1},{s2})"),
        }
    }
}

fn check_strength(s: f64) -> Result<()> {
    if s.is_finite() && s.abs() <= 1.0 {
        Ok(())
    } else {
        Err(FsacfError::InvalidArgument(format!(
            "kernel strength must be in [-1, 1], got {s}"
        )))
    }
}

fn check_innovation(spec: &ProcessSpec) -> Result<()> {
    match spec {
        ProcessSpec::Far1 { .. } | ProcessSpec::Far2 { .. } => Err(FsacfError::InvalidArgument(
            "innovations must be a white-noise process".into(),
        )),
        other => other.validate(),
    }
}

/// Gaussian kernel `c·exp(−(t² + s²)/2)` on `grid × grid`, with `c` chosen so
/// the Riemann Hilbert–Schmidt norm equals `|strength|` and `sign(c) = sign(strength)`.
pub fn gaussian_kernel(strength: f64, grid: &Grid) -> Result<Matrix> {
    check_strength(strength)?;
    let g: Vec<f64> = grid.points().iter().map(|t| (-0.5 * t * t).exp()).collect();
    // ‖φ‖ = |c| Σ_j e^{−t_j²} w_j for a rank-one product kernel
    let mass = weighted_dot(&g, &g, grid.weights());
    let c = strength / mass;
    let m = grid.len();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = c * g[i] * g[j];
        }
    }
    Ok(k)
}

/// Riemann Hilbert–Schmidt norm of a kernel sampled on `grid × grid`.
pub fn kernel_norm(kernel: &Matrix, grid: &Grid) -> f64 {
    let w = grid.weights();
    let mut s = 0.0;
    for i in 0..kernel.rows() {
        for j in 0..kernel.cols() {
            s += kernel[(i, j)] * kernel[(i, j)] * w[i] * w[j];
        }
    }
    s.sqrt()
}

/// Applies the integral operator `∫ k(t, s) x(s) ds` by Riemann sum.
pub fn apply_kernel(kernel: &Matrix, x: &[f64], w: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = weighted_dot(kernel.row(i), x, w);
    }
}

/// Cubic B-spline basis with `k` functions and equally spaced interior knots,
/// evaluated on the grid points. Row `b` holds basis function `b`.
pub fn cubic_bspline_basis(k: usize, grid: &Grid) -> Result<Matrix> {
    if k < 4 {
        return Err(FsacfError::InvalidArgument(format!(
            "need at least 4 basis functions, got {k}"
        )));
    }
    let interior = k - 4;
    let mut knots = vec![0.0; 4];
    knots.extend((1..=interior).map(|i| i as f64 / (interior + 1) as f64));
    knots.extend([1.0; 4]);
    let m = grid.len();
    let mut out = Matrix::zeros(k, m);
    for (j, &t) in grid.points().iter().enumerate() {
        // locate span with knots[span] <= t < knots[span + 1], clamped at the right end
        let mut span = 3;
        while span < k - 1 && t >= knots[span + 1] {
            span += 1;
        }
        // de Boor's triangular evaluation of the 4 nonzero functions
        let mut n = [0.0f64; 4];
        n[0] = 1.0;
        let mut left = [0.0f64; 4];
        let mut right = [0.0f64; 4];
        for d in 1..=3 {
            left[d] = t - knots[span + 1 - d];
            right[d] = knots[span + d] - t;
            let mut saved = 0.0;
            for r in 0..d {
                let denom = right[r + 1] + left[d - r];
                let tmp = if denom == 0.0 { 0.0 } else { n[r] / denom };
                n[r] = saved + right[r + 1] * tmp;
                saved = left[d - r] * tmp;
            }
            n[d] = saved;
        }
        for (r, v) in n.iter().enumerate() {
            out[(span - 3 + r, j)] = *v;
        }
    }
    Ok(out)
}

/// Modified Gram–Schmidt on the rows of `basis` under the Riemann inner product.
pub fn orthonormalize(basis: &Matrix, grid: &Grid) -> Result<Matrix> {
    let w = grid.weights();
    let (k, m) = (basis.rows(), basis.cols());
    let mut rows: Vec<Vec<f64>> = (0..k).map(|r| basis.row(r).to_vec()).collect();
    for a in 0..k {
        for b in 0..a {
            let (done, rest) = rows.split_at_mut(a);
            let proj = weighted_dot(&rest[0], &done[b], w);
            for (x, y) in rest[0].iter_mut().zip(&done[b]) {
                *x -= proj * y;
            }
        }
        let nrm = weighted_dot(&rows[a], &rows[a], w).sqrt();
        if nrm < 1e-10 {
            return Err(FsacfError::InvalidArgument(format!(
                "basis function {a} is linearly dependent on the grid; use fewer basis functions"
            )));
        }
        rows[a].iter_mut().for_each(|x| *x /= nrm);
    }
    Matrix::from_row_major(k, m, rows.concat())
}

/// Precomputed per-grid state for white-noise draws.
struct NoiseSampler {
    kind: ProcessSpec,
    grid: Arc<Grid>,
    sqrt_steps: Vec<f64>,
    tail_step: f64,
    fourier: Vec<Vec<f64>>,
    basis: Option<Matrix>,
}

impl NoiseSampler {
    fn new(kind: &ProcessSpec, grid: &Arc<Grid>) -> Result<Self> {
        let pts = grid.points();
        let sqrt_steps = grid.weights().iter().map(|w| w.sqrt()).collect();
        let tail_step = (1.0 - pts[pts.len() - 1]).max(0.0).sqrt();
        let mut fourier = Vec::new();
        let mut basis = None;
        match kind {
            ProcessSpec::FourierCauchy => {
                for f in 1..=3 {
                    let w = 2.0 * PI * f as f64;
                    fourier.push(pts.iter().map(|t| (w * t).cos()).collect());
                    fourier.push(pts.iter().map(|t| (w * t).sin()).collect());
                }
            }
            ProcessSpec::TwoDimGaussian { .. } => {
                fourier.push(pts.iter().map(|t| (2.0 * PI * t).sin()).collect());
                fourier.push(pts.iter().map(|t| (2.0 * PI * t).cos()).collect());
            }
            ProcessSpec::BSplineExp { basis: k } => {
                basis = Some(orthonormalize(&cubic_bspline_basis(*k, grid)?, grid)?);
            }
            _ => {}
        }
        Ok(Self {
            kind: kind.clone(),
            grid: Arc::clone(grid),
            sqrt_steps,
            tail_step,
            fourier,
            basis,
        })
    }

    fn draw(&self, d: &mut Draws, out: &mut [f64]) {
        match &self.kind {
            ProcessSpec::BrownianMotion => self.brownian(d, out),
            ProcessSpec::BrownianBridge => {
                self.brownian(d, out);
                let last = out[out.len() - 1];
                let w1 = if self.tail_step > 0.0 {
                    last + self.tail_step * d.normal()
                } else {
                    last
                };
                for (o, t) in out.iter_mut().zip(self.grid.points()) {
                    *o -= t * w1;
                }
            }
            ProcessSpec::FourierCauchy => {
                let z0 = d.cauchy();
                out.iter_mut().for_each(|o| *o = z0);
                for f in &self.fourier {
                    let z = d.cauchy();
                    for (o, v) in out.iter_mut().zip(f) {
                        *o += z * v;
                    }
                }
            }
            ProcessSpec::BSplineExp { .. } => {
                let basis = self
                    .basis
                    .as_ref()
                    .expect("basis built for B-spline process");
                out.iter_mut().for_each(|o| *o = 0.0);
                for b in 0..basis.rows() {
                    let e = d.exponential();
                    for (o, v) in out.iter_mut().zip(basis.row(b)) {
                        *o += e * v;
                    }
                }
            }
            ProcessSpec::TwoDimGaussian { lambda1, lambda2 } => {
                let a = (2.0 * lambda1).sqrt() * d.normal();
                let b = (2.0 * lambda2).sqrt() * d.normal();
                for ((o, s), c) in out.iter_mut().zip(&self.fourier[0]).zip(&self.fourier[1]) {
                    *o = a * s + b * c;
                }
            }
            ProcessSpec::Far1 { .. } | ProcessSpec::Far2 { .. } => {
                unreachable!("autoregressive specs are not white noise")
            }
        }
    }

    fn brownian(&self, d: &mut Draws, out: &mut [f64]) {
        let mut acc = 0.0;
        for (o, s) in out.iter_mut().zip(&self.sqrt_steps) {
            acc += s * d.normal();
            *o = acc;
        }
    }
}

/// Generates `n` curves of `spec` on `grid` for replication 0 of `seed`.
pub fn generate(
    spec: &ProcessSpec,
    n: usize,
    grid: &Arc<Grid>,
    seed: Seed,
) -> Result<FunctionalSeries> {
    generate_replication(spec, n, grid, seed, 0)
}

/// Generates `n` curves of `spec` from the stream of `replication`.
pub fn generate_replication(
    spec: &ProcessSpec,
    n: usize,
    grid: &Arc<Grid>,
    seed: Seed,
    replication: u64,
) -> Result<FunctionalSeries> {
    spec.validate()?;
    if n == 0 {
        return Err(FsacfError::InvalidArgument("n must be positive".into()));
    }
    let m = grid.len();
    let mut draws = seed.stream(replication);
    let rows: Vec<Vec<f64>> = match spec {
        ProcessSpec::Far1 {
            s,
            innovation,
            burn_in,
        } => {
            let kernels = [gaussian_kernel(*s, grid)?];
            autoregress(&kernels, innovation, n, *burn_in, grid, &mut draws)?
        }
        ProcessSpec::Far2 {
            s1,
            s2,
            innovation,
            burn_in,
        } => {
            let kernels = [gaussian_kernel(*s1, grid)?, gaussian_kernel(*s2, grid)?];
            autoregress(&kernels, innovation, n, *burn_in, grid, &mut draws)?
        }
        noise => {
            let sampler = NoiseSampler::new(noise, grid)?;
            (0..n)
                .map(|_| {
                    let mut v = vec![0.0; m];
                    sampler.draw(&mut draws, &mut v);
                    v
                })
                .collect()
        }
    };
    FunctionalSeries::from_rows(Arc::clone(grid), rows)
}

/// `X_i = Σ_p ∫ φ_p(t, s) X_{i−p}(s) ds + ε_i`, started from innovation
/// draws, with the first `burn_in` curves discarded.
fn autoregress(
    kernels: &[Matrix],
    innovation: &ProcessSpec,
    n: usize,
    burn_in: usize,
    grid: &Arc<Grid>,
    draws: &mut Draws,
) -> Result<Vec<Vec<f64>>> {
    let sampler = NoiseSampler::new(innovation, grid)?;
    let m = grid.len();
    let w = grid.weights();
    let order = kernels.len();
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(order + burn_in + n);
    for _ in 0..order {
        let mut v = vec![0.0; m];
        sampler.draw(draws, &mut v);
        history.push(v);
    }
    let mut tmp = vec![0.0; m];
    for _ in 0..burn_in + n {
        let mut x = vec![0.0; m];
        sampler.draw(draws, &mut x);
        for (p, k) in kernels.iter().enumerate() {
            let lagged = &history[history.len() - 1 - p];
            apply_kernel(k, lagged, w, &mut tmp);
            for (a, b) in x.iter_mut().zip(&tmp) {
                *a += b;
            }
        }
        history.push(x);
    }
    Ok(history.split_off(order + burn_in))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{inner_product, spatial_sign, Curve};
    use crate::median::{spatial_median, MedianConfig};
    use crate::sacf::{cp_norm, sacf};

    fn default_grid() -> Arc<Grid> {
        Arc::new(Grid::uniform(101).unwrap())
    }

    #[test]
    fn uniforms_are_open_and_reproducible() {
        let seed = Seed::new(99);
        let mut a = seed.stream(3);
        let mut b = seed.stream(3);
        let mut c = seed.stream(4);
        let mut differs = false;
        for _ in 0..10_000 {
            let u = a.uniform();
            assert!(u > 0.0 && u < 1.0);
            assert_eq!(u, b.uniform());
            differs |= u != c.uniform();
        }
        assert!(differs);
    }

    #[test]
    fn bridge_is_pinned_at_both_ends() {
        let g = default_grid();
        let s = generate(&ProcessSpec::BrownianBridge, 50, &g, Seed::new(7)).unwrap();
        for c in s.iter() {
            assert_eq!(c.values()[0], 0.0);
            assert_eq!(c.values()[100], 0.0);
        }
    }

    #[test]
    fn brownian_motion_covariance() {
        let g = default_grid();
        let s = generate(&ProcessSpec::BrownianMotion, 5000, &g, Seed::new(11)).unwrap();
        let n = s.len() as f64;
        let (i, j) = (50, 25);
        let mi = s.iter().map(|c| c.values()[i]).sum::<f64>() / n;
        let mj = s.iter().map(|c| c.values()[j]).sum::<f64>() / n;
        let cov = s
            .iter()
            .map(|c| (c.values()[i] - mi) * (c.values()[j] - mj))
            .sum::<f64>()
            / n;
        assert!((cov - 0.25).abs() < 0.03, "{cov}");
    }

    #[test]
    fn generation_is_deterministic() {
        let g = default_grid();
        for spec in [
            ProcessSpec::BrownianMotion,
            ProcessSpec::FourierCauchy,
            ProcessSpec::bspline_exp(),
            ProcessSpec::far2(0.3, -0.2),
        ] {
            let a = generate_replication(&spec, 20, &g, Seed::new(5), 9).unwrap();
            let b = generate_replication(&spec, 20, &g, Seed::new(5), 9).unwrap();
            assert_eq!(a, b);
            let c = generate_replication(&spec, 20, &g, Seed::new(5), 10).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn kernel_grid_norm_is_exact() {
        let g = default_grid();
        for s in [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9] {
            let k = gaussian_kernel(s, &g).unwrap();
            assert!((kernel_norm(&k, &g) - s.abs()).abs() < 1e-10);
            assert_eq!(k[(3, 7)].signum(), s.signum());
        }
        let zero = gaussian_kernel(0.0, &g).unwrap();
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));
        let pos = gaussian_kernel(0.5, &g).unwrap();
        let neg = gaussian_kernel(-0.5, &g).unwrap();
        assert!(pos
            .as_slice()
            .iter()
            .zip(neg.as_slice())
            .all(|(a, b)| *a == -*b));
        assert!(gaussian_kernel(1.2, &g).is_err());
    }

    #[test]
    fn kernel_constant_on_fine_grid() {
        // oracle: composite Simpson for ∫₀¹ e^{−t²} dt
        let steps = 10_000;
        let h = 1.0 / steps as f64;
        let f = |t: f64| (-t * t).exp();
        let mut simpson = f(0.0) + f(1.0);
        for i in 1..steps {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        simpson *= h / 3.0;
        assert!((simpson - 0.7468241).abs() < 1e-7);

        let fine = Grid::uniform(100_001).unwrap();
        let g: Vec<f64> = fine.points().iter().map(|t| (-t * t).exp()).collect();
        let c = 0.5 / fine.integrate(&g);
        assert!((c - 0.5 / simpson).abs() < 1e-4);
        assert!((c - 0.66950).abs() < 1e-4);
        // the kernel at (0, 0) is c itself
        let small = Grid::uniform(2001).unwrap();
        let k = gaussian_kernel(0.5, &small).unwrap();
        assert!((k[(0, 0)] - 0.66950).abs() < 2e-4);
    }

    #[test]
    fn orthonormal_bspline_basis() {
        let g = default_grid();
        let raw = cubic_bspline_basis(8, &g).unwrap();
        // partition of unity before orthonormalization
        for j in 0..g.len() {
            let s: f64 = (0..8).map(|b| raw[(b, j)]).sum();
            assert!((s - 1.0).abs() < 1e-12, "point {j}: {s}");
        }
        let ortho = orthonormalize(&raw, &g).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let ip = weighted_dot(ortho.row(a), ortho.row(b), g.weights());
                assert!((ip - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        assert!(cubic_bspline_basis(3, &g).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        let g = default_grid();
        let bad = [
            ProcessSpec::far1(1.5),
            ProcessSpec::far2(0.2, -1.1),
            ProcessSpec::TwoDimGaussian {
                lambda1: 0.0,
                lambda2: 1.0,
            },
            ProcessSpec::BSplineExp { basis: 2 },
            ProcessSpec::Far1 {
                s: 0.1,
                innovation: Box::new(ProcessSpec::far1(0.1)),
                burn_in: 10,
            },
        ];
        for spec in bad {
            assert!(generate(&spec, 5, &g, Seed::new(1)).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn far1_with_zero_kernel_is_white() {
        let g = default_grid();
        let zero = Curve::zeros(Arc::clone(&g));
        let cfg = MedianConfig::default();
        let mut inside = 0;
        let reps = 40;
        for r in 0..reps {
            let s =
                generate_replication(&ProcessSpec::far1(0.0), 300, &g, Seed::new(21), r).unwrap();
            let est = sacf(&s, 1, Some(&zero), &cfg).unwrap();
            if est.rho[0].abs() <= est.bound(0.05).unwrap() {
                inside += 1;
            }
        }
        assert!(inside >= 34, "{inside}/{reps}");
    }

    #[test]
    fn streams_are_cross_uncorrelated() {
        let g = default_grid();
        let n = 1000;
        let a = generate_replication(&ProcessSpec::BrownianBridge, n, &g, Seed::new(3), 0).unwrap();
        let b = generate_replication(&ProcessSpec::BrownianBridge, n, &g, Seed::new(3), 1).unwrap();
        let zero = Curve::zeros(Arc::clone(&g));
        let cross: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| {
                inner_product(
                    &spatial_sign(x, &zero).unwrap(),
                    &spatial_sign(y, &zero).unwrap(),
                )
                .unwrap()
            })
            .sum::<f64>()
            / n as f64;
        let scale = cp_norm(&a, &zero).unwrap();
        assert!(cross.abs() <= 3.29 * scale / (n as f64).sqrt(), "{cross}");
    }

    #[test]
    fn fourier_cauchy_median_is_stable_while_mean_wanders() {
        let g = default_grid();
        let cfg = MedianConfig::default();
        let mut max_mean = 0.0f64;
        let mut max_median = 0.0f64;
        for r in 0..20 {
            let s = generate_replication(&ProcessSpec::FourierCauchy, 1000, &g, Seed::new(8), r)
                .unwrap();
            let sup = |c: &Curve| c.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            max_mean = max_mean.max(sup(&s.mean_curve()));
            max_median = max_median.max(sup(&spatial_median(&s, &cfg).unwrap()));
        }
        assert!(max_median < 1.0, "{max_median}");
        assert!(max_mean > 3.0, "{max_mean}");
    }
}
