//! Distribution functions behind the confidence bands and the portmanteau
//! p-values.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::{erf, gamma};

use crate::error::{FsacfError, Result};

/// `P(χ²(k) > x)`, the regularized upper incomplete gamma `Q(k/2, x/2)`.
pub fn chi2_sf(x: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(FsacfError::InvalidArgument(
            "chi-square degrees of freedom must be >= 1".into(),
        ));
    }
    if x.is_nan() || x < 0.0 {
        return Err(FsacfError::InvalidArgument(format!(
            "chi-square argument must be >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma::gamma_ur(k as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Inverse standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(FsacfError::InvalidArgument(format!(
            "probability must be in (0, 1), got {p}"
        )));
    }
    Ok(standard_normal_quantile(p))
}

/// Unchecked inverse normal CDF for `p` strictly inside `(0, 1)`.
#[inline]
pub(crate) fn standard_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(FsacfError::InvalidArgument(format!(
            "probability must be in (0, 1), got {p}"
        )));
    }
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| FsacfError::InvalidArgument(format!("t distribution: {e}")))?;
    Ok(t.inverse_cdf(p))
}

/// One-sample Kolmogorov–Smirnov test against the standard normal.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test_standard_normal(sample: &[f64]) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(FsacfError::InvalidArgument("empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    // Stephens' finite-sample correction to the Kolmogorov limit law
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_gamma_half_integer(k: usize) -> f64 {
        // Γ(k/2) by recursion from Γ(1) = 1 and Γ(1/2) = √π
        let (mut a, mut g) = if k.is_multiple_of(2) {
            (1.0, 0.0)
        } else {
            (0.5, 0.5 * std::f64::consts::PI.ln())
        };
        while a < k as f64 / 2.0 - 1e-12 {
            g += a.ln();
            a += 1.0;
        }
        g
    }

    /// Composite Simpson integration of the χ²(k) density over [x, upper].
    fn chi2_sf_quadrature(x: f64, k: usize) -> f64 {
        let half = k as f64 / 2.0;
        let log_norm = -half * 2f64.ln() - ln_gamma_half_integer(k);
        let pdf = |u: f64| {
            if u <= 0.0 {
                if k == 2 {
                    0.5
                } else {
                    0.0
                }
            } else {
                (log_norm + (half - 1.0) * u.ln() - u / 2.0).exp()
            }
        };
        let upper = x + 400.0;
        let steps = 400_000;
        let h = (upper - x) / steps as f64;
        let mut s = pdf(x) + pdf(upper);
        for i in 1..steps {
            let u = x + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(u);
        }
        s * h / 3.0
    }

    /// Φ by Simpson quadrature of the density, inverted by bisection.
    fn normal_quantile_oracle(p: f64) -> f64 {
        let cdf = |x: f64| {
            let steps = 20_000;
            let h = x / steps as f64;
            let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mut s = pdf(0.0) + pdf(x);
            for i in 1..steps {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(i as f64 * h);
            }
            0.5 + s * h / 3.0
        };
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn chi2_sf_trivial_and_closed_form() {
        assert_eq!(chi2_sf(0.0, 3).unwrap(), 1.0);
        // two degrees of freedom: exp(-x/2)
        assert!((chi2_sf(5.991465, 2).unwrap() - 0.05).abs() < 1e-6);
        for x in [0.1, 1.0, 4.0, 17.5] {
            assert!((chi2_sf(x, 2).unwrap() - (-x / 2.0f64).exp()).abs() < 1e-12);
        }
        assert!(chi2_sf(-1.0, 2).is_err());
        assert!(chi2_sf(1.0, 0).is_err());
    }

    #[test]
    fn chi2_sf_matches_quadrature_oracle() {
        let oracle = chi2_sf_quadrature(18.307038, 10);
        assert!((oracle - 0.05).abs() < 1e-5, "oracle {oracle}");
        assert!((chi2_sf(18.307038, 10).unwrap() - 0.05).abs() < 1e-5);
        for &(x, k) in &[(0.5, 1usize), (3.0, 3), (12.0, 7), (30.0, 20), (2.0, 30)] {
            let o = chi2_sf_quadrature(x, k);
            let v = chi2_sf(x, k).unwrap();
            assert!((o - v).abs() < 1e-8, "x={x} k={k}: {v} vs {o}");
        }
    }

    #[test]
    fn normal_quantile_matches_oracle() {
        let q = normal_quantile(0.975).unwrap();
        assert!((q - 1.959964).abs() < 1e-6);
        for p in [0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.9995] {
            let o = normal_quantile_oracle(p);
            let v = normal_quantile(p).unwrap();
            assert!((o - v).abs() < 1e-8, "p={p}: {v} vs {o}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn t_quantile_exceeds_normal() {
        let z = normal_quantile(0.975).unwrap();
        let t = t_quantile(0.975, 99.0).unwrap();
        assert!(t > z && t < 1.99);
    }

    #[test]
    fn ks_accepts_normal_quantiles_and_rejects_shift() {
        let n = 500;
        let xs: Vec<f64> = (0..n)
            .map(|i| standard_normal_quantile((i as f64 + 0.5) / n as f64))
            .collect();
        assert!(ks_test_standard_normal(&xs).unwrap().p_value > 0.99);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.5).collect();
        assert!(ks_test_standard_normal(&shifted).unwrap().p_value < 1e-6);
    }
}
