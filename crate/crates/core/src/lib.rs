//! Functional spherical autocorrelation for functional time series.
//!
//! Curves are sampled on a common grid in `[0, 1]` and integrated with
//! left-gap Riemann sums. The crate provides robust centering by the spatial
//! median, the spherical autocorrelation estimator with white-noise bands and
//! portmanteau tests, FPCA, FAR/FSAR fitting with residual extraction,
//! process simulators and a Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod far;
pub mod fpca;
pub mod functional;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod median;
pub mod sacf;
pub mod simulate;
pub mod transform;

pub use error::{FsacfError, Result};
pub use far::{
    far1_kernel_pca, far1_pca_model, fit_fsar, fitted_and_residuals, Dimension, FarFit, FarModel,
};
pub use fpca::{fpca, reconstruct, select_cpv, FpcaResult};
pub use functional::{inner_product, norm, spatial_sign, Curve, FunctionalSeries, Grid};
pub use median::{spatial_median, spatial_median_fit, MedianConfig};
pub use sacf::{
    confidence_bound, cp_norm, facf, portmanteau, sacf, PortmanteauResult, SacfEstimate,
};
pub use simulate::{gaussian_kernel, generate, generate_replication, ProcessSpec, Seed};
