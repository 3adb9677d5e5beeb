//! Series transforms used before autocorrelation analysis: pointwise
//! differencing and the intraday price transforms.

use std::sync::Arc;

use crate::error::{FsacfError, Result};
use crate::functional::{Curve, FunctionalSeries};

/// `D_i = Y_i − Y_{i−1}` for `i = 2..n`.
pub fn pointwise_difference(series: &FunctionalSeries) -> Result<FunctionalSeries> {
    let n = series.len();
    if n < 2 {
        return Err(FsacfError::TooShort { needed: 2, got: n });
    }
    let curves = series
        .curves()
        .windows(2)
        .map(|w| w[1].sub(&w[0]))
        .collect::<Result<Vec<_>>>()?;
    FunctionalSeries::new(Arc::clone(series.grid()), curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntradayTransform {
    /// `ln P(t_j) − ln P(t_{j−lag})`; the first `lag_points` grid points are dropped.
    LogReturn { lag_points: usize },
    /// Cumulative intraday return `ln P(t) − ln P(t_1)`.
    Cidr,
    /// Pointwise square.
    Square,
}

pub fn intraday_transform(
    prices: &FunctionalSeries,
    kind: IntradayTransform,
) -> Result<FunctionalSeries> {
    match kind {
        IntradayTransform::Square => prices.map_curves(|c| c.map(|v| v * v)),
        IntradayTransform::Cidr => {
            let logs = log_values(prices)?;
            let rows = logs
                .into_iter()
                .map(|row| {
                    let open = row[0];
                    row.into_iter().map(|v| v - open).collect()
                })
                .collect();
            FunctionalSeries::from_rows(Arc::clone(prices.grid()), rows)
        }
        IntradayTransform::LogReturn { lag_points } => {
            let m = prices.grid().len();
            if lag_points == 0 || lag_points >= m - 1 {
                return Err(FsacfError::InvalidArgument(format!(
                    "lag_points must be in 1..{}, got {lag_points}",
                    m - 1
                )));
            }
            let logs = log_values(prices)?;
            // Weights of the shortened grid follow the usual t_0 = 0 convention.
            let grid = Arc::new(prices.grid().drop_leading(lag_points)?);
            let rows = logs
                .iter()
                .map(|row| {
                    (lag_points..m)
                        .map(|j| row[j] - row[j - lag_points])
                        .collect()
                })
                .collect();
            FunctionalSeries::from_rows(grid, rows)
        }
    }
}

fn log_values(prices: &FunctionalSeries) -> Result<Vec<Vec<f64>>> {
    prices
        .curves()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.values()
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    if p > 0.0 {
                        Ok(p.ln())
                    } else {
                        Err(FsacfError::NonPositivePrice {
                            curve: i,
                            point: j,
                            value: p,
                        })
                    }
                })
                .collect()
        })
        .collect()
}

/// Convenience for building a one-curve series in tests and the CLI.
pub fn single(curve: Curve) -> Result<FunctionalSeries> {
    FunctionalSeries::new(Arc::clone(curve.grid()), vec![curve])
}
