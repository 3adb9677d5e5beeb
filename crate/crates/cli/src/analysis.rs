//! Data commands: estimation, testing, model fitting, simulation and
//! transforms.

use std::fmt::Write as _;
use std::sync::Arc;

use fsacf::transform::{intraday_transform, pointwise_difference, IntradayTransform};
use fsacf::{Dimension, Grid, MedianConfig, PortmanteauResult, Seed};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::process::{parse_process, ProcessParams};
use crate::streams::{read_curve, read_series, write_file, write_series, write_text};
use crate::{
    FacfArgs, FitArgs, Format, FpcaArgs, MedianArgs, SacfArgs, SimulateArgs, TestArgs,
    TransformArgs, TransformKind,
};

#[derive(Serialize)]
struct SacfJson<'a> {
    n: usize,
    #[serde(rename = "H")]
    max_lag: usize,
    cp_norm: f64,
    rho: &'a [f64],
    alpha: f64,
    bound: f64,
    #[serde(rename = "Q")]
    q: f64,
    p: f64,
}

#[derive(Serialize)]
struct FacfJson<'a> {
    n: usize,
    #[serde(rename = "H")]
    max_lag: usize,
    rho: &'a [f64],
}

#[derive(Serialize)]
struct TestJson<'a> {
    n: usize,
    cp_norm: f64,
    alpha: f64,
    bound: f64,
    rho: &'a [f64],
    tests: &'a [PortmanteauResult],
}

#[derive(Serialize)]
struct MedianJson<'a> {
    t: &'a [f64],
    median: &'a [f64],
    iterations: usize,
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.into()))?;
    s.push('\n');
    Ok(s)
}

fn to_usize(v: u64) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

fn estimate(
    input: &str,
    max_lag: usize,
    center: Option<&str>,
) -> CliResult<(fsacf::FunctionalSeries, fsacf::SacfEstimate)> {
    let series = read_series(input)?;
    let center = center.map(|p| read_curve(p, "--center")).transpose()?;
    if max_lag >= series.len() {
        return Err(CliError::Usage(format!(
            "--lags {max_lag} must be smaller than the number of curves ({})",
            series.len()
        )));
    }
    let est = fsacf::sacf(&series, max_lag, center.as_ref(), &MedianConfig::default())?;
    Ok((series, est))
}

pub fn sacf(args: &SacfArgs) -> CliResult<()> {
    let h = to_usize(args.lags);
    let (_, est) = estimate(&args.io.input, h, args.center.as_deref())?;
    let bound = est.bound(args.alpha)?;
    let text = match args.format {
        Format::Csv => {
            let mut s = String::from("lag,rho,lower,upper\n");
            for (lag, rho) in est.lags.iter().zip(&est.rho) {
                writeln!(s, "{lag},{rho:?},{:?},{bound:?}", -bound).unwrap();
            }
            s
        }
        Format::Json => {
            let q = fsacf::portmanteau(&est, h)?;
            json(&SacfJson {
                n: est.n,
                max_lag: h,
                cp_norm: est.cp_norm,
                rho: &est.rho,
                alpha: args.alpha,
                bound,
                q: q.statistic,
                p: q.p_value,
            })?
        }
    };
    write_text(&args.io.output, &text)
}

pub fn facf(args: &FacfArgs) -> CliResult<()> {
    let h = to_usize(args.lags);
    let series = read_series(&args.io.input)?;
    if h >= series.len() {
        return Err(CliError::Usage(format!(
            "--lags {h} must be smaller than the number of curves ({})",
            series.len()
        )));
    }
    let rho = fsacf::facf(&series, h)?;
    let text = match args.format {
        Format::Csv => {
            let mut s = String::from("lag,rho,lower,upper\n");
            for (k, r) in rho.iter().enumerate() {
                writeln!(s, "{},{r:?},,", k + 1).unwrap();
            }
            s
        }
        Format::Json => json(&FacfJson {
            n: series.len(),
            max_lag: h,
            rho: &rho,
        })?,
    };
    write_text(&args.io.output, &text)
}

pub fn test(args: &TestArgs) -> CliResult<()> {
    let lags: Vec<usize> = args.lags.iter().map(|&h| to_usize(h)).collect();
    let top = lags.iter().copied().max().unwrap_or(1);
    let (_, est) = estimate(&args.io.input, top, args.center.as_deref())?;
    let results = lags
        .iter()
        .map(|&h| fsacf::portmanteau(&est, h))
        .collect::<fsacf::Result<Vec<_>>>()?;
    let text = match args.format {
        Format::Csv => {
            let mut s = String::from("H,Q,p\n");
            for r in &results {
                writeln!(s, "{},{:?},{:?}", r.max_lag, r.statistic, r.p_value).unwrap();
            }
            s
        }
        Format::Json => json(&TestJson {
            n: est.n,
            cp_norm: est.cp_norm,
            alpha: args.alpha,
            bound: est.bound(args.alpha)?,
            rho: &est.rho,
            tests: &results,
        })?,
    };
    write_text(&args.io.output, &text)
}

pub fn median(args: &MedianArgs) -> CliResult<()> {
    let series = read_series(&args.io.input)?;
    let fit = fsacf::spatial_median_fit(&series, &MedianConfig::default())?;
    match args.format {
        Format::Csv => write_series(&args.io.output, &fsacf::transform::single(fit.median)?),
        Format::Json => {
            let text = json(&MedianJson {
                t: series.grid().points(),
                median: fit.median.values(),
                iterations: fit.iterations,
            })?;
            write_text(&args.io.output, &text)
        }
    }
}

pub fn fpca(args: &FpcaArgs) -> CliResult<()> {
    let series = read_series(&args.input)?;
    let f = fsacf::fpca(&series)?;
    let j = match args.components {
        Some(j) => {
            let j = to_usize(j);
            if j > f.components() {
                return Err(CliError::Usage(format!(
                    "--components {j} exceeds the {} available components",
                    f.components()
                )));
            }
            j
        }
        None => fsacf::select_cpv(&f.eigenvalues, args.cpv)?,
    };
    std::fs::create_dir_all(&args.outdir).map_err(|source| CliError::File {
        path: args.outdir.display().to_string(),
        source,
    })?;

    let mut values = String::from("j,eigenvalue,cpv\n");
    for (k, (l, c)) in f.eigenvalues.iter().zip(&f.cpv).enumerate() {
        writeln!(values, "{},{l:?},{c:?}", k + 1).unwrap();
    }
    write_file(&args.outdir, "eigenvalues.csv", &values)?;

    let functions =
        fsacf::FunctionalSeries::new(Arc::clone(f.grid()), f.eigenfunctions[..j].to_vec())?;
    let mut buf = Vec::new();
    fsacf::io::write_series(&mut buf, &functions)?;
    write_file(
        &args.outdir,
        "eigenfunctions.csv",
        &String::from_utf8_lossy(&buf),
    )?;

    let mut scores = String::from("i");
    for k in 1..=j {
        write!(scores, ",xi_{k}").unwrap();
    }
    scores.push('\n');
    for i in 0..f.scores.rows() {
        write!(scores, "{}", i + 1).unwrap();
        for v in &f.scores.row(i)[..j] {
            write!(scores, ",{v:?}").unwrap();
        }
        scores.push('\n');
    }
    write_file(&args.outdir, "scores.csv", &scores)
}

fn fit(args: &FitArgs) -> CliResult<(fsacf::FunctionalSeries, fsacf::FarFit)> {
    let lags: Vec<usize> = args.lags.iter().map(|&l| to_usize(l)).collect();
    if lags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!(
            "--lags must be strictly increasing, got {lags:?}"
        )));
    }
    let dimension = match args.components {
        Some(j) => Dimension::Fixed(to_usize(j)),
        None => Dimension::Cpv(args.cpv),
    };
    let series = read_series(&args.io.input)?;
    let fit = fsacf::fit_fsar(&series, &lags, dimension)?;
    Ok((series, fit))
}

pub fn fit_fsar(args: &FitArgs) -> CliResult<()> {
    let (_, fit) = fit(args)?;
    let achieved = fit.fpca.cpv.get(fit.model.p() - 1).copied();
    let summary = fit.model.summary(&fit.fpca.eigenvalues, achieved);
    write_text(&args.io.output, &json(&summary)?)
}

pub fn residuals(args: &FitArgs) -> CliResult<()> {
    let (series, fit) = fit(args)?;
    let (_, residuals) = fsacf::fitted_and_residuals(&fit.model, &series)?;
    write_series(&args.io.output, &residuals)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let params = ProcessParams {
        s: args.s,
        s2: args.s2,
        lambda1: args.lambda1,
        lambda2: args.lambda2,
    };
    let spec = parse_process(&args.process, params, "--process")?;
    let grid = Arc::new(Grid::uniform(to_usize(args.m))?);
    let series = fsacf::generate(&spec, to_usize(args.n), &grid, Seed::new(args.seed))?;
    write_series(&args.output, &series)
}

pub fn transform(args: &TransformArgs) -> CliResult<()> {
    let series = read_series(&args.io.input)?;
    let out = match args.kind {
        TransformKind::Diff => pointwise_difference(&series)?,
        TransformKind::LogReturn => intraday_transform(
            &series,
            IntradayTransform::LogReturn {
                lag_points: to_usize(args.lag_points),
            },
        )?,
        TransformKind::Cidr => intraday_transform(&series, IntradayTransform::Cidr)?,
        TransformKind::Square => intraday_transform(&series, IntradayTransform::Square)?,
    };
    write_series(&args.io.output, &out)
}
