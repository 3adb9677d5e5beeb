//! Monte Carlo commands driven by flat TOML config files.
//!
//! Every key is optional and falls back to the library default. Unknown keys
//! are rejected so that typos do not silently run the default experiment.

use std::fmt::Write as _;
use std::path::Path;

use fsacf::mc::{
    coverage_study, misfit_study, power_study, variance_study, CenterMode, ExperimentConfig,
    MisfitConfig, PowerConfig, PowerReport, Rate, VarianceConfig,
};
use fsacf::Seed;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::process::{parse_process, ProcessParams};
use crate::streams::write_text;
use crate::McArgs;

const RATE_HEADER: &str = "rejections,valid,failures,rate,se";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverageFile {
    process: String,
    #[serde(rename = "S")]
    s: Option<f64>,
    #[serde(rename = "S2")]
    s2: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    n_list: Option<Vec<usize>>,
    alphas: Option<Vec<f64>>,
    lags: Option<Vec<usize>>,
    replications: Option<usize>,
    seed: Option<u64>,
    center: Option<String>,
    grid_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerFile {
    s_grid: Option<Vec<f64>>,
    n_list: Option<Vec<usize>>,
    max_lags: Option<Vec<usize>>,
    alpha: Option<f64>,
    replications: Option<usize>,
    seed: Option<u64>,
    grid_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarianceFile {
    lambda_pairs: Option<Vec<(f64, f64)>>,
    n_list: Option<Vec<usize>>,
    alphas: Option<Vec<f64>>,
    replications: Option<usize>,
    seed: Option<u64>,
    grid_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MisfitFile {
    s1: f64,
    s2: f64,
    n: usize,
    max_lag: Option<usize>,
    alpha: Option<f64>,
    cpv: Option<f64>,
    replications: Option<usize>,
    seed: Option<u64>,
    grid_points: Option<usize>,
}

fn load<T: DeserializeOwned>(path: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::File {
        path: path.to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("--config {path}: {}", e.message())))
}

fn seed(args: &McArgs, file: Option<u64>) -> Seed {
    Seed::new(args.seed.or(file).unwrap_or(0))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn rate_fields(r: &Rate) -> String {
    format!(
        "{},{},{},{:?},{:?}",
        r.rejections, r.valid, r.failures, r.rate, r.se
    )
}

/// Writes the CSV cells and the JSON summary next to them.
fn emit<T: Serialize>(args: &McArgs, csv: &str, report: &T) -> CliResult<()> {
    write_text(&args.output, csv)?;
    let summary = match (&args.summary, args.output.as_str()) {
        (Some(p), _) => Some(p.clone()),
        (None, "-") => None,
        (None, out) => Some(Path::new(out).with_extension("json").display().to_string()),
    };
    if let Some(path) = summary {
        let mut text =
            serde_json::to_string_pretty(report).map_err(|e| CliError::Output(e.into()))?;
        text.push('\n');
        write_text(&path, &text)?;
    }
    Ok(())
}

fn study_error(e: fsacf::FsacfError) -> CliError {
    match e {
        fsacf::FsacfError::InvalidArgument(m) => CliError::Usage(format!("--config: {m}")),
        other => other.into(),
    }
}

pub fn coverage(args: &McArgs) -> CliResult<()> {
    let file: CoverageFile = load(&args.config)?;
    let params = ProcessParams {
        s: file.s,
        s2: file.s2,
        lambda1: file.lambda1,
        lambda2: file.lambda2,
    };
    let process = parse_process(&file.process, params, "process")?;
    let mut cfg = ExperimentConfig::new(process, 0);
    cfg.seed = seed(args, file.seed);
    set(&mut cfg.n_list, file.n_list);
    set(&mut cfg.alphas, file.alphas);
    set(&mut cfg.lags, file.lags);
    set(&mut cfg.replications, file.replications);
    set(&mut cfg.grid_points, file.grid_points);
    if let Some(c) = file.center.as_deref() {
        cfg.center_mode = match c {
            "estimated" => CenterMode::Estimated,
            "known_zero" => CenterMode::KnownZero,
            "both" => CenterMode::Both,
            other => {
                return Err(CliError::Usage(format!(
                    "center: expected estimated, known_zero or both, got {other:?}"
                )))
            }
        };
    }
    let report = coverage_study(&cfg).map_err(study_error)?;
    let mut csv = format!("n,h,alpha,center,{RATE_HEADER}\n");
    for c in &report.cells {
        writeln!(
            csv,
            "{},{},{},{},{}",
            c.n,
            c.h,
            c.alpha,
            label(&c.center),
            rate_fields(&c.rate)
        )
        .unwrap();
    }
    emit(args, &csv, &report)
}

fn power_csv(report: &PowerReport) -> String {
    let mut csv = format!("model,n,H,alpha,{RATE_HEADER}\n");
    for c in &report.cells {
        writeln!(
            csv,
            "{},{},{},{},{}",
            c.model,
            c.n,
            c.max_lag,
            c.alpha,
            rate_fields(&c.rate)
        )
        .unwrap();
    }
    csv
}

pub fn power(args: &McArgs) -> CliResult<()> {
    let file: PowerFile = load(&args.config)?;
    let mut cfg = PowerConfig::new(0);
    cfg.seed = seed(args, file.seed);
    set(&mut cfg.s_grid, file.s_grid);
    set(&mut cfg.n_list, file.n_list);
    set(&mut cfg.max_lags, file.max_lags);
    set(&mut cfg.alpha, file.alpha);
    set(&mut cfg.replications, file.replications);
    set(&mut cfg.grid_points, file.grid_points);
    let report = power_study(&cfg).map_err(study_error)?;
    emit(args, &power_csv(&report), &report)
}

pub fn variance(args: &McArgs) -> CliResult<()> {
    let file: VarianceFile = load(&args.config)?;
    let mut cfg = VarianceConfig::new(0);
    cfg.seed = seed(args, file.seed);
    set(&mut cfg.lambda_pairs, file.lambda_pairs);
    set(&mut cfg.n_list, file.n_list);
    set(&mut cfg.alphas, file.alphas);
    set(&mut cfg.replications, file.replications);
    set(&mut cfg.grid_points, file.grid_points);
    let report = variance_study(&cfg).map_err(study_error)?;
    let mut csv = format!("lambda1,lambda2,n,alpha,interval,scale,{RATE_HEADER}\n");
    for c in &report.cells {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            c.lambda1,
            c.lambda2,
            c.n,
            c.alpha,
            label(&c.interval),
            label(&c.scale),
            rate_fields(&c.rate)
        )
        .unwrap();
    }
    emit(args, &csv, &report)
}

pub fn misfit(args: &McArgs) -> CliResult<()> {
    let file: MisfitFile = load(&args.config)?;
    let mut cfg = MisfitConfig::new(file.s1, file.s2, file.n, 0);
    cfg.seed = seed(args, file.seed);
    set(&mut cfg.max_lag, file.max_lag);
    set(&mut cfg.alpha, file.alpha);
    set(&mut cfg.cpv, file.cpv);
    set(&mut cfg.replications, file.replications);
    set(&mut cfg.grid_points, file.grid_points);
    let report = misfit_study(&cfg).map_err(study_error)?;
    emit(args, &power_csv(&report), &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = toml::from_str::<PowerFile>("replication = 5").unwrap_err();
        assert!(err.message().contains("replication"));
    }

    #[test]
    fn lambda_pairs_parse_as_arrays() {
        let f: VarianceFile =
            toml::from_str("lambda_pairs = [[1.0, 1.0], [1.0, 2.0]]\nn_list = [100]").unwrap();
        assert_eq!(f.lambda_pairs.unwrap(), vec![(1.0, 1.0), (1.0, 2.0)]);
    }

    #[test]
    fn label_strips_json_quotes() {
        assert_eq!(label(&CenterMode::KnownZero), "known_zero");
    }
}
