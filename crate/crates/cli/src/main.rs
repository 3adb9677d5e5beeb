//! `fsacf` command-line front end.
//!
//! Exit status is 0 on success, 1 on data or numerical errors and 2 on usage
//! errors. Every path argument accepts `-` for stdin or stdout.

mod analysis;
mod error;
mod mc;
mod process;
mod streams;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "fsacf",
    version,
    about = "Spherical autocorrelation analysis of functional time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spherical autocorrelation with white-noise bands.
    Sacf(SacfArgs),
    /// Classical mean-centered functional autocorrelation.
    Facf(FacfArgs),
    /// Portmanteau test for each requested maximum lag.
    Test(TestArgs),
    /// Functional spatial median as a one-curve CSV.
    Median(MedianArgs),
    /// Functional principal components.
    Fpca(FpcaArgs),
    /// Fit a functional seasonal autoregression and print its summary.
    FitFsar(FitArgs),
    /// Residual curves of a functional seasonal autoregression.
    Residuals(FitArgs),
    /// Simulate a functional time series.
    Simulate(SimulateArgs),
    /// Differencing and intraday price transforms.
    Transform(TransformArgs),
    /// Monte Carlo coverage of the white-noise band.
    McCoverage(McArgs),
    /// Monte Carlo power of the portmanteau test under FAR(1).
    McPower(McArgs),
    /// Monte Carlo comparison of variance estimators and quantiles.
    McVariance(McArgs),
    /// Monte Carlo diagnostics of misspecified FAR fits.
    McMisfit(McArgs),
}

// ============================================================================
// Shared flags
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Io {
    /// Input curve CSV, or `-` for stdin.
    #[arg(long)]
    pub input: String,
    /// Output path, or `-` for stdout.
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct SacfArgs {
    #[command(flatten)]
    pub io: Io,
    /// Largest lag H.
    #[arg(short = 'H', long = "lags", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub lags: u64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    /// One-curve CSV used as the center instead of the estimated median.
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FacfArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(short = 'H', long = "lags", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub lags: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub io: Io,
    /// Maximum lags, comma separated.
    #[arg(short = 'H', long = "lags", value_delimiter = ',', default_value = "20", value_parser = clap::value_parser!(u64).range(1..))]
    pub lags: Vec<u64>,
    /// Level used for the band reported in JSON output.
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MedianArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FpcaArgs {
    /// Input curve CSV, or `-` for stdin.
    #[arg(long)]
    pub input: String,
    /// Directory receiving eigenvalues.csv, eigenfunctions.csv and scores.csv.
    #[arg(long)]
    pub outdir: PathBuf,
    /// Number of components to export; chosen by --cpv when absent.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub components: Option<u64>,
    #[arg(long, default_value_t = 0.9, value_parser = parse_cpv)]
    pub cpv: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: Io,
    /// Autoregressive lags, comma separated, e.g. `1,7`.
    #[arg(short = 'L', long = "lags", value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(u64).range(1..))]
    pub lags: Vec<u64>,
    /// Cumulative variance threshold selecting the FPC dimension.
    #[arg(long, default_value_t = 0.9, value_parser = parse_cpv)]
    pub cpv: f64,
    /// Fixed FPC dimension; overrides --cpv.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub components: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of bm, bb, fourier, bspline, gauss2, far1, far2.
    #[arg(long)]
    pub process: String,
    /// Kernel strength of far1, or of the first lag of far2.
    #[arg(long = "S", allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Kernel strength of the second lag of far2.
    #[arg(long = "S2", allow_hyphen_values = true)]
    pub s2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    /// Number of curves.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Grid points on [0, 1].
    #[arg(long = "M", default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
    pub m: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformKind {
    /// Pointwise first difference of consecutive curves.
    Diff,
    /// Lagged intraday log returns.
    LogReturn,
    /// Cumulative intraday log return.
    Cidr,
    /// Pointwise square.
    Square,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long, value_enum)]
    pub kind: TransformKind,
    /// Grid-point lag of log-return.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub lag_points: u64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Flat TOML config file.
    #[arg(long)]
    pub config: String,
    /// Overrides the seed of the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV of result cells, or `-` for stdout.
    #[arg(long, default_value = "-")]
    pub output: String,
    /// JSON summary path; defaults to the CSV path with a .json extension.
    #[arg(long)]
    pub summary: Option<String>,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn parse_cpv(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

// ============================================================================
// Dispatch
// ============================================================================

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sacf(a) => analysis::sacf(&a),
        Command::Facf(a) => analysis::facf(&a),
        Command::Test(a) => analysis::test(&a),
        Command::Median(a) => analysis::median(&a),
        Command::Fpca(a) => analysis::fpca(&a),
        Command::FitFsar(a) => analysis::fit_fsar(&a),
        Command::Residuals(a) => analysis::residuals(&a),
        Command::Simulate(a) => analysis::simulate(&a),
        Command::Transform(a) => analysis::transform(&a),
        Command::McCoverage(a) => mc::coverage(&a),
        Command::McPower(a) => mc::power(&a),
        Command::McVariance(a) => mc::variance(&a),
        Command::McMisfit(a) => mc::misfit(&a),
    }
}

fn main() -> ExitCode {
    // clap prints its own diagnostic and exits with status 2 on bad usage.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
