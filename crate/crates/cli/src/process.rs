//! Process names accepted by `simulate` and the Monte Carlo configs.

use fsacf::ProcessSpec;

use crate::error::{CliError, CliResult};

pub const NAMES: &str = "bm, bb, fourier, bspline, gauss2, far1, far2";

/// Parameters that only some processes read.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessParams {
    pub s: Option<f64>,
    pub s2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
}

pub fn parse_process(name: &str, params: ProcessParams, flag: &str) -> CliResult<ProcessSpec> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| CliError::Usage(format!("{flag} {name} needs {what}")))
    };
    let spec = match name.to_ascii_lowercase().as_str() {
        "bm" => ProcessSpec::BrownianMotion,
        "bb" => ProcessSpec::BrownianBridge,
        "fourier" | "f" => ProcessSpec::FourierCauchy,
        "bspline" | "bs" => ProcessSpec::bspline_exp(),
        "gauss2" => ProcessSpec::TwoDimGaussian {
            lambda1: params.lambda1.unwrap_or(1.0),
            lambda2: params.lambda2.unwrap_or(2.0),
        },
        "far1" => ProcessSpec::far1(need(params.s, "S")?),
        "far2" => ProcessSpec::far2(need(params.s, "S")?, need(params.s2, "S2")?),
        other => {
            return Err(CliError::Usage(format!(
                "{flag}: unknown process {other:?}; expected one of {NAMES}"
            )))
        }
    };
    spec.validate()
        .map_err(|e| CliError::Usage(format!("{flag}: {e}")))?;
    Ok(spec)
}
