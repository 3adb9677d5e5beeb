//! Path handling where `-` stands for stdin or stdout.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fsacf::{Curve, FunctionalSeries};

use crate::error::{CliError, CliResult};

pub fn open_input(path: &str) -> CliResult<Box<dyn Read>> {
    if path == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file = File::open(path).map_err(|source| CliError::File {
        path: path.to_string(),
        source,
    })?;
    Ok(Box::new(BufReader::new(file)))
}

pub fn open_output(path: &str) -> CliResult<Box<dyn Write>> {
    if path == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).map_err(|source| CliError::File {
        path: path.to_string(),
        source,
    })?;
    Ok(Box::new(BufWriter::new(file)))
}

pub fn read_series(path: &str) -> CliResult<FunctionalSeries> {
    Ok(fsacf::io::read_series(open_input(path)?)?)
}

pub fn write_series(path: &str, series: &FunctionalSeries) -> CliResult<()> {
    let mut out = open_output(path)?;
    fsacf::io::write_series(&mut out, series)?;
    out.flush()?;
    Ok(())
}

/// Reads a curve CSV that must hold exactly one curve.
pub fn read_curve(path: &str, flag: &str) -> CliResult<Curve> {
    let series = read_series(path)?;
    if series.len() != 1 {
        return Err(CliError::Usage(format!(
            "{flag}: expected a single curve in {path}, found {}",
            series.len()
        )));
    }
    Ok(series.into_curves().remove(0))
}

pub fn write_text(path: &str, text: &str) -> CliResult<()> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}
