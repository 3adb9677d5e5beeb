//! Curve CSV format.
//!
//! ```text
//! t,0,0.01,0.02,...,1
//! 1,0.0,0.113,...
//! 2,0.0,-0.052,...
//! ```
//!
//! The header row lists the grid points after a literal `t`; every following
//! row is a 1-based curve index followed by the curve values. Numbers are
//! written in shortest round-trip form, so a write/read cycle is lossless.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{FsacfError, Result};
use crate::functional::{FunctionalSeries, Grid};

fn csv_error(row: usize, column: usize, message: impl Into<String>) -> FsacfError {
    FsacfError::Csv {
        row,
        column,
        message: message.into(),
    }
}

fn parse_number(field: &str, row: usize, column: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| csv_error(row, column, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(csv_error(
            row,
            column,
            format!("non-finite value {field:?}"),
        ));
    }
    Ok(v)
}

/// Parses a curve CSV. Rows and columns in errors are 1-based.
pub fn read_series<R: Read>(reader: R) -> Result<FunctionalSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(1, 1, e.to_string()))?,
        None => return Err(csv_error(1, 1, "empty input")),
    };
    if header.get(0).map(str::trim) != Some("t") {
        return Err(csv_error(1, 1, "header must start with \"t\""));
    }
    if header.len() < 2 {
        return Err(csv_error(1, 2, "header lists no grid points"));
    }
    let points = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, f)| parse_number(f, 1, c + 1))
        .collect::<Result<Vec<_>>>()?;
    let grid = Arc::new(Grid::new(points).map_err(|e| csv_error(1, 2, e.to_string()))?);
    let m = grid.len();

    let mut rows = Vec::new();
    for (k, rec) in records.enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| csv_error(row, 1, e.to_string()))?;
        if rec.len() == 1 && rec.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if rec.len() != m + 1 {
            return Err(csv_error(
                row,
                rec.len().min(m + 1) + 1,
                format!("expected {} fields, found {}", m + 1, rec.len()),
            ));
        }
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, f)| parse_number(f, row, c + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(csv_error(2, 1, "no curves after the header"));
    }
    FunctionalSeries::from_rows(grid, rows)
}

pub fn write_series<W: Write>(writer: W, series: &FunctionalSeries) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .flexible(false)
        .from_writer(writer);
    let to_io = |e: csv::Error| FsacfError::Io(std::io::Error::other(e));
    let mut record = Vec::with_capacity(series.grid().len() + 1);
    record.push("t".to_string());
    record.extend(series.grid().points().iter().map(|t| format!("{t:?}")));
    wtr.write_record(&record).map_err(to_io)?;
    for (i, c) in series.iter().enumerate() {
        record.clear();
        record.push((i + 1).to_string());
        record.extend(c.values().iter().map(|v| format!("{v:?}")));
        wtr.write_record(&record).map_err(to_io)?;
    }
    wtr.flush()?;
    Ok(())
}
