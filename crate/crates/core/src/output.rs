//! CSV and JSON writers. Every number in a CSV is written with 17
//! significant digits so it parses back to the same `f64`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-oriented CSV: `columns[k]` holds the values of `headers[k]`.
pub fn write_csv(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::InvalidInput("header and column counts differ".into()));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidInput("columns have different lengths".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(headers).map_err(|e| Error::Io(e.to_string()))?;
    for k in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_f64(c[k]))).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
