//! CSV and JSON emitters. Numbers are written with 17 significant digits so
//! doubles round-trip exactly; non-finite values are refused.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `columns` (all the same length) under `header` to `path`.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.len() != header.len() || columns.iter().any(|c| c.len() != rows) {
        bail!(
            "CSV columns do not line up with the header for {}",
            path.display()
        );
    }
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for i in 0..rows {
        let mut record = Vec::with_capacity(columns.len());
        for (name, col) in header.iter().zip(columns) {
            if !col[i].is_finite() {
                bail!(
                    "non-finite value {} in column {name} row {i} of {}",
                    col[i],
                    path.display()
                );
            }
            record.push(format_number(col[i]));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}
