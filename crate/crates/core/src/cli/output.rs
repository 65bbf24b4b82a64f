use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Pretty JSON with keys sorted at every level, newline-terminated.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    // serde_json's map is ordered by key
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidInput(format!("json: {e}")))?;
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::InvalidInput(format!("json: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes a header and rows with RFC 4180 quoting.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(crate::rational_geometry::enumerate::csv_err)?;
    w.write_record(header).map_err(crate::rational_geometry::enumerate::csv_err)?;
    for r in rows {
        w.write_record(r).map_err(crate::rational_geometry::enumerate::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Float cell in shortest round-trip form; NaN is left empty.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        String::new()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
