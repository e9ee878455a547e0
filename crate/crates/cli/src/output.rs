//! Output files: CSV tables and JSON documents, written atomically.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Shortest representation that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let inner = || -> io::Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    };
    inner().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn time_file(probe: &str, kappa: f64, gamma: f64, qubits: u32) -> String {
    format!("time_{probe}_k{}_g{}_N{qubits}.csv", num(kappa), num(gamma))
}

pub fn exponent_file(probe: &str, per_time: bool) -> String {
    if per_time {
        format!("exponents_{probe}_per_time.csv")
    } else {
        format!("exponents_{probe}.csv")
    }
}
