//! JSON and CSV writers plus output-path resolution.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use nogo_core::sweep::SweepRow;
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
/// Default output directory for commands that write files.
pub const OUT_DIR_ENV: &str = "GNOGO_OUT_DIR";

pub const SWEEP_HEADER: [&str; 10] = [
    "family",
    "parameter_name",
    "parameter",
    "D_closed",
    "r",
    "D_finite_r",
    "D_best_search",
    "log_negativity_log2_ebits",
    "violated",
    "error",
];

/// `explicit`, else `file_name` inside `$GNOGO_OUT_DIR` (or the working directory).
pub fn resolve_output(explicit: Option<&Path>, file_name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(file_name),
    }
}

/// Wraps a command's payload with the fields every JSON report carries.
pub fn envelope(command: &str, payload: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    out.insert("command".into(), command.into());
    out.insert("log_base".into(), nogo_core::entanglement::LOG_BASE.into());
    match payload {
        Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

pub fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

pub fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow], r: f64) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Failure(format!("CSV encoding failed: {e}"));
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.family.to_string(),
            row.family.parameter_name().to_string(),
            float(row.parameter),
            opt_float(row.d_closed),
            float(r),
            opt_float(row.d_finite_r),
            opt_float(row.d_best_search),
            opt_float(row.log_negativity),
            row.violated.map(|v| v.to_string()).unwrap_or_default(),
            row.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failure(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}
