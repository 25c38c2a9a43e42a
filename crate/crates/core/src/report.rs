//! Deterministic output writers.
//!
//! CSV files open with `#` comment lines carrying the version tag and the
//! resolved configuration, then a header row and data rows with floats at
//! 17 significant digits (lossless f64 round-trip). JSON sidecars are
//! pretty-printed with sorted keys. Nothing here depends on wall-clock
//! time, so identical inputs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::VERSION;

/// A float at 17 significant digits; `NaN` encodes undefined-at-point.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    fmt_float(v.unwrap_or(f64::NAN))
}

/// Write a CSV file with embedded version and resolved-config comments.
pub fn write_csv(
    path: &Path,
    resolved_config: &serde_json::Value,
    header: &str,
    rows: &[String],
) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# version: {VERSION}")?;
    writeln!(w, "# config: {resolved_config}")?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

/// Write a JSON sidecar (pretty, trailing newline).
pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}
