//! CSV and JSON emission. Numeric cells carry 17 significant digits with a
//! '.' decimal separator and no locale dependence, so re-running a command
//! with the same configuration reproduces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// 17 significant digits, sign and exponent in a fixed layout.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_usize(x: usize) -> String {
    x.to_string()
}

pub fn fmt_bool(x: bool) -> String {
    if x { "true" } else { "false" }.to_string()
}

/// Writes one CSV with a single header row and fixed column order.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let mut first = true;
        for cell in row {
            if !first {
                text.push(',');
            }
            first = false;
            let _ = write!(text, "{cell}");
        }
        text.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)
}

/// Output path `<dir>/<command>-<timestamp>.csv` (seconds since the epoch).
pub fn csv_path(dir: &Path, command: &str, timestamp: u64) -> PathBuf {
    dir.join(format!("{command}-{timestamp}.csv"))
}

pub fn unix_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Reads a CSV written by `write_csv` back into header and string cells.
pub fn read_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .unwrap_or_default();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect();
    Ok((header, rows))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(
        path,
        serde_json::to_string_pretty(value).unwrap_or_default(),
    )
}
