//! Deterministic CSV and JSON writers with atomic replacement.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// A CSV cell: integers verbatim, reals at 12 significant digits.
pub enum Cell {
    Int(usize),
    Real(f64),
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Real(x) => fmt_num(x),
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("serializing output: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(format!("temp file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::Io(format!("writing {}: {e}", target.display())))?;
    tmp.persist(&target).map_err(|e| CliError::Io(format!("renaming onto {}: {e}", target.display())))?;
    log::info!("wrote {}", target.display());
    Ok(target)
}

/// `name.csv` → `name.config.json`.
pub fn sidecar_name(csv_name: &str) -> String {
    format!("{}.config.json", csv_name.trim_end_matches(".csv"))
}
