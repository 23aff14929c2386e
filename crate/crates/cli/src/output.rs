//! Deterministic file output: fixed float formatting, `\n` line endings, and
//! atomic replacement through a temporary file in the target directory.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use levy_liquidation::Trajectory;
use serde_json::Value;

use crate::error::CliError;

/// Full-precision scientific notation, 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// CSV with a header row and rows of floats.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
        let _ = writeln!(text, "{}", line.join(","));
    }
    write_atomic(path, text.as_bytes())
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let rows = traj
        .times
        .iter()
        .zip(&traj.positions)
        .zip(&traj.speeds)
        .map(|((t, y), xi)| vec![*t, *y, *xi]);
    write_csv(path, &["t", "Y", "xi"], rows)
}

/// File-name tag for a risk aversion, e.g. `1e-5`.
pub fn a_tag(a: f64) -> String {
    format!("{a:e}")
}

pub fn in_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// JSON number, or null when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
