//! Deterministic file output: atomic writes and fixed-width float text.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Formats a float with 17 significant digits, enough to round-trip f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` atomically: the data lands in a temporary
/// file in the same directory first and is renamed over the target, so a
/// crash mid-write never leaves a truncated artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(&format!("creating temp file near {}", path.display()), e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(&format!("renaming into {}", path.display()), e.error))?;
    Ok(())
}
