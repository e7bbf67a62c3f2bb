use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use tempfile::NamedTempFile;

/// Shortest decimal that reads back as the same `f64`, matching the CSV and
/// JSON writers.
pub fn num(x: f64) -> String {
    ryu::Buffer::new().format(x).to_string()
}

/// Rows under a header derived from the row type, then `# key=value` lines.
pub fn csv_table<T: Serialize>(rows: &[T], footer: &[(&str, String)]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)?;
    }
    let mut buf = wtr.into_inner().context("flushing CSV")?;
    for (key, value) in footer {
        writeln!(buf, "# {key}={value}")?;
    }
    Ok(buf)
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes to stdout, or to `path` through a temporary file in the same
/// directory that is renamed into place only once complete.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
