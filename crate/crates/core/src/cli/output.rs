//! Result files and the run manifest.

use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Serializes `rows` as CSV with a header taken from the row type.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    write_atomic(path, &bytes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// Outcome of one grid point.
#[derive(Clone, Debug, Serialize)]
pub struct PointStatus {
    pub index: usize,
    /// Frequency or quasimomentum of the point.
    pub at: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A machine-readable failure.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

/// Written next to every set of results.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub program: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub exit_code: i32,
    pub config: serde_json::Value,
    /// Subcommand-specific findings such as peak and dip locations.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    pub points: Vec<PointStatus>,
    pub errors: Vec<ErrorRecord>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Self {
        Manifest {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            exit_code: 0,
            config: serde_json::Value::Null,
            summary: serde_json::Value::Null,
            outputs: Vec::new(),
            points: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn error(&mut self, kind: &str, message: impl Into<String>) {
        self.errors.push(ErrorRecord {
            kind: kind.to_string(),
            message: message.into(),
        });
    }

    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| p.status == Status::Failed).count()
    }
}
