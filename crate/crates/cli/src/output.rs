//! Record rendering, atomic file writes and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Rows of one run, rendered in both output formats.
#[derive(Debug, Clone)]
pub struct Records {
    csv: Vec<u8>,
    json: Value,
    count: usize,
}

impl Records {
    pub fn new<T: Serialize>(rows: &[T]) -> Result<Self, CliError> {
        let mut csv = Vec::new();
        qhop::experiments::write_csv(&mut csv, rows)?;
        let json = serde_json::to_value(rows).map_err(|e| CliError::Config {
            key: None,
            message: format!("cannot render records: {e}"),
        })?;
        Ok(Records {
            csv,
            json,
            count: rows.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.csv.clone(),
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.json).unwrap_or_default();
                out.push(b'\n');
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub records: usize,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

/// Manifest path next to a record file: `run.csv` -> `run.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Write through a temporary file in the target directory and rename, so a
/// failed run never leaves a partial file behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(parent_dir(path)).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_manifest(manifest: &Manifest) -> Result<(), CliError> {
    let path = manifest_path(&manifest.output);
    let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Config {
        key: None,
        message: format!("cannot render manifest: {e}"),
    })?;
    bytes.push(b'\n');
    atomic_write(&path, &bytes)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        key: Some("manifest".into()),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: f64,
    }

    #[test]
    fn renders_both_formats() {
        let r = Records::new(&[Row { a: 1, b: 0.5 }, Row { a: 2, b: -1.0 }]).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(String::from_utf8(r.render(Format::Csv)).unwrap(), "a,b\n1,0.5\n2,-1.0\n");
        let json: Value = serde_json::from_slice(&r.render(Format::Json)).unwrap();
        assert_eq!(json[1]["b"], -1.0);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        atomic_write(&path, b"first\n").unwrap();
        atomic_write(&path, b"second\n").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_eq!(manifest_path(&path), dir.path().join("out.manifest.json"));
    }
}
