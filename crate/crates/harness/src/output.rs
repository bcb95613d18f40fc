//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::error::HarnessError;

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| HarnessError::Io {
            path: PathBuf::from("<memory>"),
            source: e.into_error(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let bytes = self.to_csv()?;
        std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
    }

    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    riot_harness_version: &'a str,
    riot_core_version: &'a str,
    seeds: &'a [u64],
    outputs: Vec<String>,
    config: &'a ExperimentSpec,
}

/// `manifest.toml` next to the outputs: command, versions, seeds, produced
/// files and the full resolved configuration. Rerunning the command with the
/// embedded configuration reproduces every row.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    spec: &ExperimentSpec,
    seeds: &[u64],
    outputs: &[&str],
) -> Result<PathBuf, HarnessError> {
    let m = Manifest {
        command,
        riot_harness_version: env!("CARGO_PKG_VERSION"),
        riot_core_version: riot_core::VERSION,
        seeds,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        config: spec,
    };
    let text = toml::to_string(&m).map_err(|e| HarnessError::Config(e.to_string()))?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}
