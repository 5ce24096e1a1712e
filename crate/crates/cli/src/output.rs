//! Result files: RFC-4180 CSV tables and the `results.json` summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Formats a float for a CSV cell: shortest round-trip form, `NaN`/`inf` spelled out.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// One CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "table {}", self.name);
        self.rows.push(row);
    }

    /// The table as RFC-4180 text with CRLF line endings.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// A named invariant evaluated during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Contents of `results.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultsFile {
    pub artifact: &'static str,
    pub artifact_version: &'static str,
    pub schema_version: u32,
    pub scenario: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub mode: &'static str,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    pub all_checks_passed: bool,
    pub tables: Vec<String>,
}

/// Writes every table and `results.json` into `dir`, creating it if needed.
/// Returns the paths written.
pub fn write_outputs(dir: &Path, results: &ResultsFile, tables: &[Table]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(&t.name);
        fs::write(&path, t.to_csv()?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    let path = dir.join("results.json");
    let mut text = serde_json::to_string_pretty(results).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}
