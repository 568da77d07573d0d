//! Run reports, error records and CSV writing.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::ScenarioConfig;

pub const TOOL: &str = "lattice-heat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One headline number. `criterion` names the acceptance criterion it
/// belongs to; anything else is informational.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryItem {
    pub name: String,
    pub value: f64,
    pub criterion: Option<u8>,
    pub label: String,
}

impl SummaryItem {
    pub fn criterion(name: impl Into<String>, value: f64, id: u8) -> Self {
        Self {
            name: name.into(),
            value,
            criterion: Some(id),
            label: format!("criterion {id}"),
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            criterion: None,
            label: "informational".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config: ScenarioConfig,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub command_line: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub subcommand: String,
    /// "ok", or "criteria_failed" for a `verify` run with failures.
    pub status: String,
    pub summary: Vec<SummaryItem>,
    pub artifacts: Vec<String>,
    pub flags: Vec<String>,
    pub details: serde_json::Value,
    pub provenance: Provenance,
}

/// What a subcommand hands back before provenance is attached.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: Vec<SummaryItem>,
    pub artifacts: Vec<PathBuf>,
    pub flags: Vec<String>,
    pub details: serde_json::Value,
    pub failed_criteria: bool,
}

/// Machine-readable error record, written to stderr and to `error.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub tool: String,
    pub subcommand: String,
    pub kind: String,
    pub message: String,
    pub details: Vec<String>,
    pub exit_code: i32,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Writes a CSV with a header row; every row must match the header width.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
