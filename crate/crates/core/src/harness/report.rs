//! Structured experiment output.
//!
//! A report is a set of named tabular sections plus a list of check
//! outcomes, together with the seed, config echo, and the commit that
//! produced it. Reports are fully deterministic under a master seed:
//! wall-clock data (timestamps, durations) deliberately lives outside the
//! report in a sidecar written by the CLI, so two runs with the same seed
//! emit byte-identical report files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A single table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl CellValue {
    fn to_csv_field(&self) -> String {
        match self {
            CellValue::Int(v) => v.to_string(),
            CellValue::Float(v) => format!("{v}"),
            CellValue::Text(v) => v.clone(),
        }
    }
}

impl From<i64> for CellValue {
    fn from(v: i64) -> Self {
        CellValue::Int(v)
    }
}

impl From<usize> for CellValue {
    fn from(v: usize) -> Self {
        CellValue::Int(v as i64)
    }
}

impl From<u64> for CellValue {
    fn from(v: u64) -> Self {
        CellValue::Int(v as i64)
    }
}

impl From<f64> for CellValue {
    fn from(v: f64) -> Self {
        CellValue::Float(v)
    }
}

impl From<&str> for CellValue {
    fn from(v: &str) -> Self {
        CellValue::Text(v.to_string())
    }
}

impl From<String> for CellValue {
    fn from(v: String) -> Self {
        CellValue::Text(v)
    }
}

/// One tabular section with a fixed, documented column order. Every row
/// carries the seed that produced it (enforced by [`Report::validate`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<CellValue>>,
}

impl Section {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Section {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<CellValue>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(CellValue::to_csv_field).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Verdict of one checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Informational rows never fail the run.
    Info,
}

/// One checker outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub observed: f64,
    pub criterion: String,
    pub seed: u64,
}

/// Structured experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub seed: u64,
    pub commit: String,
    pub config_echo: String,
    pub sections: Vec<Section>,
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    pub fn new(seed: u64, config_echo: String) -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            seed,
            commit: commit_id(),
            config_echo,
            sections: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn section(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        status: CheckStatus,
        observed: f64,
        criterion: impl Into<String>,
    ) {
        let seed = self.seed;
        self.checks.push(CheckOutcome {
            name: name.into(),
            status,
            observed,
            criterion: criterion.into(),
            seed,
        });
    }

    /// True when any checker failed.
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Fail)
    }

    /// Every section must carry the per-row seed column.
    pub fn validate(&self) -> Result<()> {
        for s in &self.sections {
            if !s.columns.iter().any(|c| c == "seed") {
                return Err(Error::InvalidConfig(format!(
                    "section {} lacks a seed column",
                    s.name
                )));
            }
            for row in &s.rows {
                if row.len() != s.columns.len() {
                    return Err(Error::Shape {
                        expected: s.columns.len(),
                        got: row.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Checks rendered as a table (also the CSV layout).
    fn checks_csv(&self) -> String {
        let mut out = String::from("check,status,observed,criterion,seed\n");
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "fail",
                CheckStatus::Info => "info",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.name, status, c.observed, c.criterion, c.seed
            );
        }
        out
    }
}

/// Output formats for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
    SvgPlots,
}

impl std::str::FromStr for EmitFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            "svg" | "svg_plots" => Ok(EmitFormat::SvgPlots),
            other => Err(Error::InvalidConfig(format!("unknown format {other}"))),
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write the report in the requested formats under `dir`. CSV emits one
/// file per section plus `checks.csv`; JSON writes the whole document;
/// the plot format renders line charts for the sweep-style sections.
pub fn emit(report: &Report, formats: &[EmitFormat], dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    report.validate()?;
    let mut written = Vec::new();
    for fmt in formats {
        match fmt {
            EmitFormat::Json => {
                let path = dir.join("report.json");
                write_file(&path, &report.to_json()?)?;
                written.push(path);
            }
            EmitFormat::Csv => {
                for s in &report.sections {
                    let path = dir.join(format!("{}.csv", s.name));
                    write_file(&path, &s.to_csv())?;
                    written.push(path);
                }
                let path = dir.join("checks.csv");
                write_file(&path, &report.checks_csv())?;
                written.push(path);
            }
            EmitFormat::SvgPlots => {
                for s in &report.sections {
                    if let Some(svg) = crate::harness::plots::section_plot(s) {
                        let path = dir.join(format!("{}.svg", s.name));
                        write_file(&path, &svg)?;
                        written.push(path);
                    }
                }
            }
        }
    }
    Ok(written)
}

/// Commit id when available; deterministic across runs on a fixed checkout.
fn commit_id() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        let mut r = Report::new(7, "config".into());
        let mut s = Section::new("em_error_curve", &["N", "w2_error", "bound", "seed"]);
        s.push(vec![8usize.into(), 0.25.into(), 100.0.into(), 7usize.into()]);
        s.push(vec![16usize.into(), 0.17.into(), 70.0.into(), 7usize.into()]);
        r.section(s);
        r.check("demo", CheckStatus::Pass, 1.0, ">= 0");
        r
    }

    #[test]
    fn json_round_trip_is_structural_identity() {
        let r = sample_report();
        let text = r.to_json().unwrap();
        let parsed = Report::from_json(&text).unwrap();
        assert_eq!(r, parsed);
    }

    #[test]
    fn empty_report_emits_headers_only() {
        let r = Report::new(1, String::new());
        let dir = tempfile::tempdir().unwrap();
        let files = emit(&r, &[EmitFormat::Csv, EmitFormat::Json], dir.path()).unwrap();
        let checks = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
        assert_eq!(checks, "check,status,observed,criterion,seed\n");
        let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(Report::from_json(&json).is_ok());
        assert_eq!(files.len(), 2);
    }

    #[test]
    fn em_curve_csv_columns_are_pinned() {
        let r = sample_report();
        let dir = tempfile::tempdir().unwrap();
        emit(&r, &[EmitFormat::Csv], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("em_error_curve.csv")).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "N,w2_error,bound,seed");
    }

    #[test]
    fn sections_require_seed_column() {
        let mut r = Report::new(1, String::new());
        r.section(Section::new("bad", &["a", "b"]));
        assert!(r.validate().is_err());
    }

    #[test]
    fn failed_flag_tracks_checks() {
        let mut r = Report::new(1, String::new());
        assert!(!r.failed());
        r.check("x", CheckStatus::Fail, 0.0, "must pass");
        assert!(r.failed());
    }

    #[test]
    fn float_formatting_round_trips() {
        // Shortest-representation formatting survives a CSV/JSON cycle.
        let v = CellValue::Float(0.1 + 0.2);
        assert_eq!(v.to_csv_field(), "0.30000000000000004");
    }
}
