//! The JSON report document, its schema and the text rendering.

use std::path::Path;
use std::sync::LazyLock;

use coffeescan_core::scan::{aggregate, render_text, Aggregate, ScanReport, REPORT_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_TEXT: &str = include_str!("../schema/report.schema.json");

static SCHEMA: LazyLock<jsonschema::Validator> = LazyLock::new(|| {
    let schema: Value = serde_json::from_str(SCHEMA_TEXT).expect("bundled schema is JSON");
    jsonschema::validator_for(&schema).expect("bundled schema compiles")
});

/// What `scan --format json` prints and `report` reads back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub version: u32,
    pub reports: Vec<ScanReport>,
    pub summary: Aggregate,
}

impl ReportSet {
    pub fn new(reports: Vec<ScanReport>) -> Self {
        let summary = aggregate(&reports);
        ReportSet {
            version: REPORT_VERSION,
            reports,
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            s.push_str(&render_text(r));
        }
        s.push_str(&self.summary.render_text());
        s
    }

    pub fn finding_count(&self) -> usize {
        self.reports.iter().map(|r| r.findings.len()).sum()
    }
}

/// Schema errors plus the checks a schema cannot state.
pub fn check(doc: &Value) -> Result<ReportSet, String> {
    let errors: Vec<String> = SCHEMA
        .iter_errors(doc)
        .map(|e| format!("{}: {e}", e.instance_path()))
        .collect();
    if !errors.is_empty() {
        return Err(errors.join("; "));
    }
    let set: ReportSet = serde_json::from_value(doc.clone()).map_err(|e| e.to_string())?;
    for r in &set.reports {
        let s = &r.stats;
        if s.verdicts.total() > s.candidates || s.candidates_validated != s.verdicts.total() {
            return Err(format!("{}: verdict counts exceed candidates", r.package));
        }
        if s.parsed_files + s.unparsed_files > s.files || s.unparsed.len() != s.unparsed_files {
            return Err(format!("{}: file counts disagree", r.package));
        }
        if !r.findings.windows(2).all(|w| (&w[0].file, w[0].span) <= (&w[1].file, w[1].span)) {
            return Err(format!("{}: findings not sorted", r.package));
        }
    }
    if set.summary != aggregate(&set.reports) {
        return Err("summary does not match reports".into());
    }
    Ok(set)
}

pub fn load(path: &Path) -> Result<ReportSet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    check(&doc).map_err(|message| CliError::Schema {
        path: path.display().to_string(),
        message,
    })
}

/// Concatenates the reports of several sets under a fresh summary.
pub fn merge(sets: Vec<ReportSet>) -> ReportSet {
    ReportSet::new(sets.into_iter().flat_map(|s| s.reports).collect())
}
