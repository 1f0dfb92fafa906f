//! Package scanning and report types.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detectors::{
    run_detectors, Detector, DetectorConfig, Finding, PackageView, ParsedFile, Verdict,
};
use crate::flow::{collect_strings, PackageFlow};
use crate::minijs::parse;
use crate::pkg::Package;

pub const REPORT_VERSION: u32 = 1;

/// Config files that may carry the app id, in lookup order.
const PROJECT_CONFIGS: [&str; 2] = ["project.config.json", "project.swan.json"];

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub config: DetectorConfig,
    /// Restrict to these detectors; `None` runs all of them.
    pub detectors: Option<BTreeSet<Detector>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub valid: usize,
    pub invalid: usize,
    pub indeterminate: usize,
}

impl VerdictCounts {
    pub fn total(&self) -> usize {
        self.valid + self.invalid + self.indeterminate
    }

    pub fn add(&mut self, other: &VerdictCounts) {
        self.valid += other.valid;
        self.invalid += other.invalid;
        self.indeterminate += other.indeterminate;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnparsedFile {
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub files: usize,
    pub parsed_files: usize,
    pub unparsed_files: usize,
    pub unparsed: Vec<UnparsedFile>,
    pub candidates: usize,
    pub candidates_validated: usize,
    pub verdicts: VerdictCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub version: u32,
    pub package: String,
    pub app_id: Option<String>,
    pub findings: Vec<Finding>,
    pub stats: ScanStats,
    pub duration_ms: f64,
}

impl ScanReport {
    /// Recomputes the validation counters from the findings.
    pub fn recount(&mut self) {
        let mut counts = VerdictCounts::default();
        let mut candidates = 0;
        for f in &self.findings {
            if f.candidate_secret.is_some() {
                candidates += 1;
            }
            match &f.verdict {
                Some(Verdict::Valid { .. }) => counts.valid += 1,
                Some(Verdict::Invalid { .. }) => counts.invalid += 1,
                Some(Verdict::Indeterminate { .. }) => counts.indeterminate += 1,
                None => {}
            }
        }
        self.stats.candidates = candidates;
        self.stats.candidates_validated = counts.total();
        self.stats.verdicts = counts;
    }

    pub fn count_by_detector(&self) -> BTreeMap<Detector, usize> {
        let mut m = BTreeMap::new();
        for f in &self.findings {
            *m.entry(f.detector).or_insert(0) += 1;
        }
        m
    }
}

/// Parses every `.js` entry; files outside the MiniJS subset are reported
/// as unparsed instead of failing the package.
pub fn parse_package(pkg: &Package) -> (Vec<ParsedFile>, Vec<UnparsedFile>) {
    let mut parsed = Vec::new();
    let mut unparsed = Vec::new();
    for entry in pkg.entries.iter().filter(|e| e.path.ends_with(".js")) {
        match parse(&entry.text(), &entry.path) {
            Ok(ast) => parsed.push(ParsedFile {
                path: entry.path.clone(),
                ast,
            }),
            Err(e) => unparsed.push(UnparsedFile {
                path: entry.path.clone(),
                error: e.to_string(),
            }),
        }
    }
    (parsed, unparsed)
}

/// The app id from the project config, else the first app-id-shaped string
/// literal in the scripts.
pub fn package_app_id(pkg: &Package, files: &[ParsedFile], cfg: &DetectorConfig) -> Option<String> {
    for name in PROJECT_CONFIGS {
        let Some(entry) = pkg.get(name) else { continue };
        let Ok(json) = serde_json::from_slice::<serde_json::Value>(&entry.data) else {
            continue;
        };
        let id = match json.get("appid") {
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            _ => None,
        };
        if id.is_some() {
            return id;
        }
    }
    let re = cfg.appid_regex().ok()?;
    files
        .iter()
        .flat_map(|f| collect_strings(&f.ast))
        .map(|(s, _)| s)
        .find(|s| re.is_match(s))
}

pub fn scan_package(id: &str, pkg: &Package, opts: &ScanOptions) -> ScanReport {
    let started = Instant::now();
    let (parsed, unparsed) = parse_package(pkg);
    let asts: Vec<_> = parsed.iter().map(|p| &p.ast).collect();
    let flow = PackageFlow::new(&asts);
    let view = PackageView {
        package: pkg,
        files: &parsed,
        flow: &flow,
    };
    let findings = run_detectors(&view, &opts.config, opts.detectors.as_ref());
    let mut report = ScanReport {
        version: REPORT_VERSION,
        package: id.to_string(),
        app_id: package_app_id(pkg, &parsed, &opts.config),
        findings,
        stats: ScanStats {
            files: pkg.entries.len(),
            parsed_files: parsed.len(),
            unparsed_files: unparsed.len(),
            unparsed,
            ..Default::default()
        },
        duration_ms: 0.0,
    };
    report.recount();
    report.duration_ms = started.elapsed().as_secs_f64() * 1000.0;
    report
}

/// Per-detector totals over several reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    pub version: u32,
    pub packages: usize,
    pub packages_with_findings: usize,
    pub findings: BTreeMap<Detector, usize>,
    pub verdicts: VerdictCounts,
    pub unparsed_files: usize,
}

pub fn aggregate(reports: &[ScanReport]) -> Aggregate {
    let mut agg = Aggregate {
        version: REPORT_VERSION,
        findings: Detector::ALL.iter().map(|d| (*d, 0)).collect(),
        ..Default::default()
    };
    for r in reports {
        agg.packages += 1;
        if !r.findings.is_empty() {
            agg.packages_with_findings += 1;
        }
        for (d, n) in r.count_by_detector() {
            *agg.findings.entry(d).or_insert(0) += n;
        }
        agg.verdicts.add(&r.stats.verdicts);
        agg.unparsed_files += r.stats.unparsed_files;
    }
    agg
}

impl Aggregate {
    pub fn render_text(&self) -> String {
        let mut s = format!(
            "packages: {}  with findings: {}  unparsed files: {}\n",
            self.packages, self.packages_with_findings, self.unparsed_files
        );
        for (d, n) in &self.findings {
            s.push_str(&format!("{:<26}{n:>8}\n", d.as_str()));
        }
        s.push_str(&format!(
            "verdicts: valid {}  invalid {}  indeterminate {}\n",
            self.verdicts.valid, self.verdicts.invalid, self.verdicts.indeterminate
        ));
        s
    }
}

/// Human-readable rendering of one report. Lossy; JSON is the full form.
pub fn render_text(report: &ScanReport) -> String {
    let mut s = format!(
        "{} ({} files, {} unparsed): {} finding(s)\n",
        report.package,
        report.stats.files,
        report.stats.unparsed_files,
        report.findings.len()
    );
    for f in &report.findings {
        s.push_str(&format!(
            "  {}:{}:{} {} [{:?}] {}",
            f.file, f.span.line, f.span.col, f.detector, f.confidence, f.evidence
        ));
        if let Some(v) = &f.verdict {
            let v = match v {
                Verdict::Valid { .. } => "valid".to_string(),
                Verdict::Invalid { errcode } => format!("invalid {errcode}"),
                Verdict::Indeterminate { reason } => format!("indeterminate: {reason}"),
            };
            s.push_str(&format!(" => {v}"));
        }
        s.push('\n');
    }
    s
}
