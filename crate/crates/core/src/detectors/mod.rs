//! Vulnerability detectors. Each one maps a parsed package plus its flow
//! view to a list of [`Finding`]s.

mod ble;
mod config;
mod secrets;
mod session;
mod verification;
mod words;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::flow::PackageFlow;
use crate::minijs::{Node, SourceSpan};
use crate::pkg::Package;

pub use ble::detect_ble;
pub use config::{ConfigError, DetectorConfig};
pub use secrets::{detect_appsecret, secret_candidates, SecretMatch};
pub use session::{detect_session_key, detect_session_key_network, detect_session_key_urls};
pub use verification::{detect_cross_app, detect_private_share};
pub use words::{classify_url, word_segment, UrlClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    BleMisconfig,
    MissingCrossAppCheck,
    MissingPrivateShareCheck,
    AppSecretString,
    AppSecretInUrl,
    SessionKeyUrl,
    SessionKeyMissingNetwork,
}

impl Detector {
    pub const ALL: [Detector; 7] = [
        Detector::BleMisconfig,
        Detector::MissingCrossAppCheck,
        Detector::MissingPrivateShareCheck,
        Detector::AppSecretString,
        Detector::AppSecretInUrl,
        Detector::SessionKeyUrl,
        Detector::SessionKeyMissingNetwork,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Detector::BleMisconfig => "BleMisconfig",
            Detector::MissingCrossAppCheck => "MissingCrossAppCheck",
            Detector::MissingPrivateShareCheck => "MissingPrivateShareCheck",
            Detector::AppSecretString => "AppSecretString",
            Detector::AppSecretInUrl => "AppSecretInUrl",
            Detector::SessionKeyUrl => "SessionKeyUrl",
            Detector::SessionKeyMissingNetwork => "SessionKeyMissingNetwork",
        }
    }

    pub fn carries_secret(self) -> bool {
        matches!(self, Detector::AppSecretString | Detector::AppSecretInUrl)
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown detector {0:?}")]
pub struct UnknownDetector(pub String);

impl FromStr for Detector {
    type Err = UnknownDetector;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Detector::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownDetector(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    /// One step lower, used when a result depended on a cross-file hop.
    pub fn lowered(self) -> Confidence {
        match self {
            Confidence::High => Confidence::Medium,
            _ => Confidence::Low,
        }
    }
}

/// 1-based line/column range; the end column is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl From<&SourceSpan> for Span {
    fn from(s: &SourceSpan) -> Self {
        Span {
            line: s.start_line,
            col: s.start_col,
            end_line: s.end_line,
            end_col: s.end_col,
        }
    }
}

/// Outcome of checking a candidate secret against the key server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Valid { access_token: String },
    Invalid { errcode: i64 },
    Indeterminate { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub detector: Detector,
    pub file: String,
    pub span: Span,
    pub evidence: String,
    pub confidence: Confidence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_secret: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl Finding {
    pub fn new(
        detector: Detector,
        file: impl Into<String>,
        span: Span,
        evidence: impl Into<String>,
        confidence: Confidence,
    ) -> Self {
        Finding {
            detector,
            file: file.into(),
            span,
            evidence: evidence.into(),
            confidence,
            candidate_secret: None,
            verdict: None,
        }
    }

    pub fn sort_key(&self) -> (&str, Span, Detector, &str) {
        (&self.file, self.span, self.detector, &self.evidence)
    }
}

/// A successfully parsed script of a package.
#[derive(Debug)]
pub struct ParsedFile {
    pub path: String,
    pub ast: Node,
}

/// Everything the detectors look at for one package.
pub struct PackageView<'a> {
    pub package: &'a Package,
    pub files: &'a [ParsedFile],
    pub flow: &'a PackageFlow<'a>,
}

impl<'a> PackageView<'a> {
    /// Path of the parsed file with flow index `file`.
    pub fn path(&self, file: usize) -> &'a str {
        &self.files[file].path
    }
}

/// Runs the selected detectors (all when `enabled` is `None`) and returns
/// their findings sorted by file and position.
pub fn run_detectors(
    view: &PackageView<'_>,
    cfg: &DetectorConfig,
    enabled: Option<&BTreeSet<Detector>>,
) -> Vec<Finding> {
    let on = |d: Detector| enabled.is_none_or(|set| set.contains(&d));
    let mut out = Vec::new();
    if on(Detector::BleMisconfig) {
        out.extend(detect_ble(view));
    }
    if on(Detector::MissingCrossAppCheck) {
        out.extend(detect_cross_app(view, cfg));
    }
    if on(Detector::MissingPrivateShareCheck) {
        out.extend(detect_private_share(view));
    }
    out.extend(
        detect_appsecret(view.package, cfg)
            .into_iter()
            .filter(|f| on(f.detector)),
    );
    if on(Detector::SessionKeyUrl) {
        out.extend(detect_session_key_urls(view, cfg));
    }
    if on(Detector::SessionKeyMissingNetwork) {
        out.extend(detect_session_key_network(view, cfg));
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}
