use std::collections::BTreeSet;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad regex in {field}: {source}")]
    Regex {
        field: &'static str,
        #[source]
        source: regex::Error,
    },
    #[error("dictionary word {0:?} is not lowercase")]
    NotLowercase(String),
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Detector tuning. Loadable from JSON; missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub appid_pattern: String,
    pub scene_codes_cross_user: BTreeSet<u32>,
    pub sensitive_apis: BTreeSet<String>,
    /// APIs whose data arrives encrypted under the session key.
    pub encrypted_data_apis: BTreeSet<String>,
    pub network_apis: BTreeSet<String>,
    pub secret_regex: String,
    pub alt_secret_regex: String,
    /// Scan with `alt_secret_regex` instead of `secret_regex`.
    pub use_alt_secret_regex: bool,
    pub url_keyword_dictionary: BTreeSet<String>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            appid_pattern: "wx[0-9a-f]{16}".into(),
            scene_codes_cross_user: [1038].into_iter().collect(),
            sensitive_apis: set(&[
                "getPhoneNumber",
                "getUserInfo",
                "getUserProfile",
                "getUserInteractiveStorage",
                "getWeRunData",
                "getShareInfo",
                "getGroupEnterInfo",
                "chooseInvoice",
                "authPrivateMessage",
            ]),
            encrypted_data_apis: set(&[
                "getWeRunData",
                "getShareInfo",
                "getGroupEnterInfo",
                "getUserProfile",
                "getPhoneNumber",
            ]),
            network_apis: set(&["wx.request", "cloud.callFunction", "cloud.CloudID"]),
            secret_regex: "[a-f0-9]{32}".into(),
            alt_secret_regex: "[a-zA-Z0-9]{32}".into(),
            use_alt_secret_regex: false,
            url_keyword_dictionary: set(&[
                "get", "set", "new", "session", "key", "code", "js", "wx", "app", "login", "token",
                "user", "info",
            ]),
        }
    }
}

impl DetectorConfig {
    /// Settings for Baidu smart-program packages: numeric app keys and
    /// mixed-case secrets.
    pub fn baidu() -> Self {
        DetectorConfig {
            appid_pattern: "[0-9]{8,10}".into(),
            use_alt_secret_regex: true,
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: DetectorConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.appid_regex()?;
        self.active_secret_regex()?;
        compile("alt_secret_regex", &self.alt_secret_regex)?;
        if let Some(w) = self
            .url_keyword_dictionary
            .iter()
            .find(|w| w.to_lowercase() != **w)
        {
            return Err(ConfigError::NotLowercase(w.clone()));
        }
        Ok(())
    }

    /// The app id pattern anchored to the whole string.
    pub fn appid_regex(&self) -> Result<Regex, ConfigError> {
        compile("appid_pattern", &format!("^(?:{})$", self.appid_pattern))
    }

    pub fn active_secret_regex(&self) -> Result<Regex, ConfigError> {
        if self.use_alt_secret_regex {
            compile("alt_secret_regex", &self.alt_secret_regex)
        } else {
            compile("secret_regex", &self.secret_regex)
        }
    }

    pub fn is_appid(&self, s: &str) -> bool {
        self.appid_regex().map(|r| r.is_match(s)).unwrap_or(false)
    }

    pub fn is_network_api(&self, callee: &str) -> bool {
        self.network_apis
            .iter()
            .any(|api| callee == api || callee.ends_with(&format!(".{api}")))
    }
}

fn compile(field: &'static str, pattern: &str) -> Result<Regex, ConfigError> {
    Regex::new(pattern).map_err(|source| ConfigError::Regex { field, source })
}
