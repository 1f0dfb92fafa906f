use std::collections::BTreeSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::KeyvalError;

static APP_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(wx[0-9a-f]{16}|[0-9]{8,10})$").unwrap());
static MASTER_KEY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-zA-Z0-9]{32}$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub app_id: String,
    pub master_key: String,
    #[serde(default)]
    pub enabled_services: BTreeSet<String>,
}

impl Registration {
    pub fn new(app_id: &str, master_key: &str) -> Self {
        Registration {
            app_id: app_id.to_string(),
            master_key: master_key.to_string(),
            enabled_services: BTreeSet::new(),
        }
    }

    pub fn check(&self) -> Result<(), KeyvalError> {
        if !APP_ID.is_match(&self.app_id) {
            return Err(KeyvalError::BadAppId(self.app_id.clone()));
        }
        if !MASTER_KEY.is_match(&self.master_key) {
            return Err(KeyvalError::BadMasterKey(self.app_id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserFixture {
    pub user_id: String,
    pub phone: String,
}

/// Contents of a `serve --seed` file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFile {
    #[serde(default)]
    pub seed: u64,
    pub registrations: Vec<Registration>,
    #[serde(default)]
    pub users: Vec<UserFixture>,
}

impl SeedFile {
    /// Accepts either the full object or a bare array of registrations.
    pub fn parse(text: &str) -> Result<Self, KeyvalError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let seed: SeedFile = if v.is_array() {
            SeedFile {
                registrations: serde_json::from_value(v)?,
                ..Default::default()
            }
        } else {
            serde_json::from_value(v)?
        };
        for r in &seed.registrations {
            r.check()?;
        }
        Ok(seed)
    }

    pub fn load(path: &Path) -> Result<Self, KeyvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| KeyvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let arr = r#"[{"app_id":"wx0123456789abcdef","master_key":"0123456789abcdef0123456789abcdef"}]"#;
        assert_eq!(SeedFile::parse(arr).unwrap().registrations.len(), 1);
        let obj = r#"{"seed":4,"registrations":[],"users":[{"user_id":"u","phone":"1"}]}"#;
        let s = SeedFile::parse(obj).unwrap();
        assert_eq!((s.seed, s.users.len()), (4, 1));
        let bad = r#"[{"app_id":"nope","master_key":"0123456789abcdef0123456789abcdef"}]"#;
        assert!(matches!(SeedFile::parse(bad), Err(KeyvalError::BadAppId(_))));
        let short = r#"[{"app_id":"wx0123456789abcdef","master_key":"abc"}]"#;
        assert!(matches!(SeedFile::parse(short), Err(KeyvalError::BadMasterKey(_))));
    }
}
