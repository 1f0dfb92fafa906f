//! Online confirmation of candidate master keys: a rate-limited client
//! and a mock platform serving the token and session endpoints.

pub mod client;
pub mod limiter;
pub mod registry;
pub mod server;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{Flavor, Validator};
pub use limiter::{Limiter, RatePolicy};
pub use registry::{Registration, SeedFile, UserFixture};
pub use server::{Clock, MockServer, ServerConfig, ServerLimit};

pub const ERR_INVALID_SECRET: i64 = 40001;
pub const ERR_INVALID_GRANT: i64 = 40002;
pub const ERR_INVALID_APPID: i64 = 40013;
pub const ERR_INVALID_CODE: i64 = 40029;
pub const ERR_RATE_LIMITED: i64 = 45011;

/// Name of the environment variable consulted when no endpoint is given.
pub const ENDPOINT_ENV: &str = "COFFEESCAN_ENDPOINT";

#[derive(Debug, Error)]
pub enum KeyvalError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad seed file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("app id {0:?} is not a mini-app id")]
    BadAppId(String),
    #[error("master key for {0} does not look like a secret")]
    BadMasterKey(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("http client: {0}")]
    Http(#[from] reqwest::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    /// The platform handed out an access token (128 hex chars).
    Valid { access_token: String },
    Invalid { errcode: i64 },
    Indeterminate { reason: String },
}

impl Verdict {
    pub fn class(&self) -> &'static str {
        match self {
            Verdict::Valid { .. } => "valid",
            Verdict::Invalid { .. } => "invalid",
            Verdict::Indeterminate { .. } => "indeterminate",
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid { .. })
    }
}
