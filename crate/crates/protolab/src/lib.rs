//! Deterministic model of the mini-app key protocol. Four parties take
//! part: the platform, a mini-app front-end, its back-end and an attacker.
//! Time comes from an injected clock and every random value from a seeded
//! generator, so a scenario replays byte for byte.

pub mod backend;
pub mod crypto;
pub mod platform;
pub mod scenario;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("unknown user")]
    UnknownUser,
    #[error("unknown app")]
    UnknownApp,
    #[error("invalid master key")]
    InvalidMk,
    #[error("invalid or expired login token")]
    InvalidLt,
    #[error("no such record")]
    NoSuchRecord,
    #[error("invalid access token")]
    InvalidAt,
    #[error("access token expired")]
    AtExpired,
    #[error("service not enabled")]
    ServiceDisabled,
    #[error("envelope signature mismatch")]
    IntegrityFailure,
    #[error("envelope does not decrypt")]
    DecryptFailure,
    #[error("record does not match its kind")]
    MalformedRecord,
    #[error("no account for this phone number")]
    UnknownAccount,
    #[error("phone number not bound to this user")]
    PhoneMismatch,
    #[error("group already rewarded")]
    DuplicateGroup,
}

impl LabError {
    /// Stable snake_case name used in transcripts.
    pub fn code(self) -> &'static str {
        match self {
            LabError::UnknownUser => "unknown_user",
            LabError::UnknownApp => "unknown_app",
            LabError::InvalidMk => "invalid_mk",
            LabError::InvalidLt => "invalid_lt",
            LabError::NoSuchRecord => "no_such_record",
            LabError::InvalidAt => "invalid_at",
            LabError::AtExpired => "at_expired",
            LabError::ServiceDisabled => "service_disabled",
            LabError::IntegrityFailure => "integrity_failure",
            LabError::DecryptFailure => "decrypt_failure",
            LabError::MalformedRecord => "malformed_record",
            LabError::UnknownAccount => "unknown_account",
            LabError::PhoneMismatch => "phone_mismatch",
            LabError::DuplicateGroup => "duplicate_group",
        }
    }
}
