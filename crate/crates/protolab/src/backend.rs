//! A mini-app back-end that holds the master key, indexes accounts by
//! phone number and hands out promotion rewards.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::platform::{EncryptionKey, Envelope, Platform, RecordKind, SensitiveRecord};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub phone: String,
    pub name: String,
    /// Platform user the number was registered by.
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginReply {
    pub openid: String,
    /// Set only when the back-end leaks the session key to its front-end.
    pub session_key: Option<EncryptionKey>,
}

pub struct Backend {
    pub app_id: String,
    master_key: String,
    /// Ask the platform to verify envelope signatures before decrypting.
    pub check_integrity: bool,
    /// Return the session key to the front-end on login.
    pub export_session_key: bool,
    /// Only accept a phone number from the user who registered it.
    pub bind_phone: bool,
    accounts: BTreeMap<String, Account>,
    sessions: BTreeMap<String, EncryptionKey>,
    seen_groups: BTreeSet<String>,
    rng: ChaCha8Rng,
}

impl Backend {
    pub fn new(app_id: &str, master_key: &str, seed: u64) -> Self {
        Backend {
            app_id: app_id.to_string(),
            master_key: master_key.to_string(),
            check_integrity: false,
            export_session_key: false,
            bind_phone: false,
            accounts: BTreeMap::new(),
            sessions: BTreeMap::new(),
            seen_groups: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn add_account(&mut self, phone: &str, name: &str, owner: &str) {
        self.accounts.insert(
            phone.to_string(),
            Account {
                phone: phone.to_string(),
                name: name.to_string(),
                owner: owner.to_string(),
            },
        );
    }

    pub fn session_key(&self, user_id: &str) -> Option<&EncryptionKey> {
        self.sessions.get(user_id)
    }

    /// Front-end login: trades the login token for the user's session key.
    pub fn login(&mut self, p: &mut Platform, code: &str) -> Result<LoginReply, LabError> {
        let s = p.ws_code2session(&self.app_id, &self.master_key, code)?;
        self.sessions.insert(s.ek.user_id.clone(), s.ek.clone());
        Ok(LoginReply {
            openid: s.openid,
            session_key: self.export_session_key.then_some(s.ek),
        })
    }

    fn refresh(&mut self, p: &mut Platform, user_id: &str) -> Result<EncryptionKey, LabError> {
        let lt = p.ws_login(user_id, &self.app_id)?;
        let s = p.ws_code2session(&self.app_id, &self.master_key, &lt.code)?;
        self.sessions.insert(user_id.to_string(), s.ek.clone());
        Ok(s.ek)
    }

    /// Verifies (when enabled) and decrypts an envelope submitted by the
    /// front-end. An expired session key is refreshed first; a decryption
    /// failure triggers one more refresh before giving up.
    pub fn consume(&mut self, p: &mut Platform, env: &Envelope, kind: RecordKind) -> Result<SensitiveRecord, LabError> {
        if self.check_integrity && !p.check_encrypted_data(env) {
            return Err(LabError::IntegrityFailure);
        }
        let user = env.user_id.as_str();
        let mut refreshed = false;
        let mut ek = match self.sessions.get(user) {
            Some(ek) if ek.valid_at(p.now()) => ek.clone(),
            _ => {
                refreshed = true;
                self.refresh(p, user)?
            }
        };
        let payload = loop {
            match env.open(&ek.key) {
                Ok(v) => break v,
                Err(_) if !refreshed => {
                    refreshed = true;
                    ek = self.refresh(p, user)?;
                }
                Err(e) => return Err(e),
            }
        };
        let record = SensitiveRecord { kind, payload };
        if !record.well_formed() {
            return Err(LabError::MalformedRecord);
        }
        Ok(record)
    }

    /// Phone-number login: the account is looked up by the decrypted number.
    pub fn phone_login(&mut self, p: &mut Platform, env: &Envelope) -> Result<Account, LabError> {
        let rec = self.consume(p, env, RecordKind::PhoneNumber)?;
        let phone = rec.payload["phoneNumber"].as_str().unwrap_or_default();
        let account = self.accounts.get(phone).ok_or(LabError::UnknownAccount)?;
        if self.bind_phone && account.owner != env.user_id {
            return Err(LabError::PhoneMismatch);
        }
        Ok(account.clone())
    }

    /// Points for the latest step count: one point per hundred steps.
    pub fn werun_award(&mut self, p: &mut Platform, env: &Envelope) -> Result<(u64, u64), LabError> {
        let rec = self.consume(p, env, RecordKind::WeRunData)?;
        let steps = latest_steps(&rec.payload).ok_or(LabError::MalformedRecord)?;
        Ok((steps, steps / 100))
    }

    /// A 1 to 10 cent red packet for every group not seen before.
    pub fn share_award(&mut self, p: &mut Platform, env: &Envelope) -> Result<u32, LabError> {
        let rec = self.consume(p, env, RecordKind::ShareInfo)?;
        let group = rec.payload["openGId"].as_str().unwrap_or_default().to_string();
        if !self.seen_groups.insert(group) {
            return Err(LabError::DuplicateGroup);
        }
        Ok(self.rng.random_range(1..=10))
    }
}

fn latest_steps(payload: &Value) -> Option<u64> {
    payload["stepInfoList"].as_array()?.last()?["step"].as_u64()
}
