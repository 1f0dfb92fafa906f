//! The platform actor: issues login tokens, session keys and access
//! tokens, serves encrypted user data and bills paid services.

use std::collections::{BTreeMap, BTreeSet};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::crypto;
use crate::LabError;

pub const LOGIN_TOKEN_TTL: u64 = 300;
pub const DEFAULT_EK_TTL: u64 = 300;
pub const ACCESS_TOKEN_TTL: u64 = 7200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecordKind {
    PhoneNumber,
    UserInfo,
    WeRunData,
    ShareInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveRecord {
    pub kind: RecordKind,
    pub payload: Value,
}

impl SensitiveRecord {
    pub fn keys(kind: RecordKind) -> &'static [&'static str] {
        match kind {
            RecordKind::PhoneNumber => &["phoneNumber"],
            RecordKind::UserInfo => &["nickName", "gender", "avatarUrl"],
            RecordKind::WeRunData => &["stepInfoList"],
            RecordKind::ShareInfo => &["openGId"],
        }
    }

    /// Whether the payload carries exactly the keys fixed for its kind.
    pub fn well_formed(&self) -> bool {
        let Some(obj) = self.payload.as_object() else {
            return false;
        };
        let want: BTreeSet<&str> = Self::keys(self.kind).iter().copied().collect();
        let have: BTreeSet<&str> = obj.keys().map(String::as_str).collect();
        want == have
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginToken {
    pub code: String,
    pub issued_at: u64,
    pub user_id: String,
    pub app_id: String,
    pub consumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptionKey {
    pub key: [u8; crypto::KEY_LEN],
    pub issued_at: u64,
    pub user_id: String,
    pub app_id: String,
    pub ttl_seconds: u64,
}

impl EncryptionKey {
    pub fn valid_at(&self, now: u64) -> bool {
        now.saturating_sub(self.issued_at) < self.ttl_seconds
    }

    pub fn base64(&self) -> String {
        B64.encode(self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessToken {
    pub token: Vec<u8>,
    pub issued_at: u64,
    pub app_id: String,
}

impl AccessToken {
    pub fn valid_at(&self, now: u64) -> bool {
        now.saturating_sub(self.issued_at) < ACCESS_TOKEN_TTL
    }

    pub fn hex(&self) -> String {
        hex::encode(&self.token)
    }

    pub fn expires_in(&self, now: u64) -> u64 {
        ACCESS_TOKEN_TTL.saturating_sub(now.saturating_sub(self.issued_at))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub encrypted_data: String,
    pub iv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    pub app_id: String,
    pub user_id: String,
}

impl Envelope {
    /// Encrypts `record` under `ek` with the given IV; unsigned.
    pub fn seal(ek: &[u8; 16], iv: [u8; 16], app_id: &str, user_id: &str, record: &Value) -> Self {
        let ct = crypto::encrypt(ek, &iv, record.to_string().as_bytes());
        Envelope {
            encrypted_data: B64.encode(ct),
            iv: B64.encode(iv),
            signature: None,
            app_id: app_id.to_string(),
            user_id: user_id.to_string(),
        }
    }

    pub fn ciphertext(&self) -> Option<Vec<u8>> {
        B64.decode(&self.encrypted_data).ok()
    }

    pub fn iv_bytes(&self) -> Option<[u8; 16]> {
        B64.decode(&self.iv).ok()?.try_into().ok()
    }

    /// Decrypts and parses the JSON payload.
    pub fn open(&self, ek: &[u8; 16]) -> Result<Value, LabError> {
        let ct = self.ciphertext().ok_or(LabError::DecryptFailure)?;
        let iv = self.iv_bytes().ok_or(LabError::DecryptFailure)?;
        let pt = crypto::decrypt(ek, &iv, &ct).map_err(|_| LabError::DecryptFailure)?;
        let text = String::from_utf8(pt).map_err(|_| LabError::DecryptFailure)?;
        serde_json::from_str(&text).map_err(|_| LabError::DecryptFailure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCatalogEntry {
    pub name: String,
    pub price_per_million: f64,
    pub free: bool,
}

/// Paid and free platform services, prices in USD per million calls.
pub fn default_catalog() -> Vec<ServiceCatalogEntry> {
    [
        ("ocr.idCard", 1000.0),
        ("ocr.bankCard", 1000.0),
        ("ocr.driving", 1000.0),
        ("ocr.businessLicense", 1000.0),
        ("img.superresolution", 500.0),
        ("geoc", 0.0),
        ("jokebot", 0.0),
    ]
    .into_iter()
    .map(|(name, price)| ServiceCatalogEntry {
        name: name.to_string(),
        price_per_million: price,
        free: price == 0.0,
    })
    .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BillingLedger {
    pub counts: BTreeMap<String, u64>,
}

impl BillingLedger {
    /// `Σ counts × price_per_million / 1e6`, in USD.
    pub fn cost(&self, catalog: &[ServiceCatalogEntry]) -> f64 {
        self.counts
            .iter()
            .map(|(name, n)| {
                let price = catalog
                    .iter()
                    .find(|s| &s.name == name)
                    .map_or(0.0, |s| s.price_per_million);
                *n as f64 * price / 1e6
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
struct App {
    master_key: String,
    services: BTreeSet<String>,
    access_token: Option<AccessToken>,
    ledger: BillingLedger,
}

#[derive(Debug, Clone)]
struct User {
    records: BTreeMap<RecordKind, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub ek_ttl: u64,
    /// Sign every envelope so back-ends can check it.
    pub integrity: bool,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            ek_ttl: DEFAULT_EK_TTL,
            integrity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub openid: String,
    pub ek: EncryptionKey,
}

pub struct Platform {
    pub config: PlatformConfig,
    now: u64,
    rng: ChaCha8Rng,
    integrity_key: [u8; 32],
    apps: BTreeMap<String, App>,
    users: BTreeMap<String, User>,
    login_tokens: BTreeMap<String, LoginToken>,
    keys: BTreeMap<(String, String), EncryptionKey>,
    catalog: Vec<ServiceCatalogEntry>,
}

/// `o` followed by 27 hex characters derived from the app and user.
pub fn openid(app_id: &str, user_id: &str) -> String {
    let digest = Sha256::digest(format!("{app_id}\0{user_id}"));
    format!("o{}", &hex::encode(digest)[..27])
}

impl Platform {
    pub fn new(seed: u64, config: PlatformConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut integrity_key = [0u8; 32];
        rng.fill_bytes(&mut integrity_key);
        Platform {
            config,
            now: 0,
            rng,
            integrity_key,
            apps: BTreeMap::new(),
            users: BTreeMap::new(),
            login_tokens: BTreeMap::new(),
            keys: BTreeMap::new(),
            catalog: default_catalog(),
        }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn advance(&mut self, seconds: u64) {
        self.now += seconds;
    }

    /// Moves the clock forward to `t`; never backwards.
    pub fn set_now(&mut self, t: u64) {
        self.now = self.now.max(t);
    }

    pub fn catalog(&self) -> &[ServiceCatalogEntry] {
        &self.catalog
    }

    pub fn register_app<I, S>(&mut self, app_id: &str, master_key: &str, services: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.apps.insert(
            app_id.to_string(),
            App {
                master_key: master_key.to_string(),
                services: services.into_iter().map(Into::into).collect(),
                access_token: None,
                ledger: BillingLedger::default(),
            },
        );
    }

    pub fn is_registered(&self, app_id: &str) -> bool {
        self.apps.contains_key(app_id)
    }

    /// Registers a user with one record of every kind.
    pub fn register_user(&mut self, user_id: &str, phone: &str) {
        let mut records = BTreeMap::new();
        records.insert(RecordKind::PhoneNumber, json!({"phoneNumber": phone}));
        records.insert(
            RecordKind::UserInfo,
            json!({"nickName": user_id, "gender": 0, "avatarUrl": format!("https://img.example/{user_id}.png")}),
        );
        records.insert(
            RecordKind::WeRunData,
            json!({"stepInfoList": [{"timestamp": 1_600_000_000u64, "step": 4_213}]}),
        );
        records.insert(RecordKind::ShareInfo, json!({"openGId": format!("G{}", &openid("group", user_id)[1..])}));
        self.users.insert(user_id.to_string(), User { records });
    }

    pub fn record(&self, user_id: &str, kind: RecordKind) -> Option<&Value> {
        self.users.get(user_id)?.records.get(&kind)
    }

    fn check_mk(&self, app_id: &str, mk: &str) -> Result<&App, LabError> {
        let app = self.apps.get(app_id).ok_or(LabError::UnknownApp)?;
        if app.master_key != mk {
            return Err(LabError::InvalidMk);
        }
        Ok(app)
    }

    pub fn ws_login(&mut self, user_id: &str, app_id: &str) -> Result<LoginToken, LabError> {
        if !self.users.contains_key(user_id) {
            return Err(LabError::UnknownUser);
        }
        if !self.apps.contains_key(app_id) {
            return Err(LabError::UnknownApp);
        }
        let mut raw = [0u8; 16];
        self.rng.fill_bytes(&mut raw);
        let lt = LoginToken {
            code: hex::encode(raw),
            issued_at: self.now,
            user_id: user_id.to_string(),
            app_id: app_id.to_string(),
            consumed: false,
        };
        self.login_tokens.insert(lt.code.clone(), lt.clone());
        Ok(lt)
    }

    /// Exchanges a login token for the user's current session key. The
    /// token is consumed; the key is reused until its ttl runs out.
    pub fn ws_code2session(&mut self, app_id: &str, mk: &str, code: &str) -> Result<Session, LabError> {
        self.check_mk(app_id, mk)?;
        let now = self.now;
        let lt = self.login_tokens.get_mut(code).ok_or(LabError::InvalidLt)?;
        if lt.consumed || lt.app_id != app_id || now.saturating_sub(lt.issued_at) >= LOGIN_TOKEN_TTL {
            return Err(LabError::InvalidLt);
        }
        lt.consumed = true;
        let user_id = lt.user_id.clone();
        let ek = self.current_ek(app_id, &user_id);
        Ok(Session {
            openid: openid(app_id, &user_id),
            ek,
        })
    }

    fn current_ek(&mut self, app_id: &str, user_id: &str) -> EncryptionKey {
        let k = (app_id.to_string(), user_id.to_string());
        match self.keys.get(&k) {
            Some(ek) if ek.valid_at(self.now) => ek.clone(),
            _ => {
                let mut key = [0u8; 16];
                self.rng.fill_bytes(&mut key);
                let ek = EncryptionKey {
                    key,
                    issued_at: self.now,
                    user_id: user_id.to_string(),
                    app_id: app_id.to_string(),
                    ttl_seconds: self.config.ek_ttl,
                };
                self.keys.insert(k, ek.clone());
                ek
            }
        }
    }

    pub fn ws_fetch_encrypted(&mut self, user_id: &str, app_id: &str, kind: RecordKind) -> Result<Envelope, LabError> {
        if !self.apps.contains_key(app_id) {
            return Err(LabError::UnknownApp);
        }
        let payload = self
            .record(user_id, kind)
            .cloned()
            .ok_or(LabError::NoSuchRecord)?;
        let ek = self.current_ek(app_id, user_id);
        let iv: [u8; 16] = self.rng.random();
        let mut env = Envelope::seal(&ek.key, iv, app_id, user_id, &payload);
        if self.config.integrity {
            let ct = env.ciphertext().expect("fresh ciphertext");
            let sig = crypto::sign(&self.integrity_key, app_id, &iv, &ct);
            env.signature = Some(B64.encode(sig));
        }
        Ok(env)
    }

    /// Whether `env` carries a valid platform signature.
    pub fn check_encrypted_data(&self, env: &Envelope) -> bool {
        let (Some(ct), Some(iv), Some(sig)) = (
            env.ciphertext(),
            env.iv_bytes(),
            env.signature.as_ref().and_then(|s| B64.decode(s).ok()),
        ) else {
            return false;
        };
        crypto::verify(&self.integrity_key, &env.app_id, &iv, &ct, &sig)
    }

    /// Returns the app's access token, minting a new one once the old one
    /// has expired.
    pub fn ws_get_access_token(&mut self, app_id: &str, mk: &str) -> Result<AccessToken, LabError> {
        self.check_mk(app_id, mk)?;
        let now = self.now;
        if let Some(at) = self.apps[app_id].access_token.as_ref().filter(|t| t.valid_at(now)) {
            return Ok(at.clone());
        }
        let mut token = vec![0u8; 64];
        self.rng.fill_bytes(&mut token);
        let at = AccessToken {
            token,
            issued_at: now,
            app_id: app_id.to_string(),
        };
        self.apps.get_mut(app_id).expect("checked above").access_token = Some(at.clone());
        Ok(at)
    }

    pub fn ws_invoke_service(&mut self, token: &[u8], service: &str, _payload: &Value) -> Result<Value, LabError> {
        let now = self.now;
        let (app_id, app) = self
            .apps
            .iter_mut()
            .find(|(_, a)| a.access_token.as_ref().is_some_and(|t| t.token == token))
            .ok_or(LabError::InvalidAt)?;
        if !app.access_token.as_ref().is_some_and(|t| t.valid_at(now)) {
            return Err(LabError::AtExpired);
        }
        if !app.services.contains(service) {
            return Err(LabError::ServiceDisabled);
        }
        if !self.catalog.iter().any(|s| s.name == service) {
            return Err(LabError::ServiceDisabled);
        }
        match app.ledger.counts.get_mut(service) {
            Some(n) => *n += 1,
            None => {
                app.ledger.counts.insert(service.to_string(), 1);
            }
        }
        Ok(json!({"errcode": 0, "service": service, "app_id": app_id}))
    }

    pub fn ledger(&self, app_id: &str) -> Option<&BillingLedger> {
        self.apps.get(app_id).map(|a| &a.ledger)
    }

    pub fn cost(&self, app_id: &str) -> f64 {
        self.ledger(app_id).map_or(0.0, |l| l.cost(&self.catalog))
    }

    pub fn random_bytes<const N: usize>(&mut self) -> [u8; N] {
        self.rng.random()
    }
}
