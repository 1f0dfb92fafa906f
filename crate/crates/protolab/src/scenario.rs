//! Scenario scripts and the runner that plays them against a fresh
//! platform and back-end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::backend::Backend;
use crate::platform::{Envelope, Platform, PlatformConfig, RecordKind, DEFAULT_EK_TTL};
use crate::LabError;

pub const APP_ID: &str = "wx5d3a9c27e1f0b846";
pub const ATTACKER: &str = "attacker";
pub const VICTIM: &str = "victim";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Hijack,
    Replay,
    LtExpiry,
    LtReuse,
    AtExpiry,
    SameEk,
    ServiceTheft,
    Werun,
    Share,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Hijack,
        ScenarioKind::Replay,
        ScenarioKind::LtExpiry,
        ScenarioKind::LtReuse,
        ScenarioKind::AtExpiry,
        ScenarioKind::SameEk,
        ScenarioKind::ServiceTheft,
        ScenarioKind::Werun,
        ScenarioKind::Share,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Hijack => "hijack",
            ScenarioKind::Replay => "replay",
            ScenarioKind::LtExpiry => "lt_expiry",
            ScenarioKind::LtReuse => "lt_reuse",
            ScenarioKind::AtExpiry => "at_expiry",
            ScenarioKind::SameEk => "same_ek",
            ScenarioKind::ServiceTheft => "service_theft",
            ScenarioKind::Werun => "werun",
            ScenarioKind::Share => "share",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leak {
    #[default]
    None,
    /// The master key ships inside the package.
    Mk,
    /// The back-end returns the session key to its front-end.
    Ek,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Defense {
    #[default]
    None,
    Integrity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    #[default]
    Success,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub attacker_phone: String,
    pub victim_phone: String,
    /// Simulated seconds to wait; the default depends on the scenario.
    pub delay: Option<u64>,
    pub ek_ttl: u64,
    pub services: Vec<String>,
    pub service: String,
    pub n: u64,
    pub step: u64,
    pub groups: Option<Vec<String>>,
    pub group_count: usize,
    /// Back-end refuses a phone number registered by another user.
    pub bind_phone: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            attacker_phone: "137****7089".into(),
            victim_phone: "189****3630".into(),
            delay: None,
            ek_ttl: DEFAULT_EK_TTL,
            services: ["ocr.idCard", "ocr.bankCard", "img.superresolution", "jokebot"]
                .map(String::from)
                .to_vec(),
            service: "ocr.idCard".into(),
            n: 1_000_000,
            step: 100_000,
            groups: None,
            group_count: 10,
            bind_phone: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub leak: Leak,
    #[serde(default)]
    pub defense: Defense,
    #[serde(default)]
    pub expect: Outcome,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub params: Params,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    Unknown(String),
    #[error("missing \"scenario\" field")]
    Missing,
    #[error("bad scenario script: {0}")]
    Json(#[from] serde_json::Error),
}

impl Scenario {
    pub fn new(kind: ScenarioKind, leak: Leak, defense: Defense) -> Self {
        Scenario {
            scenario: kind,
            leak,
            defense,
            expect: Outcome::Success,
            seed: 0,
            params: Params::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let v: Value = serde_json::from_str(text)?;
        let name = v.get("scenario").and_then(Value::as_str).ok_or(ScenarioError::Missing)?;
        if !ScenarioKind::ALL.iter().any(|k| k.name() == name) {
            return Err(ScenarioError::Unknown(name.to_string()));
        }
        Ok(serde_json::from_value(v)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Platform,
    Frontend,
    Backend,
    Attacker,
    Victim,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: usize,
    pub t: u64,
    pub actor: Actor,
    pub op: String,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub scenario: ScenarioKind,
    pub outcome: Outcome,
    pub blocked_at: Option<String>,
    pub reason: Option<String>,
    /// Some attacker operation produced a plaintext record.
    pub attacker_decrypted: bool,
    pub result: Value,
    pub events: Vec<Event>,
}

impl Transcript {
    /// One JSON object per line; the last line carries the outcome.
    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn matches(&self, expect: Outcome) -> bool {
        self.outcome == expect
    }
}

struct Stop {
    op: String,
    reason: String,
}

fn stop(op: &str, reason: &str) -> Stop {
    Stop {
        op: op.to_string(),
        reason: reason.to_string(),
    }
}

struct Run<'a> {
    s: &'a Scenario,
    p: Platform,
    be: Backend,
    mk: String,
    attacker_mk: String,
    rng: ChaCha8Rng,
    events: Vec<Event>,
    decrypted: bool,
}

/// Plays `s` from a fresh world seeded by `s.seed`.
pub fn run(s: &Scenario) -> Transcript {
    let mut r = Run::new(s);
    let res = match s.scenario {
        ScenarioKind::Hijack => r.hijack(),
        ScenarioKind::Replay => r.replay(),
        ScenarioKind::LtExpiry => r.lt_expiry(),
        ScenarioKind::LtReuse => r.lt_reuse(),
        ScenarioKind::AtExpiry => r.at_expiry(),
        ScenarioKind::SameEk => r.same_ek(),
        ScenarioKind::ServiceTheft => r.service_theft(),
        ScenarioKind::Werun => r.werun(),
        ScenarioKind::Share => r.share(),
    };
    let (outcome, blocked_at, reason, result) = match res {
        Ok(v) => (Outcome::Success, None, None, v),
        Err(st) => (Outcome::Blocked, Some(st.op), Some(st.reason), Value::Null),
    };
    let summary = json!({
        "scenario": s.scenario.name(),
        "leak": s.leak,
        "defense": s.defense,
        "blocked_at": blocked_at,
        "reason": reason,
        "attacker_decrypted": r.decrypted,
        "result": result,
    });
    let outcome_name = match outcome {
        Outcome::Success => "success",
        Outcome::Blocked => "blocked",
    };
    r.push(Actor::Lab, "outcome", outcome_name, summary);
    Transcript {
        scenario: s.scenario,
        outcome,
        blocked_at,
        reason,
        attacker_decrypted: r.decrypted,
        result,
        events: r.events,
    }
}

impl<'a> Run<'a> {
    fn new(s: &'a Scenario) -> Self {
        let prm = &s.params;
        let mut p = Platform::new(
            s.seed,
            PlatformConfig {
                ek_ttl: prm.ek_ttl,
                integrity: s.defense == Defense::Integrity,
            },
        );
        let mk = hex::encode(p.random_bytes::<16>());
        p.register_app(APP_ID, &mk, prm.services.iter().cloned());
        p.register_user(ATTACKER, &prm.attacker_phone);
        p.register_user(VICTIM, &prm.victim_phone);

        let mut be = Backend::new(APP_ID, &mk, s.seed ^ 0x9e37_79b9_7f4a_7c15);
        be.check_integrity = s.defense == Defense::Integrity;
        be.export_session_key = s.leak == Leak::Ek;
        be.bind_phone = prm.bind_phone;
        be.add_account(&prm.victim_phone, "victim", VICTIM);
        be.add_account(&prm.attacker_phone, "attacker", ATTACKER);

        let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(1));
        let attacker_mk = match s.leak {
            Leak::Mk => mk.clone(),
            _ => hex::encode(rng.random::<[u8; 16]>()),
        };
        Run {
            s,
            p,
            be,
            mk,
            attacker_mk,
            rng,
            events: Vec::new(),
            decrypted: false,
        }
    }

    fn push(&mut self, actor: Actor, op: &str, outcome: &str, detail: Value) {
        self.events.push(Event {
            seq: self.events.len(),
            t: self.p.now(),
            actor,
            op: op.to_string(),
            outcome: outcome.to_string(),
            detail,
        });
    }

    fn note(&mut self, actor: Actor, op: &str, detail: Value) {
        self.push(actor, op, "ok", detail);
    }

    fn record<T>(
        &mut self,
        actor: Actor,
        op: &str,
        r: Result<T, LabError>,
        detail: impl FnOnce(&T) -> Value,
    ) -> Result<T, Stop> {
        match r {
            Ok(v) => {
                let d = detail(&v);
                self.push(actor, op, "ok", d);
                Ok(v)
            }
            Err(e) => {
                self.push(actor, op, e.code(), Value::Null);
                Err(stop(op, e.code()))
            }
        }
    }

    fn advance(&mut self, seconds: u64) {
        self.p.advance(seconds);
        self.note(Actor::Lab, "advance", json!({"seconds": seconds}));
    }

    fn login(&mut self, actor: Actor, user: &str) -> Result<String, Stop> {
        let r = self.p.ws_login(user, APP_ID);
        let lt = self.record(actor, "ws_login", r, |lt| json!({"lt": lt.code}))?;
        Ok(lt.code)
    }

    /// Front-end login through the back-end, as the app normally does.
    fn app_login(&mut self, actor: Actor, user: &str) -> Result<Option<[u8; 16]>, Stop> {
        let code = self.login(actor, user)?;
        let r = self.be.login(&mut self.p, &code);
        let reply = self.record(Actor::Backend, "ws_code2session", r, |r| {
            json!({"openid": r.openid, "session_key": r.session_key.as_ref().map(|k| k.base64())})
        })?;
        Ok(reply.session_key.map(|k| k.key))
    }

    /// The attacker's own session key, obtained through whatever leaks.
    fn attacker_ek(&mut self) -> Result<[u8; 16], Stop> {
        let exported = self.app_login(Actor::Attacker, ATTACKER)?;
        if let Some(ek) = exported {
            self.note(Actor::Attacker, "read_session_key", json!({"source": "back-end reply"}));
            return Ok(ek);
        }
        let code = self.login(Actor::Attacker, ATTACKER)?;
        let mk = self.attacker_mk.clone();
        let r = self.p.ws_code2session(APP_ID, &mk, &code);
        let s = self.record(Actor::Attacker, "ws_code2session", r, |s| json!({"openid": s.openid, "ek": s.ek.base64()}))?;
        Ok(s.ek.key)
    }

    fn fetch(&mut self, actor: Actor, user: &str, kind: RecordKind) -> Result<Envelope, Stop> {
        let r = self.p.ws_fetch_encrypted(user, APP_ID, kind);
        self.record(actor, "ws_fetch_encrypted", r, |e| json!({"kind": kind, "iv": e.iv}))
    }

    fn attacker_decrypt(&mut self, env: &Envelope, ek: &[u8; 16]) -> Result<Value, Stop> {
        let r = env.open(ek);
        let v = self.record(Actor::Attacker, "decrypt", r, |v| json!({"plaintext": v}))?;
        self.decrypted = true;
        Ok(v)
    }

    /// Re-encrypts a tampered payload under `ek` with a fresh IV. Any
    /// signature on the original is copied over unchanged.
    fn forge(&mut self, ek: &[u8; 16], original: &Envelope, payload: &Value) -> Envelope {
        let iv: [u8; 16] = self.rng.random();
        let mut env = Envelope::seal(ek, iv, &original.app_id, &original.user_id, payload);
        env.signature = original.signature.clone();
        self.note(Actor::Attacker, "encrypt", json!({"iv": env.iv}));
        env
    }

    fn hijack(&mut self) -> Result<Value, Stop> {
        let ek = self.attacker_ek()?;
        let env = self.fetch(Actor::Attacker, ATTACKER, RecordKind::PhoneNumber)?;
        let mut rec = self.attacker_decrypt(&env, &ek)?;
        let victim = self.s.params.victim_phone.clone();
        let from = rec["phoneNumber"].clone();
        rec["phoneNumber"] = json!(victim);
        self.note(Actor::Attacker, "tamper", json!({"phoneNumber": {"from": from, "to": victim}}));
        let forged = self.forge(&ek, &env, &rec);
        let r = self.be.phone_login(&mut self.p, &forged);
        let acct = self.record(Actor::Backend, "mb_consume", r, |a| json!({"account": a.name, "phone": a.phone}))?;
        if acct.owner != VICTIM {
            return Err(stop("mb_consume", "own_account"));
        }
        Ok(json!({"account": acct.name, "phone": acct.phone}))
    }

    fn replay(&mut self) -> Result<Value, Stop> {
        self.app_login(Actor::Victim, VICTIM)?;
        let env = self.fetch(Actor::Victim, VICTIM, RecordKind::PhoneNumber)?;
        let r = self.be.phone_login(&mut self.p, &env);
        self.record(Actor::Backend, "mb_consume", r, |a| json!({"account": a.name}))?;
        self.note(Actor::Attacker, "capture", json!({"iv": env.iv}));
        self.advance(self.s.params.delay.unwrap_or(301));
        self.note(Actor::Attacker, "replay", Value::Null);
        let r = self.be.phone_login(&mut self.p, &env);
        let acct = self.record(Actor::Backend, "mb_consume", r, |a| json!({"account": a.name}))?;
        Ok(json!({"account": acct.name}))
    }

    fn lt_expiry(&mut self) -> Result<Value, Stop> {
        let code = self.login(Actor::Victim, VICTIM)?;
        self.advance(self.s.params.delay.unwrap_or(301));
        let r = self.be.login(&mut self.p, &code);
        let reply = self.record(Actor::Backend, "ws_code2session", r, |r| json!({"openid": r.openid}))?;
        Ok(json!({"openid": reply.openid}))
    }

    fn lt_reuse(&mut self) -> Result<Value, Stop> {
        let code = self.login(Actor::Victim, VICTIM)?;
        let r = self.be.login(&mut self.p, &code);
        self.record(Actor::Backend, "ws_code2session", r, |r| json!({"openid": r.openid}))?;
        if let Some(d) = self.s.params.delay {
            self.advance(d);
        }
        self.note(Actor::Attacker, "resubmit_lt", json!({"lt": code}));
        let r = self.be.login(&mut self.p, &code);
        let reply = self.record(Actor::Backend, "ws_code2session", r, |r| json!({"openid": r.openid}))?;
        Ok(json!({"openid": reply.openid}))
    }

    fn at_expiry(&mut self) -> Result<Value, Stop> {
        let mk = self.mk.clone();
        let service = self.s.params.service.clone();
        let t0 = self.p.now();
        let r = self.p.ws_get_access_token(APP_ID, &mk);
        let at = self.record(Actor::Backend, "ws_get_access_token", r, |a| json!({"expires_in": 7200, "at": a.hex()}))?;
        self.advance(10);
        let r = self.p.ws_get_access_token(APP_ID, &mk);
        let again = self.record(Actor::Backend, "ws_get_access_token", r, |a| json!({"at": a.hex()}))?;
        let same = again.token == at.token;
        self.note(Actor::Lab, "compare_at", json!({"same": same}));
        let r = self.p.ws_invoke_service(&at.token, &service, &Value::Null);
        self.record(Actor::Backend, "ws_invoke_service", r, |_| json!({"service": service}))?;
        let target = t0 + self.s.params.delay.unwrap_or(7201);
        let wait = target.saturating_sub(self.p.now());
        self.advance(wait);
        let r = self.p.ws_invoke_service(&at.token, &service, &Value::Null);
        self.record(Actor::Backend, "ws_invoke_service", r, |_| json!({"service": service}))?;
        Ok(json!({"same_at": same}))
    }

    fn same_ek(&mut self) -> Result<Value, Stop> {
        self.app_login(Actor::Attacker, ATTACKER)?;
        let backend_ek = self.be.session_key(ATTACKER).expect("logged in").key;
        self.advance(self.s.params.delay.unwrap_or(60));
        let code = self.login(Actor::Attacker, ATTACKER)?;
        let mk = self.attacker_mk.clone();
        let r = self.p.ws_code2session(APP_ID, &mk, &code);
        let s = self.record(Actor::Attacker, "ws_code2session", r, |s| json!({"ek": s.ek.base64()}))?;
        let same = s.ek.key == backend_ek;
        self.note(Actor::Lab, "compare_ek", json!({"same": same}));
        if !same {
            return Err(stop("compare_ek", "different_keys"));
        }
        Ok(json!({"ek": s.ek.base64()}))
    }

    fn service_theft(&mut self) -> Result<Value, Stop> {
        let mk = self.attacker_mk.clone();
        let service = self.s.params.service.clone();
        let n = self.s.params.n;
        let r = self.p.ws_get_access_token(APP_ID, &mk);
        let at = self.record(Actor::Attacker, "ws_get_access_token", r, |a| json!({"at": a.hex()}))?;
        let payload = json!({"img_url": "https://img.example/card.jpg"});
        let mut failure = None;
        let mut done = 0u64;
        while done < n {
            if let Err(e) = self.p.ws_invoke_service(&at.token, &service, &payload) {
                failure = Some(e);
                break;
            }
            done += 1;
        }
        let detail = json!({"service": service, "requested": n, "invoked": done});
        match failure {
            Some(e) => {
                self.push(Actor::Attacker, "ws_invoke_service", e.code(), detail);
                Err(stop("ws_invoke_service", e.code()))
            }
            None => {
                self.note(Actor::Attacker, "ws_invoke_service", detail);
                let price = self
                    .p
                    .catalog()
                    .iter()
                    .find(|c| c.name == service)
                    .map_or(0.0, |c| c.price_per_million);
                let cost = self.p.cost(APP_ID);
                self.note(Actor::Platform, "bill", json!({"app_id": APP_ID, "cost_usd": cost}));
                Ok(json!({"service": service, "n": n, "price_per_million": price, "cost_usd": cost}))
            }
        }
    }

    fn werun(&mut self) -> Result<Value, Stop> {
        let ek = self.attacker_ek()?;
        let env = self.fetch(Actor::Attacker, ATTACKER, RecordKind::WeRunData)?;
        let mut rec = self.attacker_decrypt(&env, &ek)?;
        let step = self.s.params.step;
        let list = rec["stepInfoList"].as_array_mut().ok_or_else(|| stop("tamper", "malformed_record"))?;
        let last = list.last_mut().ok_or_else(|| stop("tamper", "malformed_record"))?;
        let from = last["step"].clone();
        last["step"] = json!(step);
        self.note(Actor::Attacker, "tamper", json!({"step": {"from": from, "to": step}}));
        let forged = self.forge(&ek, &env, &rec);
        let r = self.be.werun_award(&mut self.p, &forged);
        let (steps, points) = self.record(Actor::Backend, "mb_consume", r, |&(s, p)| json!({"step": s, "points": p}))?;
        Ok(json!({"step": steps, "points": points}))
    }

    fn share(&mut self) -> Result<Value, Stop> {
        let ek = self.attacker_ek()?;
        let env = self.fetch(Actor::Attacker, ATTACKER, RecordKind::ShareInfo)?;
        self.attacker_decrypt(&env, &ek)?;
        let groups = match &self.s.params.groups {
            Some(g) => g.clone(),
            None => (0..self.s.params.group_count)
                .map(|_| format!("G{}", hex::encode(self.rng.random::<[u8; 13]>())))
                .collect(),
        };
        let mut awards = Vec::new();
        let mut denied = 0usize;
        for g in groups {
            let forged = self.forge(&ek, &env, &json!({"openGId": g}));
            match self.be.share_award(&mut self.p, &forged) {
                Ok(cents) => {
                    self.note(Actor::Backend, "mb_consume", json!({"openGId": g, "cents": cents}));
                    awards.push(cents);
                }
                Err(LabError::DuplicateGroup) => {
                    self.push(Actor::Backend, "mb_consume", LabError::DuplicateGroup.code(), json!({"openGId": g}));
                    denied += 1;
                }
                Err(e) => {
                    self.push(Actor::Backend, "mb_consume", e.code(), json!({"openGId": g}));
                    return Err(stop("mb_consume", e.code()));
                }
            }
        }
        if awards.is_empty() {
            return Err(stop("mb_consume", "no_award"));
        }
        let total: u32 = awards.iter().sum();
        Ok(json!({"packets": awards.len(), "awards": awards, "total_cents": total, "denied": denied}))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_defaults_and_unknown() {
        let s = Scenario::from_json(r#"{"scenario":"hijack","leak":"mk","expect":"success"}"#).unwrap();
        assert_eq!(s.leak, Leak::Mk);
        assert_eq!(s.defense, Defense::None);
        assert_eq!(s.params.victim_phone, "189****3630");
        assert!(matches!(
            Scenario::from_json(r#"{"scenario":"teleport"}"#),
            Err(ScenarioError::Unknown(_))
        ));
        assert!(matches!(Scenario::from_json("{}"), Err(ScenarioError::Missing)));
    }

    #[test]
    fn hijack_reaches_victim() {
        let t = run(&Scenario::new(ScenarioKind::Hijack, Leak::Mk, Defense::None));
        assert_eq!(t.outcome, Outcome::Success, "{}", t.jsonl());
        assert_eq!(t.result["account"], "victim");
    }

    #[test]
    fn phone_binding_stops_hijack() {
        let mut s = Scenario::new(ScenarioKind::Hijack, Leak::Mk, Defense::None);
        s.params.bind_phone = true;
        let t = run(&s);
        assert_eq!(t.reason.as_deref(), Some("phone_mismatch"));
    }
}
