use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;
use tokio::task::JoinSet;

use crate::limiter::{Limiter, RatePolicy};
use crate::{KeyvalError, Verdict, ERR_RATE_LIMITED};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Flavor {
    #[default]
    Wechat,
    /// `/oauth/2.0/token` with `client_id`/`client_secret`.
    Baidu,
}

enum Attempt {
    Done(Verdict),
    RateLimited,
}

pub struct Validator {
    http: reqwest::Client,
    endpoint: String,
    flavor: Flavor,
    limiter: Limiter,
    backoff: Duration,
}

impl Validator {
    pub fn new(endpoint: &str, flavor: Flavor, policy: RatePolicy) -> Result<Self, KeyvalError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()?;
        Ok(Validator {
            http,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            flavor,
            limiter: Limiter::new(policy),
            backoff: Duration::from_secs(2),
        })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Result<Self, KeyvalError> {
        self.http = reqwest::Client::builder().timeout(timeout).build()?;
        Ok(self)
    }

    pub fn limiter(&self) -> &Limiter {
        &self.limiter
    }

    async fn attempt(&self, app_id: &str, candidate: &str) -> Attempt {
        let _permit = self.limiter.acquire().await;
        let req = match self.flavor {
            Flavor::Wechat => self.http.get(format!("{}/cgi-bin/token", self.endpoint)).query(&[
                ("grant_type", "client_credential"),
                ("appid", app_id),
                ("secret", candidate),
            ]),
            Flavor::Baidu => self.http.get(format!("{}/oauth/2.0/token", self.endpoint)).query(&[
                ("grant_type", "client_credentials"),
                ("client_id", app_id),
                ("client_secret", candidate),
            ]),
        };
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Done(indeterminate(format!("transport: {e}"))),
        };
        let status = resp.status();
        if status.as_u16() == 429 {
            return Attempt::RateLimited;
        }
        if !status.is_success() {
            return Attempt::Done(indeterminate(format!("http {status}")));
        }
        let body: Value = match resp.json().await {
            Ok(v) => v,
            Err(e) => return Attempt::Done(indeterminate(format!("body: {e}"))),
        };
        classify(&body)
    }

    /// Feeds one candidate to the token endpoint. A rate-limit answer is
    /// retried once after the backoff.
    pub async fn validate(&self, app_id: &str, candidate: &str) -> Verdict {
        for round in 0..2 {
            match self.attempt(app_id, candidate).await {
                Attempt::Done(v) => return v,
                Attempt::RateLimited if round == 0 => tokio::time::sleep(self.backoff).await,
                Attempt::RateLimited => {}
            }
        }
        indeterminate("rate limited".to_string())
    }

    /// Validates every pair concurrently (bounded by the limiter);
    /// verdicts come back in input order.
    pub async fn validate_all(self: &Arc<Self>, pairs: Vec<(String, String)>) -> Vec<Verdict> {
        let mut set = JoinSet::new();
        for (i, (app, cand)) in pairs.into_iter().enumerate() {
            let me = Arc::clone(self);
            set.spawn(async move { (i, me.validate(&app, &cand).await) });
        }
        let mut out: Vec<Option<Verdict>> = vec![None; set.len()];
        while let Some(joined) = set.join_next().await {
            let (i, v) = joined.expect("validation task panicked");
            out[i] = Some(v);
        }
        out.into_iter().map(|v| v.expect("every task reported")).collect()
    }
}

fn indeterminate(reason: String) -> Verdict {
    Verdict::Indeterminate { reason }
}

fn classify(body: &Value) -> Attempt {
    if let Some(tok) = body.get("access_token").and_then(Value::as_str) {
        if tok.len() == 128 && tok.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Attempt::Done(Verdict::Valid {
                access_token: tok.to_string(),
            });
        }
        return Attempt::Done(indeterminate("malformed access_token".into()));
    }
    match body.get("errcode").and_then(Value::as_i64) {
        Some(ERR_RATE_LIMITED) => Attempt::RateLimited,
        Some(code) => Attempt::Done(Verdict::Invalid { errcode: code }),
        None => Attempt::Done(indeterminate("unrecognized body".into())),
    }
}
