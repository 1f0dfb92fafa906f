//! Mock platform: `/cgi-bin/token`, `/sns/jscode2session` and the
//! alternate `/oauth/2.0/token`, backed by the protocol lab's platform.

use std::collections::{HashMap, VecDeque};
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Query, State};
use axum::routing::get;
use axum::{Json, Router};
use coffeescan_protolab::platform::{Platform, PlatformConfig};
use coffeescan_protolab::LabError;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::registry::SeedFile;
use crate::{KeyvalError, ERR_INVALID_APPID, ERR_INVALID_CODE, ERR_INVALID_GRANT, ERR_INVALID_SECRET, ERR_RATE_LIMITED};

/// Server time in whole seconds.
#[derive(Debug, Clone)]
pub enum Clock {
    System(Instant),
    Manual(Arc<AtomicU64>),
}

impl Clock {
    pub fn system() -> Self {
        Clock::System(Instant::now())
    }

    pub fn manual() -> Self {
        Clock::Manual(Arc::new(AtomicU64::new(0)))
    }

    pub fn now(&self) -> u64 {
        match self {
            Clock::System(t0) => t0.elapsed().as_secs(),
            Clock::Manual(t) => t.load(Ordering::SeqCst),
        }
    }

    /// Moves a manual clock forward; no effect on the system clock.
    pub fn advance(&self, seconds: u64) {
        if let Clock::Manual(t) = self {
            t.fetch_add(seconds, Ordering::SeqCst);
        }
    }
}

/// At most `max` endpoint requests in any sliding `window`; the rest get 45011.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerLimit {
    pub max: u32,
    pub window: Duration,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub seed: SeedFile,
    pub clock: Clock,
    pub limit: Option<ServerLimit>,
}

impl ServerConfig {
    pub fn new(seed: SeedFile) -> Self {
        ServerConfig {
            seed,
            clock: Clock::system(),
            limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestRecord {
    pub at: Instant,
    pub path: String,
    pub app_id: String,
    pub credential: String,
}

pub struct MockState {
    platform: Mutex<Platform>,
    clock: Clock,
    limit: Option<ServerLimit>,
    recent: Mutex<VecDeque<Instant>>,
    log: Mutex<Vec<RequestRecord>>,
}

type Params = Query<HashMap<String, String>>;

fn error_body(errcode: i64, errmsg: &str) -> Json<Value> {
    Json(json!({"errcode": errcode, "errmsg": errmsg}))
}

fn lab_error_body(e: LabError) -> Json<Value> {
    match e {
        LabError::UnknownApp => error_body(ERR_INVALID_APPID, "invalid appid"),
        LabError::InvalidMk => error_body(ERR_INVALID_SECRET, "invalid appsecret"),
        LabError::InvalidLt => error_body(ERR_INVALID_CODE, "invalid code"),
        other => error_body(-1, &other.to_string()),
    }
}

impl MockState {
    pub fn new(cfg: ServerConfig) -> Self {
        let mut p = Platform::new(cfg.seed.seed, PlatformConfig::default());
        for r in &cfg.seed.registrations {
            p.register_app(&r.app_id, &r.master_key, r.enabled_services.iter().cloned());
        }
        for u in &cfg.seed.users {
            p.register_user(&u.user_id, &u.phone);
        }
        MockState {
            platform: Mutex::new(p),
            clock: cfg.clock,
            limit: cfg.limit,
            recent: Mutex::new(VecDeque::new()),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    /// Every request that reached an endpoint, in arrival order.
    pub fn requests(&self) -> Vec<RequestRecord> {
        self.log.lock().unwrap().clone()
    }

    /// Logs the request and applies the server-side quota.
    fn admit(&self, path: &str, app_id: &str, credential: &str) -> bool {
        let now = Instant::now();
        self.log.lock().unwrap().push(RequestRecord {
            at: now,
            path: path.to_string(),
            app_id: app_id.to_string(),
            credential: credential.to_string(),
        });
        let Some(limit) = self.limit else {
            return true;
        };
        let mut recent = self.recent.lock().unwrap();
        while recent.front().is_some_and(|t| now.duration_since(*t) >= limit.window) {
            recent.pop_front();
        }
        if recent.len() >= limit.max as usize {
            return false;
        }
        recent.push_back(now);
        true
    }

    fn with_platform<T>(&self, f: impl FnOnce(&mut Platform) -> T) -> T {
        let mut p = self.platform.lock().unwrap();
        p.set_now(self.clock.now());
        f(&mut p)
    }

    pub fn token(&self, grant_type: &str, app_id: &str, secret: &str) -> Value {
        if !self.admit("/cgi-bin/token", app_id, secret) {
            return error_body(ERR_RATE_LIMITED, "api minute-quota reach limit").0;
        }
        if grant_type != "client_credential" {
            return error_body(ERR_INVALID_GRANT, "invalid grant_type").0;
        }
        self.issue_token(app_id, secret)
    }

    pub fn oauth_token(&self, grant_type: &str, client_id: &str, client_secret: &str) -> Value {
        if !self.admit("/oauth/2.0/token", client_id, client_secret) {
            return error_body(ERR_RATE_LIMITED, "api minute-quota reach limit").0;
        }
        if grant_type != "client_credentials" {
            return error_body(ERR_INVALID_GRANT, "invalid grant_type").0;
        }
        self.issue_token(client_id, client_secret)
    }

    fn issue_token(&self, app_id: &str, secret: &str) -> Value {
        self.with_platform(|p| match p.ws_get_access_token(app_id, secret) {
            Ok(at) => json!({"access_token": at.hex(), "expires_in": at.expires_in(p.now())}),
            Err(e) => lab_error_body(e).0,
        })
    }

    pub fn jscode2session(&self, app_id: &str, secret: &str, js_code: &str, grant_type: &str) -> Value {
        if !self.admit("/sns/jscode2session", app_id, secret) {
            return error_body(ERR_RATE_LIMITED, "api minute-quota reach limit").0;
        }
        if grant_type != "authorization_code" {
            return error_body(ERR_INVALID_GRANT, "invalid grant_type").0;
        }
        self.with_platform(|p| match p.ws_code2session(app_id, secret, js_code) {
            Ok(s) => json!({"openid": s.openid, "session_key": s.ek.base64()}),
            Err(e) => lab_error_body(e).0,
        })
    }

    /// Fixture helper standing in for the client-side login call.
    pub fn login(&self, user_id: &str, app_id: &str) -> Value {
        self.with_platform(|p| match p.ws_login(user_id, app_id) {
            Ok(lt) => json!({"code": lt.code}),
            Err(e) => error_body(-1, &e.to_string()).0,
        })
    }
}

fn param<'a>(q: &'a HashMap<String, String>, k: &str) -> &'a str {
    q.get(k).map_or("", String::as_str)
}

async fn token(State(s): State<Arc<MockState>>, Query(q): Params) -> Json<Value> {
    Json(s.token(param(&q, "grant_type"), param(&q, "appid"), param(&q, "secret")))
}

async fn oauth_token(State(s): State<Arc<MockState>>, Query(q): Params) -> Json<Value> {
    Json(s.oauth_token(param(&q, "grant_type"), param(&q, "client_id"), param(&q, "client_secret")))
}

async fn jscode2session(State(s): State<Arc<MockState>>, Query(q): Params) -> Json<Value> {
    Json(s.jscode2session(
        param(&q, "appid"),
        param(&q, "secret"),
        param(&q, "js_code"),
        param(&q, "grant_type"),
    ))
}

async fn login(State(s): State<Arc<MockState>>, Query(q): Params) -> Json<Value> {
    Json(s.login(param(&q, "user_id"), param(&q, "appid")))
}

pub fn router(state: Arc<MockState>) -> Router {
    Router::new()
        .route("/cgi-bin/token", get(token))
        .route("/sns/jscode2session", get(jscode2session))
        .route("/oauth/2.0/token", get(oauth_token))
        .route("/lab/login", get(login))
        .with_state(state)
}

pub async fn bind(addr: &str) -> Result<TcpListener, KeyvalError> {
    TcpListener::bind(addr).await.map_err(|source| KeyvalError::Bind {
        addr: addr.to_string(),
        source,
    })
}

/// Serves until `signal` resolves, then lets in-flight requests finish.
pub async fn serve_until<F>(listener: TcpListener, state: Arc<MockState>, signal: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state)).with_graceful_shutdown(signal).await
}

/// A server running on a background task.
pub struct MockServer {
    pub addr: SocketAddr,
    state: Arc<MockState>,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl MockServer {
    pub async fn start(addr: &str, cfg: ServerConfig) -> Result<Self, KeyvalError> {
        let listener = bind(addr).await?;
        let addr = listener.local_addr().map_err(|source| KeyvalError::Bind {
            addr: addr.to_string(),
            source,
        })?;
        let state = Arc::new(MockState::new(cfg));
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(serve_until(listener, state.clone(), async {
            let _ = rx.await;
        }));
        Ok(MockServer {
            addr,
            state,
            stop: Some(tx),
            task,
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn state(&self) -> &Arc<MockState> {
        &self.state
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        self.task.await.expect("server task panicked")
    }
}
