//! The HTTP surface: JSON over HTTP/1.1 under `/api/v1`, bearer-token auth,
//! long-poll endpoints, and the static review UI.

mod auth;
mod config;
mod error;
mod handlers;
mod ui;

pub use auth::{token_matches, Tokens, COOKIE_NAME};
pub use config::{ConfigError, ServeArgs, ServerConfig};
pub use error::ApiError;
pub use handlers::{Created, MemoryView, REVISION_HEADER};

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::DefaultBodyLimit;
use axum::middleware::from_fn_with_state;
use axum::routing::{get, post, put};
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::ids;
use crate::memory::MemoryFile;
use crate::session::{Engine, EngineConfig, SessionError};
use crate::skills::{self, BundleConfig, SkillError, TokenMode};

const BODY_LIMIT: usize = 16 * 1024 * 1024;

pub(crate) struct MemoryHandle {
    pub file: MemoryFile,
    /// Serializes read-modify-write cycles on the memory file.
    pub lock: Mutex<()>,
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) engine: Arc<Engine>,
    pub(crate) memory: Arc<MemoryHandle>,
    pub(crate) tokens: Arc<Tokens>,
    pub(crate) max_wait: Duration,
    pub(crate) external_url: Arc<str>,
}

impl AppState {
    pub fn review_url(&self, session_id: &str) -> String {
        format!("{}/review/{session_id}", self.external_url)
    }
}

pub fn router(state: AppState, with_ui: bool) -> Router {
    let agent = Router::new()
        .route("/proposals", post(handlers::submit_proposal))
        .route("/proposals/{id}/outcome", get(handlers::poll_outcome))
        .route("/proposals/{id}/artifact", put(handlers::update_artifact))
        .route_layer(from_fn_with_state(state.clone(), auth::require_agent));
    let reviewer = Router::new()
        .route("/sessions", get(handlers::list_sessions))
        .route("/sessions/{id}", get(handlers::get_session))
        .route("/sessions/{id}/actions", post(handlers::post_action))
        .route("/sessions/{id}/resolve", post(handlers::resolve))
        .route("/sessions/{id}/events", get(handlers::events))
        .route("/memory/actions", post(handlers::memory_action))
        .route_layer(from_fn_with_state(state.clone(), auth::require_reviewer));
    let memory = Router::new()
        .route("/memory", get(handlers::read_memory))
        .route_layer(from_fn_with_state(state.clone(), auth::require_any_token));
    let api = agent.merge(reviewer).merge(memory).route("/healthz", get(handlers::healthz));

    let mut app = Router::new().nest(crate::endpoints::API_PREFIX, api);
    if with_ui {
        app = app.merge(ui::routes());
    }
    app.layer(DefaultBodyLimit::max(BODY_LIMIT)).with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("cannot restore sessions: {0}")]
    Restore(#[from] SessionError),
    #[error("cannot write skills: {0}")]
    Skills(#[from] SkillError),
}

/// A server accepting connections on a background task.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub base_url: String,
    pub tokens: Tokens,
    pub skills_written: Option<PathBuf>,
    engine: Arc<Engine>,
    shutdown: Option<oneshot::Sender<()>>,
    server: JoinHandle<std::io::Result<()>>,
    sweeper: JoinHandle<()>,
}

impl RunningServer {
    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) {
        self.sweeper.abort();
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.server).await;
    }

    /// Drops the server without draining anything.
    pub fn abort(self) {
        self.sweeper.abort();
        self.server.abort();
    }

    /// Resolves when the server stops on its own, e.g. on a listener error.
    pub async fn wait(mut self) -> std::io::Result<()> {
        let result = (&mut self.server).await;
        self.sweeper.abort();
        result.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Binds, restores persisted sessions, optionally writes the skill bundle,
/// and starts serving.
pub async fn start(config: ServerConfig) -> Result<RunningServer, ServeError> {
    config.check()?;
    let bind = format!("{}:{}", config.host, config.port);
    let listener = TcpListener::bind(&bind).await.map_err(|source| ServeError::Bind { addr: bind.clone(), source })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind { addr: bind, source })?;
    let base_url = config.base_url(addr);

    let engine = Arc::new(Engine::new(EngineConfig {
        session_ttl: config.session_ttl,
        data_dir: config.data_dir.clone(),
        fsync: config.fsync,
    })?);
    let agent = config.token.clone().unwrap_or_else(ids::new_token);
    let reviewer = config.reviewer_token.clone().unwrap_or_else(|| agent.clone());
    let tokens = Tokens { agent, reviewer };

    let skills_written = match &config.generate_skills {
        Some(dir) => {
            skills::generate_to_disk(&BundleConfig {
                external_base_url: base_url.clone(),
                token_mode: TokenMode::EnvReference,
                output_dir: dir.clone(),
            })?;
            Some(dir.clone())
        }
        None => None,
    };

    let state = AppState {
        engine: engine.clone(),
        memory: Arc::new(MemoryHandle { file: MemoryFile::new(&config.memory_file), lock: Mutex::new(()) }),
        tokens: Arc::new(tokens.clone()),
        max_wait: config.max_wait,
        external_url: base_url.clone().into(),
    };
    let app = router(state, config.ui);

    let sweeper = {
        let engine = engine.clone();
        let every = config.sweep_interval;
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(every);
            loop {
                tick.tick().await;
                let expired = engine.expire_stale(ids::now_ms());
                if !expired.is_empty() {
                    tracing::info!(count = expired.len(), "sessions expired");
                }
            }
        })
    };

    let (tx, rx) = oneshot::channel::<()>();
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(RunningServer { addr, base_url, tokens, skills_written, engine, shutdown: Some(tx), server, sweeper })
}
