//! HTTP API for reviewing core column extractions.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/healthz` | liveness |
//! | POST | `/sessions` | multipart `image`, optional `mask`, `labels`, `config` → 201 |
//! | GET | `/sessions/{id}` | session state and latest report |
//! | DELETE | `/sessions/{id}` | drop a session |
//! | GET | `/sessions/{id}/image`, `/sessions/{id}/mask` | PNG |
//! | PUT | `/sessions/{id}/mask` | replace the mask (raw PNG or multipart `mask`) |
//! | POST | `/sessions/{id}/extract` | run extraction, optional filter JSON body |
//! | PUT | `/sessions/{id}/depths` | `{"spec": …}` or `{"edits": […]}`; 409 before extraction |
//! | GET | `/sessions/{id}/export` | ZIP of crops, `depths.csv`, `report.json`, `mask.png`; 409 before extraction |
//!
//! Requests to one session are serialized; different sessions run in parallel.

mod routes;
mod session;

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub use routes::{ApiError, DepthRequest};
pub use session::{Session, SessionInfo, SharedSession, Workspace};

pub const DEFAULT_PORT: u16 = 8780;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub capacity: usize,
    pub spool_dir: Option<PathBuf>,
    pub max_upload_bytes: usize,
    /// Directory served at `/` (the browser client bundle).
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { capacity: 64, spool_dir: None, max_upload_bytes: 64 * 1024 * 1024, static_dir: None }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub workspace: Arc<Workspace>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> std::io::Result<Self> {
        Ok(Self { workspace: Arc::new(Workspace::new(config.capacity, config.spool_dir.clone())?) })
    }
}

pub fn router(state: AppState, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/healthz", get(routes::healthz))
        .route("/sessions", post(routes::create_session))
        .route("/sessions/{id}", get(routes::get_session).delete(routes::delete_session))
        .route("/sessions/{id}/image", get(routes::get_image))
        .route("/sessions/{id}/mask", get(routes::get_mask).put(routes::put_mask))
        .route("/sessions/{id}/extract", post(routes::extract))
        .route("/sessions/{id}/depths", axum::routing::put(routes::put_depths))
        .route("/sessions/{id}/export", get(routes::export))
        .layer(DefaultBodyLimit::max(config.max_upload_bytes))
        .with_state(state);
    match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(routes::index)),
    }
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = AppState::new(&config)?;
    axum::serve(listener, router(state, &config)).with_graceful_shutdown(shutdown).await
}
