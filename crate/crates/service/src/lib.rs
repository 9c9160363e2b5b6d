//! HTTP JSON API over the run store: dataset upload, background runs with
//! progress, reports, stateless re-ranking, discards and the final choice.
//!
//! | Method | Path                   |
//! |--------|------------------------|
//! | GET    | `/health`              |
//! | POST   | `/datasets`            |
//! | GET    | `/runs`                |
//! | POST   | `/runs`                |
//! | GET    | `/runs/{id}`           |
//! | GET    | `/runs/{id}/report`    |
//! | POST   | `/runs/{id}/rank`      |
//! | POST   | `/runs/{id}/discard`   |
//! | POST   | `/runs/{id}/final`     |
//! | GET    | `/runs/{id}/export`    |

pub mod api;
pub mod error;
pub mod worker;

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use mofs_core::store::{FileStore, StoreError};

pub use error::{ApiError, ErrorCode};

pub const DEFAULT_WORKERS: usize = 2;
pub const DEFAULT_PORT: u16 = 8080;
/// Uploads up to this size are accepted.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<FileStore>,
    /// Caps concurrently executing runs; queued runs wait here in `Pending`.
    pub pool: Arc<Semaphore>,
}

impl AppState {
    pub fn new(store: FileStore, workers: usize) -> Self {
        Self {
            store: Arc::new(store),
            pool: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn open(data_dir: impl Into<PathBuf>, workers: usize) -> Result<Self, StoreError> {
        Ok(Self::new(FileStore::open(data_dir)?, workers))
    }

    /// Fails runs interrupted by a previous shutdown and re-queues pending
    /// ones. Needs a Tokio runtime.
    pub fn recover(&self) -> Result<(), StoreError> {
        worker::recover(&self.store, &self.pool)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(api::health))
        .route("/datasets", post(api::create_dataset))
        .route("/runs", get(api::list_runs).post(api::create_run))
        .route("/runs/{id}", get(api::get_run))
        .route("/runs/{id}/report", get(api::get_report))
        .route("/runs/{id}/rank", post(api::rank))
        .route("/runs/{id}/discard", post(api::discard))
        .route("/runs/{id}/final", post(api::final_choice))
        .route("/runs/{id}/export", get(api::export))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then stops accepting connections and
/// drains in-flight requests. Store writes are atomic, so stopping never
/// leaves a half-written run file.
pub async fn serve(listener: TcpListener, state: AppState, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
