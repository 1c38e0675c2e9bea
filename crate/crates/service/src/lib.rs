//! HTTP front end for checking documents against prebuilt indexes.
//!
//! Endpoints:
//!
//! - `POST /api/check` with `{text, dataset, threshold, verify}`
//! - `GET /api/datasets`
//! - `GET /api/health`
//! - `POST /api/reload` re-reads the configuration and swaps in a freshly
//!   loaded catalog; in-flight requests keep the catalog they started with.
//!
//! When `static_dir` is configured, everything else is served from it.

mod api;
mod catalog;
mod config;
mod server;

pub use api::{CheckRequest, CheckResponse, DatasetInfo, Health, MatchInfo, ProvenanceInfo, PREVIEW_CHARS};
pub use catalog::{Catalog, DatasetEntry, LoadedIndex};
pub use config::{DatasetConfig, ServiceConfig, LISTEN_ENV};
pub use server::{router, serve, spawn, AppState, RunningService};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset {dataset}: {source}")]
    Load {
        dataset: String,
        #[source]
        source: corpusdedup::dedup::DedupError,
    },
    #[error("server error: {0}")]
    Server(#[source] std::io::Error),
}
