//! Block-explorer client for verified sources and outgoing-transaction
//! counts, with an append-only on-disk cache, a shared rate limiter,
//! retries with exponential backoff, and per-address request deduplication.

mod cache;
mod client;
mod config;
mod limiter;

use std::path::PathBuf;
use std::sync::Arc;

use lure_core::crypto::Address;
use thiserror::Error;

pub use cache::{unix_now, Cache, CacheEntry, EntryKind};
pub use client::ExplorerClient;
pub use config::{Network, NetworkConfig, API_KEY_ENV};
pub use limiter::RateLimiter;

/// Cloneable so one outcome can be handed to every deduplicated caller.
#[derive(Debug, Clone, Error)]
pub enum ClientError {
    #[error("invalid client configuration: {0}")]
    InvalidConfig(String),
    #[error("transport error after {attempts} attempt(s): {reason}")]
    Transport { attempts: u32, reason: String },
    #[error("no verified source for {address}")]
    NotVerified { address: Address },
    #[error("explorer error: {0}")]
    Api(String),
    #[error("unexpected explorer response: {0}")]
    Malformed(String),
    #[error("cache {path}: {source}")]
    Cache { path: PathBuf, source: Arc<std::io::Error> },
}

impl ClientError {
    pub(crate) fn cache(path: PathBuf, e: std::io::Error) -> Self {
        ClientError::Cache { path, source: Arc::new(e) }
    }

    /// Network-level failures, as opposed to answers from the explorer.
    pub fn is_transport(&self) -> bool {
        matches!(self, ClientError::Transport { .. })
    }
}
