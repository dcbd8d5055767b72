//! GitHub REST ingestion into [`RepoSnapshot`](crate::snapshot::RepoSnapshot)
//! values, plus the repository selection filter.

mod client;
mod fetch;
mod select;
mod transport;

use std::fmt;

use url::Url;

use crate::snapshot::{RepoRef, SnapshotError};

pub use client::{parse_link_header, ClientOptions, GithubClient, Page, RateLimitPolicy, PER_PAGE};
pub use fetch::{fetch_repo_snapshot, is_pull_request_item, FetchLimits};
pub use select::{select_repositories, RepoCandidate, SelectionCriteria, SelectionLists};
pub use transport::{
    fixture_file_name, FixtureTransport, HttpResponse, RecordingTransport, Transport, TransportError,
    UreqTransport,
};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const TOKEN_ENV: &str = "WASTE_RADAR_TOKEN";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("repository {0} not found")]
    UnknownRepo(RepoRef),
    #[error("{0}: not found")]
    NotFound(String),
    #[error("rate limited until epoch {reset_epoch}")]
    RateLimited { reset_epoch: u64 },
    #[error("HTTP {status} for {path}: {message}")]
    Http {
        status: u16,
        path: String,
        message: String,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("unexpected response for {path}: {message}")]
    Decode { path: String, message: String },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("invalid API base URL {0:?}: must be absolute")]
    BaseUrl(String),
}

/// API token; never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Secret(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthContext {
    pub token: Option<Secret>,
    pub api_base_url: Url,
}

impl AuthContext {
    pub fn new(token: Option<Secret>, api_base_url: &str) -> Result<Self, IngestError> {
        let url = Url::parse(api_base_url).map_err(|_| IngestError::BaseUrl(api_base_url.to_string()))?;
        if url.cannot_be_a_base() {
            return Err(IngestError::BaseUrl(api_base_url.to_string()));
        }
        Ok(AuthContext {
            token,
            api_base_url: url,
        })
    }

    /// Token from `WASTE_RADAR_TOKEN` when set, else `fallback`.
    pub fn from_env(fallback: Option<Secret>, api_base_url: &str) -> Result<Self, IngestError> {
        let token = std::env::var(TOKEN_ENV)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .map(Secret::new)
            .or(fallback);
        AuthContext::new(token, api_base_url)
    }
}

impl Default for AuthContext {
    fn default() -> Self {
        AuthContext::new(None, DEFAULT_API_BASE).expect("default base URL is valid")
    }
}
