//! HTTP transports: live requests via `ureq`, and a fixture directory that
//! replays recorded responses.
//!
//! Fixture layout: one JSON file per request, named by
//! [`fixture_file_name`] from the request's path and query. A file holds
//! either one response object `{"status", "headers", "body"}` or an array
//! of them, served in order with the last one repeating.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    /// Lower-cased header names.
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    #[serde(default)]
    pub body: serde_json::Value,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("request to {url} failed: {message}")]
    Network { url: String, message: String },
    #[error("no recorded response for {key} (expected {path})")]
    MissingFixture { key: String, path: PathBuf },
    #[error("bad fixture {path}: {message}")]
    BadFixture { path: PathBuf, message: String },
}

impl TransportError {
    /// Whether retrying the same request may succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, TransportError::Network { .. })
    }
}

/// Issues GET requests. `path_and_query` is relative to the API base, for
/// example `/repos/owner/name/forks?per_page=100&page=1`.
pub trait Transport: Send + Sync {
    fn get(
        &self,
        base: &str,
        path_and_query: &str,
        headers: &[(&str, String)],
    ) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        UreqTransport {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport::new(Duration::from_secs(60))
    }
}

impl Transport for UreqTransport {
    fn get(
        &self,
        base: &str,
        path_and_query: &str,
        headers: &[(&str, String)],
    ) -> Result<HttpResponse, TransportError> {
        let url = format!("{}{}", base.trim_end_matches('/'), path_and_query);
        let network = |e: ureq::Error| TransportError::Network {
            url: url.clone(),
            message: e.to_string(),
        };
        let mut req = self.agent.get(&url);
        for (k, v) in headers {
            req = req.header(*k, v.as_str());
        }
        let mut resp = req.call().map_err(network)?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let text = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_string()
            .map_err(network)?;
        let body = if text.trim().is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(serde_json::Value::String(text))
        };
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

/// File name for a recorded response, e.g.
/// `repos__o__r__forks@per_page=100,page=2.json`.
pub fn fixture_file_name(path_and_query: &str) -> String {
    let trimmed = path_and_query.trim_start_matches('/');
    let mut out = String::with_capacity(trimmed.len() + 8);
    for ch in trimmed.chars() {
        match ch {
            '/' => out.push_str("__"),
            '?' => out.push('@'),
            '&' => out.push(','),
            c if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_' | '=' | '+' | '%') => out.push(c),
            c => out.push_str(&format!("%{:02X}", c as u32)),
        }
    }
    out.push_str(".json");
    out
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    One(HttpResponse),
    Sequence(Vec<HttpResponse>),
}

/// Replays responses from a fixture directory and counts requests.
pub struct FixtureTransport {
    dir: PathBuf,
    cursor: Mutex<HashMap<String, usize>>,
    calls: AtomicUsize,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureTransport {
            dir: dir.into(),
            cursor: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Number of requests served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for FixtureTransport {
    fn get(
        &self,
        _base: &str,
        path_and_query: &str,
        _headers: &[(&str, String)],
    ) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let path = self.dir.join(fixture_file_name(path_and_query));
        let text = fs::read_to_string(&path).map_err(|_| TransportError::MissingFixture {
            key: path_and_query.to_string(),
            path: path.clone(),
        })?;
        let file: FixtureFile = serde_json::from_str(&text).map_err(|e| TransportError::BadFixture {
            path: path.clone(),
            message: e.to_string(),
        })?;
        match file {
            FixtureFile::One(r) => Ok(r),
            FixtureFile::Sequence(seq) if seq.is_empty() => Err(TransportError::BadFixture {
                path,
                message: "empty response sequence".into(),
            }),
            FixtureFile::Sequence(mut seq) => {
                let mut cursor = self.cursor.lock().unwrap();
                let n = cursor.entry(path_and_query.to_string()).or_insert(0);
                let i = (*n).min(seq.len() - 1);
                *n += 1;
                Ok(seq.swap_remove(i))
            }
        }
    }
}

/// Wraps a transport and writes every response into a fixture directory.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Self {
        RecordingTransport {
            inner,
            dir: dir.into(),
        }
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(
        &self,
        base: &str,
        path_and_query: &str,
        headers: &[(&str, String)],
    ) -> Result<HttpResponse, TransportError> {
        let resp = self.inner.get(base, path_and_query, headers)?;
        let path = self.dir.join(fixture_file_name(path_and_query));
        let mut recorded = resp.clone();
        // Only keep headers the client reads.
        recorded
            .headers
            .retain(|k, _| k == "link" || k.starts_with("x-ratelimit") || k == "retry-after");
        let text = serde_json::to_string_pretty(&recorded).expect("response is serializable");
        if let Err(e) = fs::write(&path, text) {
            log::warn!("could not record {}: {e}", path.display());
        }
        Ok(resp)
    }
}
