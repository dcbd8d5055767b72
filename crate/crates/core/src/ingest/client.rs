//! GitHub REST client: retries, shared rate-limit budget, and concurrent
//! pagination.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::Value;

use super::transport::{HttpResponse, Transport};
use super::{AuthContext, IngestError};

pub const PER_PAGE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateLimitPolicy {
    /// Sleep until the reported reset time, then retry.
    Wait,
    FailFast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientOptions {
    pub rate_limit: RateLimitPolicy,
    /// Total attempts for 5xx and network failures.
    pub attempts: u32,
    pub backoff_base: Duration,
    /// Concurrent page fetches.
    pub concurrency: usize,
    /// Upper bound on consecutive rate-limit waits for one request.
    pub max_rate_limit_waits: u32,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            rate_limit: RateLimitPolicy::Wait,
            attempts: 3,
            backoff_base: Duration::from_millis(500),
            concurrency: 4,
            max_rate_limit_waits: 10,
        }
    }
}

pub struct GithubClient {
    transport: Arc<dyn Transport>,
    auth: AuthContext,
    opts: ClientOptions,
    /// Shared across threads: no request is sent before this instant.
    pause_until: Mutex<Option<SystemTime>>,
    requests: AtomicU32,
}

/// One page of a listing plus its pagination links.
#[derive(Debug, Clone)]
pub struct Page {
    pub items: Vec<Value>,
    pub next: Option<u32>,
    pub last: Option<u32>,
}

impl GithubClient {
    pub fn new(transport: Arc<dyn Transport>, auth: AuthContext, opts: ClientOptions) -> Self {
        GithubClient {
            transport,
            auth,
            opts,
            pause_until: Mutex::new(None),
            requests: AtomicU32::new(0),
        }
    }

    pub fn options(&self) -> &ClientOptions {
        &self.opts
    }

    /// Requests issued, including retries.
    pub fn request_count(&self) -> u32 {
        self.requests.load(Ordering::SeqCst)
    }

    fn headers(&self) -> Vec<(&'static str, String)> {
        let mut h = vec![
            ("Accept", "application/vnd.github+json".to_string()),
            ("X-GitHub-Api-Version", "2022-11-28".to_string()),
            (
                "User-Agent",
                concat!("waste-radar/", env!("CARGO_PKG_VERSION")).to_string(),
            ),
        ];
        if let Some(token) = &self.auth.token {
            h.push(("Authorization", format!("Bearer {}", token.expose())));
        }
        h
    }

    fn wait_for_budget(&self) {
        let until = *self.pause_until.lock().unwrap();
        if let Some(until) = until {
            if let Ok(d) = until.duration_since(SystemTime::now()) {
                log::info!("rate limit: sleeping {}s until reset", d.as_secs());
                thread::sleep(d);
            }
        }
    }

    fn pause(&self, until: SystemTime) {
        let mut slot = self.pause_until.lock().unwrap();
        if slot.is_none_or(|t| t < until) {
            *slot = Some(until);
        }
    }

    /// GET with retry and rate-limit handling. Returns any non-error
    /// response; 404 maps to `NotFound`.
    pub fn get(&self, path_and_query: &str) -> Result<HttpResponse, IngestError> {
        let base = self.auth.api_base_url.as_str();
        let headers = self.headers();
        let mut attempt = 0;
        let mut rate_waits = 0;
        loop {
            self.wait_for_budget();
            self.requests.fetch_add(1, Ordering::SeqCst);
            let result = self.transport.get(base, path_and_query, &headers);
            let resp = match result {
                Ok(r) => r,
                Err(e) if e.is_transient() && attempt + 1 < self.opts.attempts => {
                    attempt += 1;
                    self.backoff(attempt, &e.to_string());
                    continue;
                }
                Err(e) => return Err(IngestError::Transport(e)),
            };

            if let Some(reset) = rate_limit_reset(&resp) {
                match self.opts.rate_limit {
                    RateLimitPolicy::FailFast => {
                        return Err(IngestError::RateLimited {
                            reset_epoch: epoch_secs(reset),
                        })
                    }
                    RateLimitPolicy::Wait if rate_waits < self.opts.max_rate_limit_waits => {
                        rate_waits += 1;
                        self.pause(reset);
                        continue;
                    }
                    RateLimitPolicy::Wait => {
                        return Err(IngestError::RateLimited {
                            reset_epoch: epoch_secs(reset),
                        })
                    }
                }
            }

            match resp.status {
                200..=299 => {
                    if resp.header("x-ratelimit-remaining") == Some("0") {
                        if let Some(reset) = header_reset(&resp) {
                            if self.opts.rate_limit == RateLimitPolicy::Wait {
                                self.pause(reset);
                            }
                        }
                    }
                    return Ok(resp);
                }
                404 => return Err(IngestError::NotFound(path_and_query.to_string())),
                500..=599 if attempt + 1 < self.opts.attempts => {
                    attempt += 1;
                    self.backoff(attempt, &format!("HTTP {}", resp.status));
                }
                status => {
                    return Err(IngestError::Http {
                        status,
                        path: path_and_query.to_string(),
                        message: error_message(&resp.body),
                    })
                }
            }
        }
    }

    fn backoff(&self, attempt: u32, why: &str) {
        let delay = self.opts.backoff_base * 2u32.pow(attempt - 1);
        log::warn!("retry {attempt} after {why}, backing off {delay:?}");
        if !delay.is_zero() {
            thread::sleep(delay);
        }
    }

    pub fn get_json(&self, path_and_query: &str) -> Result<Value, IngestError> {
        Ok(self.get(path_and_query)?.body)
    }

    /// Fetches one page of a listing. `path_and_query` must already carry
    /// its own query parameters; paging parameters are appended.
    pub fn page(&self, path_and_query: &str, page: u32) -> Result<Page, IngestError> {
        let sep = if path_and_query.contains('?') { '&' } else { '?' };
        let url = format!("{path_and_query}{sep}per_page={PER_PAGE}&page={page}");
        let resp = self.get(&url)?;
        let links = resp.header("link").map(parse_link_header).unwrap_or_default();
        let items = match resp.body {
            Value::Array(items) => items,
            other => {
                return Err(IngestError::Decode {
                    path: url,
                    message: format!("expected a JSON array, got {}", type_name(&other)),
                })
            }
        };
        Ok(Page {
            items,
            next: links.get("next").copied(),
            last: links.get("last").copied(),
        })
    }

    /// Collects listing items across pages, in page order, stopping once
    /// `limit` items are gathered. Pages after the first are fetched by up
    /// to `concurrency` workers when the last page number is known.
    pub fn paginate(&self, path_and_query: &str, limit: Option<usize>) -> Result<Vec<Value>, IngestError> {
        let first = self.page(path_and_query, 1)?;
        let mut pages: BTreeMap<u32, Vec<Value>> = BTreeMap::new();
        let mut next = first.next;
        let last = first.last;
        pages.insert(1, first.items);

        let wanted_pages = limit.map(|n| n.div_ceil(PER_PAGE).max(1) as u32);
        let enough = |pages: &BTreeMap<u32, Vec<Value>>| {
            limit.is_some_and(|n| pages.values().map(Vec::len).sum::<usize>() >= n)
        };

        if let (Some(last), Some(_)) = (last, next) {
            let upto = wanted_pages.map_or(last, |w| w.min(last));
            if upto >= 2 && !enough(&pages) {
                let fetched = self.fetch_pages_concurrently(path_and_query, 2, upto)?;
                let tail_next = fetched.get(&upto).and_then(|p| p.next);
                for (n, p) in fetched {
                    pages.insert(n, p.items);
                }
                next = tail_next;
            }
        }

        // Sequential fallback: no `last` link, or more pages appeared.
        while let Some(n) = next {
            if enough(&pages) || pages.contains_key(&n) {
                break;
            }
            let p = self.page(path_and_query, n)?;
            if p.items.is_empty() {
                break;
            }
            next = p.next;
            pages.insert(n, p.items);
        }

        let mut items: Vec<Value> = pages.into_values().flatten().collect();
        if let Some(n) = limit {
            items.truncate(n);
        }
        Ok(items)
    }

    fn fetch_pages_concurrently(
        &self,
        path_and_query: &str,
        from: u32,
        to: u32,
    ) -> Result<BTreeMap<u32, Page>, IngestError> {
        let cursor = AtomicU32::new(from);
        let results: Mutex<BTreeMap<u32, Result<Page, IngestError>>> = Mutex::new(BTreeMap::new());
        let workers = self.opts.concurrency.clamp(1, (to - from + 1) as usize);
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let n = cursor.fetch_add(1, Ordering::SeqCst);
                    if n > to {
                        break;
                    }
                    let r = self.page(path_and_query, n);
                    let failed = r.is_err();
                    results.lock().unwrap().insert(n, r);
                    if failed {
                        break;
                    }
                });
            }
        });
        results
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|(n, r)| r.map(|p| (n, p)))
            .collect()
    }
}

fn epoch_secs(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn header_reset(resp: &HttpResponse) -> Option<SystemTime> {
    let secs: u64 = resp.header("x-ratelimit-reset")?.trim().parse().ok()?;
    Some(UNIX_EPOCH + Duration::from_secs(secs))
}

/// Reset instant when `resp` is a rate-limit rejection.
fn rate_limit_reset(resp: &HttpResponse) -> Option<SystemTime> {
    if resp.status != 403 && resp.status != 429 {
        return None;
    }
    if let Some(secs) = resp
        .header("retry-after")
        .and_then(|v| v.trim().parse::<u64>().ok())
    {
        return Some(SystemTime::now() + Duration::from_secs(secs));
    }
    if resp.header("x-ratelimit-remaining") == Some("0") {
        return Some(header_reset(resp).unwrap_or_else(|| SystemTime::now() + Duration::from_secs(60)));
    }
    None
}

fn error_message(body: &Value) -> String {
    body.get("message")
        .and_then(Value::as_str)
        .map(String::from)
        .unwrap_or_else(|| body.to_string())
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Parses `Link: <...?page=2>; rel="next", <...?page=5>; rel="last"` into
/// rel → page number.
pub fn parse_link_header(value: &str) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    for part in value.split(',') {
        let mut segs = part.split(';');
        let Some(target) = segs.next() else { continue };
        let target = target.trim().trim_start_matches('<').trim_end_matches('>');
        let page = target
            .split(['?', '&'])
            .filter_map(|kv| kv.strip_prefix("page="))
            .find_map(|v| v.parse::<u32>().ok());
        let rel = segs
            .filter_map(|s| s.trim().strip_prefix("rel="))
            .map(|r| r.trim_matches('"').to_string())
            .next();
        if let (Some(page), Some(rel)) = (page, rel) {
            out.insert(rel, page);
        }
    }
    out
}
