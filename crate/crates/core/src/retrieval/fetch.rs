//! Page fetching: transports, the fetch policy and the caching fetcher.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cache::{FetchedPage, PageCache};
use super::extract::extract_text;
use crate::net;

pub const MIN_MAX_BYTES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub timeout_seconds: f64,
    pub max_bytes: usize,
    pub user_agent: String,
    pub cache_dir: Option<PathBuf>,
    /// Cache-only mode: a miss fails instead of touching the network.
    #[serde(default)]
    pub no_fetch: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            timeout_seconds: 15.0,
            max_bytes: 2 * 1024 * 1024,
            user_agent: concat!("manicheck/", env!("CARGO_PKG_VERSION")).to_string(),
            cache_dir: None,
            no_fetch: false,
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_seconds > 0.0 && self.timeout_seconds.is_finite()) {
            return Err(format!("timeout_seconds must be > 0, got {}", self.timeout_seconds));
        }
        if self.max_bytes < MIN_MAX_BYTES {
            return Err(format!(
                "max_bytes must be >= {MIN_MAX_BYTES}, got {}",
                self.max_bytes
            ));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchCause {
    #[error("not a valid http(s) url")]
    InvalidUrl,
    #[error("network failure: {0}")]
    Network(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("body exceeds {0} bytes")]
    TooLarge(usize),
    #[error("no visible text extracted")]
    EmptyText,
    #[error("not cached and fetching is disabled")]
    NotCached,
    #[error("live network access denied")]
    Denied,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fetch of {url} failed: {cause}")]
pub struct FetchError {
    pub url: String,
    pub cause: FetchCause,
}

/// Raw HTTP response body as delivered by a transport.
#[derive(Debug, Clone)]
pub struct RawResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Moves bytes for one URL. Status handling, size limits, extraction and
/// caching live in [`Fetcher`] so that every transport shares them.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, policy: &FetchPolicy) -> Result<RawResponse, FetchCause>;
}

/// Anything that turns a URL into an extracted page.
pub trait PageFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

pub struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str, policy: &FetchPolicy) -> Result<RawResponse, FetchCause> {
        net::begin_request(url).map_err(|_| FetchCause::Denied)?;
        let agent = net::agent(policy.timeout(), &policy.user_agent);
        let resp = match agent.get(url).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) => return Err(FetchCause::Status(code)),
            Err(e) => return Err(FetchCause::Network(e.to_string())),
        };
        let status = resp.status();
        let mut body = Vec::new();
        resp.into_reader()
            .take(policy.max_bytes as u64 + 1)
            .read_to_end(&mut body)
            .map_err(|e| FetchCause::Network(e.to_string()))?;
        Ok(RawResponse { status, body })
    }
}

/// Serves canned responses keyed by exact URL; unknown URLs fail with a
/// network error. Used for offline runs and tests.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    pages: HashMap<String, RawResponse>,
    requests: AtomicUsize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestEntry {
    File(String),
    Full {
        #[serde(default)]
        file: Option<String>,
        #[serde(default = "ok_status")]
        status: u16,
    },
}

fn ok_status() -> u16 {
    200
}

impl FixtureTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn page(mut self, url: &str, html: &str) -> Self {
        self.pages.insert(
            url.to_string(),
            RawResponse {
                status: 200,
                body: html.as_bytes().to_vec(),
            },
        );
        self
    }

    pub fn status(mut self, url: &str, status: u16) -> Self {
        self.pages.insert(
            url.to_string(),
            RawResponse {
                status,
                body: Vec::new(),
            },
        );
        self
    }

    /// Loads a JSON manifest mapping URLs to either an HTML file path or
    /// `{"file": path, "status": code}`. Paths are relative to the manifest.
    pub fn from_manifest(path: &Path) -> std::io::Result<Self> {
        let raw = fs::read(path)?;
        let entries: HashMap<String, ManifestEntry> = serde_json::from_slice(&raw)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut out = FixtureTransport::new();
        for (url, entry) in entries {
            let (file, status) = match entry {
                ManifestEntry::File(f) => (Some(f), 200),
                ManifestEntry::Full { file, status } => (file, status),
            };
            let body = match file {
                Some(f) => fs::read(base.join(f))?,
                None => Vec::new(),
            };
            out.pages.insert(url, RawResponse { status, body });
        }
        Ok(out)
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str, _policy: &FetchPolicy) -> Result<RawResponse, FetchCause> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        self.pages
            .get(url)
            .cloned()
            .ok_or_else(|| FetchCause::Network("no fixture for url".into()))
    }
}

/// Cache-aware fetcher that applies the fetch policy on top of a transport.
pub struct Fetcher<T: Transport = HttpTransport> {
    policy: FetchPolicy,
    transport: T,
    cache: Option<PageCache>,
}

impl Fetcher<HttpTransport> {
    pub fn http(policy: FetchPolicy) -> Self {
        Fetcher::new(policy, HttpTransport)
    }
}

impl<T: Transport> Fetcher<T> {
    pub fn new(policy: FetchPolicy, transport: T) -> Self {
        let cache = policy.cache_dir.as_ref().map(PageCache::new);
        Fetcher {
            policy,
            transport,
            cache,
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    fn fetch_uncached(&self, url: &str) -> Result<FetchedPage, FetchCause> {
        if self.policy.no_fetch {
            return Err(FetchCause::NotCached);
        }
        let resp = self.transport.get(url, &self.policy)?;
        if !(200..300).contains(&resp.status) {
            return Err(FetchCause::Status(resp.status));
        }
        if resp.body.len() > self.policy.max_bytes {
            return Err(FetchCause::TooLarge(self.policy.max_bytes));
        }
        let html = String::from_utf8_lossy(&resp.body);
        let extracted = extract_text(&html);
        if extracted.text.is_empty() {
            return Err(FetchCause::EmptyText);
        }
        Ok(FetchedPage {
            url: url.to_string(),
            fetched_at: Utc::now(),
            title: extracted.title,
            text: extracted.text,
        })
    }
}

impl<T: Transport> PageFetcher for Fetcher<T> {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let fail = |cause| FetchError {
            url: url.to_string(),
            cause,
        };
        if !is_http_url(url) {
            return Err(fail(FetchCause::InvalidUrl));
        }
        if let Some(page) = self.cache.as_ref().and_then(|c| c.load(url)) {
            return Ok(page);
        }
        let page = self.fetch_uncached(url).map_err(fail)?;
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.store(&page) {
                tracing::warn!("could not cache {url}: {e}");
            }
        }
        Ok(page)
    }
}

/// Fetches one URL over the network (or the policy's cache) and extracts
/// its visible text.
pub fn fetch_and_extract(url: &str, policy: &FetchPolicy) -> Result<FetchedPage, FetchError> {
    Fetcher::http(policy.clone()).fetch(url)
}

pub fn is_http_url(url: &str) -> bool {
    match url::Url::parse(url) {
        Ok(u) => matches!(u.scheme(), "http" | "https") && u.host_str().is_some_and(|h| !h.is_empty()),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = "<html><body><p>A</p><script>x()</script><p>B</p></body></html>";

    fn policy() -> FetchPolicy {
        FetchPolicy::default()
    }

    #[test]
    fn policy_validation() {
        assert!(policy().validate().is_ok());
        let mut p = policy();
        p.timeout_seconds = 0.0;
        assert!(p.validate().is_err());
        let mut p = policy();
        p.max_bytes = 4095;
        assert!(p.validate().is_err());
    }

    #[test]
    fn fixture_page_is_extracted() {
        let f = Fetcher::new(policy(), FixtureTransport::new().page("https://a.org/", PAGE));
        let page = f.fetch("https://a.org/").unwrap();
        assert_eq!(page.text, "A\nB");
    }

    #[test]
    fn forbidden_is_a_fetch_failure() {
        let f = Fetcher::new(policy(), FixtureTransport::new().status("https://a.org/", 403));
        let err = f.fetch("https://a.org/").unwrap_err();
        assert_eq!(err.cause, FetchCause::Status(403));
        assert_eq!(err.url, "https://a.org/");
    }

    #[test]
    fn invalid_urls_are_rejected_without_requests() {
        let f = Fetcher::new(policy(), FixtureTransport::new());
        for url in ["ftp://a.org/x", "not a url", "https://", "file:///etc/passwd"] {
            assert_eq!(f.fetch(url).unwrap_err().cause, FetchCause::InvalidUrl, "{url}");
        }
        assert_eq!(f.transport().requests(), 0);
    }

    #[test]
    fn oversized_and_empty_bodies_fail() {
        let big = format!("<p>{}</p>", "x".repeat(MIN_MAX_BYTES));
        let mut p = policy();
        p.max_bytes = MIN_MAX_BYTES;
        let f = Fetcher::new(
            p,
            FixtureTransport::new()
                .page("https://big.org/", &big)
                .page("https://empty.org/", "<script>only()</script>"),
        );
        assert_eq!(f.fetch("https://big.org/").unwrap_err().cause, FetchCause::TooLarge(MIN_MAX_BYTES));
        assert_eq!(f.fetch("https://empty.org/").unwrap_err().cause, FetchCause::EmptyText);
    }

    #[test]
    fn cache_hit_skips_transport() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = policy();
        p.cache_dir = Some(dir.path().to_path_buf());
        let f = Fetcher::new(p.clone(), FixtureTransport::new().page("https://a.org/", PAGE));
        let first = f.fetch("https://a.org/").unwrap();
        assert_eq!(f.transport().requests(), 1);

        let again = Fetcher::new(p, FixtureTransport::new());
        let second = again.fetch("https://a.org/").unwrap();
        assert_eq!(first, second);
        assert_eq!(again.transport().requests(), 0);
    }

    #[test]
    fn no_fetch_mode_only_reads_cache() {
        let mut p = policy();
        p.no_fetch = true;
        let f = Fetcher::new(p, FixtureTransport::new().page("https://a.org/", PAGE));
        assert_eq!(f.fetch("https://a.org/").unwrap_err().cause, FetchCause::NotCached);
        assert_eq!(f.transport().requests(), 0);
    }
}
