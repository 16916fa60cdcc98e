//! Search providers: the trait, a fixture-backed mock and a live HTTP client.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::net::{self, ProviderError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub rank: u32,
}

pub trait SearchProvider: Send + Sync {
    /// Returns at most `max_results` hits ranked `1..=n`.
    fn search(
        &self,
        query: &str,
        max_results: usize,
        locale: Option<&str>,
    ) -> Result<Vec<SearchHit>, ProviderError>;
}

/// Wire shape of one result object: `{link, title, snippet}`.
#[derive(Debug, Clone, Deserialize)]
struct WireHit {
    link: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
}

fn ranked(hits: impl IntoIterator<Item = WireHit>, max_results: usize) -> Vec<SearchHit> {
    hits.into_iter()
        .take(max_results)
        .enumerate()
        .map(|(i, h)| SearchHit {
            url: h.link,
            title: h.title,
            snippet: h.snippet,
            rank: i as u32 + 1,
        })
        .collect()
}

/// Answers queries from a JSON file mapping exact query strings to arrays
/// of `{link, title, snippet}` objects. Unknown queries return no hits.
#[derive(Debug, Default)]
pub struct MockSearchProvider {
    results: HashMap<String, Vec<WireHit>>,
    calls: AtomicUsize,
}

impl MockSearchProvider {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        Ok(MockSearchProvider {
            results: serde_json::from_str(json)?,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let raw = fs::read_to_string(path)?;
        Self::from_json(&raw).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Registers hits for `query`; each entry is `(url, title, snippet)`.
    pub fn with_hits(mut self, query: &str, hits: &[(&str, &str, &str)]) -> Self {
        self.results.insert(
            query.to_string(),
            hits.iter()
                .map(|(l, t, s)| WireHit {
                    link: l.to_string(),
                    title: t.to_string(),
                    snippet: s.to_string(),
                })
                .collect(),
        );
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl SearchProvider for MockSearchProvider {
    fn search(
        &self,
        query: &str,
        max_results: usize,
        _locale: Option<&str>,
    ) -> Result<Vec<SearchHit>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self
            .results
            .get(query)
            .map(|hits| ranked(hits.iter().cloned(), max_results))
            .unwrap_or_default())
    }
}

/// Live search over HTTP GET with `q`, `num` and `gl` query parameters.
#[derive(Debug, Clone)]
pub struct HttpSearchProvider {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub user_agent: String,
}

/// Keys under which search APIs commonly nest their result array.
const RESULT_KEYS: &[&str] = &["organic", "organic_results", "items", "results"];

impl HttpSearchProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        HttpSearchProvider {
            endpoint: endpoint.into(),
            api_key,
            timeout: Duration::from_secs(20),
            user_agent: concat!("manicheck/", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

/// Pulls the ordered hit array out of a search response: either the top
/// level array or the first well-known array field.
pub fn parse_search_response(
    body: &serde_json::Value,
    max_results: usize,
) -> Result<Vec<SearchHit>, ProviderError> {
    let array = match body {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => RESULT_KEYS
            .iter()
            .find_map(|k| o.get(*k).and_then(|v| v.as_array()))
            .ok_or_else(|| ProviderError::Response("no result array in search response".into()))?,
        _ => return Err(ProviderError::Response("search response is not JSON object or array".into())),
    };
    let hits = array
        .iter()
        .filter_map(|v| serde_json::from_value::<WireHit>(v.clone()).ok());
    Ok(ranked(hits, max_results))
}

impl SearchProvider for HttpSearchProvider {
    fn search(
        &self,
        query: &str,
        max_results: usize,
        locale: Option<&str>,
    ) -> Result<Vec<SearchHit>, ProviderError> {
        net::begin_request(&self.endpoint)?;
        let agent = net::agent(self.timeout, &self.user_agent);
        let mut req = agent
            .get(&self.endpoint)
            .query("q", query)
            .query("num", &max_results.to_string());
        if let Some(gl) = locale {
            req = req.query("gl", gl);
        }
        if let Some(key) = &self.api_key {
            req = req.query("api_key", key).set("X-API-KEY", key);
        }
        let resp = req.call().map_err(net::map_ureq)?;
        let body = net::read_json(resp)?;
        parse_search_response(&body, max_results)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn mock_ranks_and_truncates() {
        let m = MockSearchProvider::from_json(
            r#"{"q": [{"link":"https://a/","title":"A","snippet":"s"},
                      {"link":"https://b/","title":"B","snippet":"s"},
                      {"link":"https://c/","title":"C"}]}"#,
        )
        .unwrap();
        let hits = m.search("q", 2, None).unwrap();
        assert_eq!(hits.iter().map(|h| h.rank).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(hits[1].url, "https://b/");
        assert!(m.search("other", 5, None).unwrap().is_empty());
        assert_eq!(m.calls(), 2);
    }

    #[test]
    fn response_shapes() {
        let top = json!([{"link": "https://a/", "title": "A", "snippet": "x"}]);
        assert_eq!(parse_search_response(&top, 10).unwrap()[0].url, "https://a/");
        let nested = json!({"organic": [{"title": "no link"}, {"link": "https://b/"}]});
        let hits = parse_search_response(&nested, 10).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!((hits[0].url.as_str(), hits[0].rank), ("https://b/", 1));
        assert!(parse_search_response(&json!({"x": 1}), 10).is_err());
    }
}
