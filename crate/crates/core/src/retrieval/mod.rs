//! Online knowledge retrieval: search the claim, crawl the top results and
//! keep the first `k` pages that yield text.

pub mod cache;
pub mod extract;
pub mod fetch;
pub mod search;

use std::collections::HashSet;

use chrono::NaiveDate;
use thiserror::Error;

pub use cache::{cache_key, FetchedPage, PageCache};
pub use fetch::{
    fetch_and_extract, is_http_url, FetchCause, FetchError, FetchPolicy, Fetcher, FixtureTransport,
    HttpTransport, PageFetcher, RawResponse, Transport,
};
pub use search::{HttpSearchProvider, MockSearchProvider, SearchHit, SearchProvider};

use crate::exec::Execution;
use crate::model::Document;
use crate::net::ProviderError;

/// Default cap on query length, in whitespace-delimited words.
pub const QUERY_WORD_LIMIT: usize = 32;

/// Hits requested per wanted document, leaving room to skip blocked pages.
pub const OVERFETCH_FACTOR: usize = 3;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("search provider failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("no document could be retrieved ({attempted} urls tried)")]
    EmptyContext {
        attempted: usize,
        failures: Vec<FetchError>,
    },
}

/// A built search request. Region and date never enter the query text:
/// region travels as the provider locale and date is kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchQuery {
    pub text: String,
    pub locale: Option<String>,
    pub date: Option<NaiveDate>,
}

pub fn build_search_query(
    claim: &str,
    region: Option<&str>,
    date: Option<NaiveDate>,
) -> Result<SearchQuery, RetrievalError> {
    build_search_query_with_limit(claim, region, date, QUERY_WORD_LIMIT)
}

/// Like [`build_search_query`] with a custom word cap.
pub fn build_search_query_with_limit(
    claim: &str,
    region: Option<&str>,
    date: Option<NaiveDate>,
    word_limit: usize,
) -> Result<SearchQuery, RetrievalError> {
    let words: Vec<&str> = claim.split_whitespace().collect();
    if words.is_empty() {
        return Err(RetrievalError::InvalidArgument("claim is empty".into()));
    }
    Ok(SearchQuery {
        text: words[..words.len().min(word_limit.max(1))].join(" "),
        locale: region.map(str::trim).filter(|r| !r.is_empty()).map(String::from),
        date,
    })
}

/// Walks search hits in rank order and keeps the first `k` that fetch and
/// extract cleanly. Failed URLs are skipped. Candidates are fetched in
/// windows of the still-missing count so the parallel path returns exactly
/// what a sequential walk would.
pub fn collect_top_k(
    query: &str,
    k: usize,
    locale: Option<&str>,
    provider: &dyn SearchProvider,
    fetcher: &dyn PageFetcher,
    exec: Execution,
) -> Result<Vec<Document>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidArgument("k must be at least 1".into()));
    }
    let hits = provider.search(query, OVERFETCH_FACTOR * k, locale)?;
    let mut seen = HashSet::new();
    let candidates: Vec<SearchHit> = hits
        .into_iter()
        .filter(|h| seen.insert(h.url.clone()))
        .collect();

    let mut docs = Vec::with_capacity(k);
    let mut failures = Vec::new();
    let mut next = 0;
    while docs.len() < k && next < candidates.len() {
        let want = k - docs.len();
        let window = &candidates[next..(next + want).min(candidates.len())];
        next += window.len();
        let fetched = exec.map(window, |hit| fetcher.fetch(&hit.url));
        for (hit, result) in window.iter().zip(fetched) {
            match result {
                Ok(page) if docs.len() < k => docs.push(Document {
                    url: hit.url.clone(),
                    rank: hit.rank,
                    title: if page.title.is_empty() { hit.title.clone() } else { page.title },
                    text: page.text,
                    fetched_at: page.fetched_at,
                }),
                Ok(_) => {}
                Err(e) => {
                    tracing::info!("skipping rank {}: {e}", hit.rank);
                    failures.push(e);
                }
            }
        }
    }
    if docs.is_empty() {
        return Err(RetrievalError::EmptyContext {
            attempted: next,
            failures,
        });
    }
    Ok(docs)
}
