//! Provider construction from configuration, with per-stage call counters.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{EmbedSource, LlmSource, PipelineConfig, SearchSource};
use super::{PipelineError, Stage};
use crate::context::{EmbeddingProvider, HttpEmbeddingProvider, MockEmbedding16};
use crate::inference::{HttpLlmProvider, LlmProvider, ScriptedLlm};
use crate::net::ProviderError;
use crate::retrieval::{
    FetchError, FetchPolicy, FetchedPage, Fetcher, FixtureTransport, HttpSearchProvider, MockSearchProvider,
    PageFetcher, SearchHit, SearchProvider,
};

/// Provider calls made so far, by stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub search: usize,
    pub fetch: usize,
    pub embed_batches: usize,
    pub llm: usize,
}

#[derive(Debug, Default)]
pub struct CallStats {
    search: AtomicUsize,
    fetch: AtomicUsize,
    embed: AtomicUsize,
    llm: AtomicUsize,
}

impl CallStats {
    pub fn snapshot(&self) -> CallCounts {
        CallCounts {
            search: self.search.load(Ordering::SeqCst),
            fetch: self.fetch.load(Ordering::SeqCst),
            embed_batches: self.embed.load(Ordering::SeqCst),
            llm: self.llm.load(Ordering::SeqCst),
        }
    }
}

struct Unconfigured;

impl SearchProvider for Unconfigured {
    fn search(&self, _: &str, _: usize, _: Option<&str>) -> Result<Vec<SearchHit>, ProviderError> {
        Err(ProviderError::Unconfigured("search"))
    }
}

impl LlmProvider for Unconfigured {
    fn complete(&self, _: &str, _: &str, _: f64) -> Result<String, ProviderError> {
        Err(ProviderError::Unconfigured("llm"))
    }
}

/// The four providers a detector talks to. Every call goes through a
/// counter so runs can report and tests can assert stage accounting.
pub struct Providers {
    search: Box<dyn SearchProvider>,
    fetcher: Box<dyn PageFetcher>,
    embedder: Box<dyn EmbeddingProvider>,
    llm: Box<dyn LlmProvider>,
    stats: Arc<CallStats>,
}

impl Providers {
    pub fn new(
        search: Box<dyn SearchProvider>,
        fetcher: Box<dyn PageFetcher>,
        embedder: Box<dyn EmbeddingProvider>,
        llm: Box<dyn LlmProvider>,
    ) -> Self {
        Providers {
            search,
            fetcher,
            embedder,
            llm,
            stats: Arc::default(),
        }
    }

    /// Builds the providers a configuration names. Missing search or LLM
    /// providers only fail when first used, so ablation runs need no
    /// search configuration.
    pub fn from_config(config: &PipelineConfig) -> Result<Self, PipelineError> {
        let p = &config.providers;
        let cfg_err = |what: &str, e: std::io::Error| PipelineError::new(Stage::Config, format!("{what}: {e}"));
        let search: Box<dyn SearchProvider> = match &p.search {
            SearchSource::Mock { path } => Box::new(
                MockSearchProvider::from_file(path)
                    .map_err(|e| cfg_err(&format!("search fixture {}", path.display()), e))?,
            ),
            SearchSource::Live { endpoint, api_key } => Box::new(HttpSearchProvider::new(endpoint, api_key.clone())),
            SearchSource::Unset => Box::new(Unconfigured),
        };
        let policy = FetchPolicy {
            timeout_seconds: config.fetch_timeout_seconds,
            cache_dir: config.cache_dir.clone(),
            no_fetch: config.no_fetch,
            ..FetchPolicy::default()
        };
        policy.validate().map_err(|m| PipelineError::new(Stage::Config, m))?;
        let fetcher: Box<dyn PageFetcher> = match &p.pages {
            Some(manifest) => Box::new(Fetcher::new(
                policy,
                FixtureTransport::from_manifest(manifest)
                    .map_err(|e| cfg_err(&format!("page manifest {}", manifest.display()), e))?,
            )),
            None => Box::new(Fetcher::http(policy)),
        };
        let embedder: Box<dyn EmbeddingProvider> = match &p.embedding {
            EmbedSource::Mock16 => Box::new(MockEmbedding16::new()),
            EmbedSource::Live { endpoint, model } => Box::new(HttpEmbeddingProvider::new(endpoint, model)),
        };
        let llm: Box<dyn LlmProvider> = match &p.llm {
            LlmSource::Scripted { path } => Box::new(
                ScriptedLlm::from_file(path).map_err(|e| cfg_err(&format!("llm script {}", path.display()), e))?,
            ),
            LlmSource::Live {
                endpoint,
                model,
                api_key,
            } => Box::new(HttpLlmProvider::new(endpoint, model, api_key.clone())),
            LlmSource::Unset => Box::new(Unconfigured),
        };
        Ok(Providers::new(search, fetcher, embedder, llm))
    }

    pub fn calls(&self) -> CallCounts {
        self.stats.snapshot()
    }

    pub fn search(&self) -> &dyn SearchProvider {
        self
    }

    pub fn fetcher(&self) -> &dyn PageFetcher {
        self
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self
    }

    pub fn llm(&self) -> &dyn LlmProvider {
        self
    }
}

impl SearchProvider for Providers {
    fn search(&self, query: &str, max_results: usize, locale: Option<&str>) -> Result<Vec<SearchHit>, ProviderError> {
        self.stats.search.fetch_add(1, Ordering::SeqCst);
        self.search.search(query, max_results, locale)
    }
}

impl PageFetcher for Providers {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        self.stats.fetch.fetch_add(1, Ordering::SeqCst);
        self.fetcher.fetch(url)
    }
}

impl EmbeddingProvider for Providers {
    fn dimension(&self) -> Option<usize> {
        self.embedder.dimension()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        self.stats.embed.fetch_add(1, Ordering::SeqCst);
        self.embedder.embed(texts)
    }
}

impl LlmProvider for Providers {
    fn complete(&self, system_text: &str, user_text: &str, temperature: f64) -> Result<String, ProviderError> {
        self.stats.llm.fetch_add(1, Ordering::SeqCst);
        self.llm.complete(system_text, user_text, temperature)
    }
}
