//! The end-to-end detector: retrieval, context building and inference
//! behind one call, plus its configuration and provider wiring.

pub mod config;
pub mod providers;

use std::fmt;
use std::time::Instant;

use chrono::{DateTime, NaiveDate};
use thiserror::Error;

pub use config::{ConfigError, ConfigLayer, EmbedSource, LlmSource, Mode, PipelineConfig, ProviderConfig, SearchSource};
pub use providers::{CallCounts, CallStats, Providers};

use crate::context::{assemble_context, embed_batch, embed_query, retrieve_top_n, split_documents, VectorIndex};
use crate::exec::Execution;
use crate::inference::{run_majority, PromptTemplate};
use crate::model::{Document, Elapsed, Prediction, SourceRef};
use crate::retrieval::{build_search_query, collect_top_k, RetrievalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Input,
    Search,
    Embed,
    Inference,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Search => "search",
            Stage::Embed => "embedding",
            Stage::Inference => "inference",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{stage} stage: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        PipelineError {
            stage,
            message: message.into(),
        }
    }
}

/// Source of elapsed-time measurements. `Frozen` reports zero for every
/// span, which keeps reports byte-stable in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    System,
    Frozen,
}

impl Clock {
    pub fn time<R>(self, f: impl FnOnce() -> R) -> (R, f64) {
        match self {
            Clock::System => {
                let start = Instant::now();
                let out = f();
                (out, start.elapsed().as_secs_f64())
            }
            Clock::Frozen => (f(), 0.0),
        }
    }
}

/// Per-claim inputs besides the claim text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DetectOptions {
    /// Used in error messages and logs only.
    pub claim_id: Option<String>,
    pub region: Option<String>,
    pub date: Option<NaiveDate>,
}

/// Either a context with its sources, or a reason to go without one.
type ContextOutcome = Result<(String, Vec<SourceRef>), String>;

pub struct Detector {
    config: PipelineConfig,
    providers: Providers,
    template: PromptTemplate,
    clock: Clock,
}

impl Detector {
    pub fn new(config: PipelineConfig, providers: Providers) -> Result<Self, PipelineError> {
        config.validate().map_err(|e| PipelineError::new(Stage::Config, e.to_string()))?;
        let template = match &config.template {
            Some(path) => PromptTemplate::load_detect(path).map_err(|e| PipelineError::new(Stage::Config, e.to_string()))?,
            None => PromptTemplate::default_detect(),
        };
        Ok(Detector {
            config,
            providers,
            template,
            clock: Clock::System,
        })
    }

    pub fn from_config(config: PipelineConfig) -> Result<Self, PipelineError> {
        let providers = Providers::from_config(&config)?;
        Self::new(config, providers)
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.config.mode = mode;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn calls(&self) -> CallCounts {
        self.providers.calls()
    }

    /// Classifies one claim. In retrieval mode a failure to obtain any
    /// context does not abort: the claim is answered without context and
    /// the prediction carries a warning.
    pub fn detect(&self, claim: &str, opts: &DetectOptions) -> Result<Prediction, PipelineError> {
        self.detect_as(self.config.mode, claim, opts)
    }

    /// [`Detector::detect`] with the configured mode overridden.
    pub fn detect_as(&self, mode: Mode, claim: &str, opts: &DetectOptions) -> Result<Prediction, PipelineError> {
        let claim = check_claim(claim)?;
        match mode {
            Mode::Ablation => self.infer(claim, opts, Ok((String::new(), Vec::new())), 0.0),
            Mode::Retrieval => {
                let (outcome, secs) = self.clock.time(|| self.retrieve_context(claim, opts));
                self.infer(claim, opts, outcome?, secs)
            }
        }
    }

    /// Classifies a claim against supplied evidence texts instead of web
    /// retrieval. The texts are chunked and embedded like fetched pages.
    /// In ablation mode the evidence is ignored.
    pub fn detect_with_evidence(
        &self,
        claim: &str,
        evidence: &[String],
        opts: &DetectOptions,
    ) -> Result<Prediction, PipelineError> {
        let claim = check_claim(claim)?;
        if self.config.mode == Mode::Ablation {
            return self.infer(claim, opts, Ok((String::new(), Vec::new())), 0.0);
        }
        let (outcome, secs) = self.clock.time(|| {
            let docs = evidence_documents(evidence);
            if docs.is_empty() {
                return Ok(Err("no evidence supplied; answered without context".to_string()));
            }
            self.context_from_documents(claim, &docs)
        });
        self.infer(claim, opts, outcome?, secs)
    }

    fn retrieve_context(&self, claim: &str, opts: &DetectOptions) -> Result<ContextOutcome, PipelineError> {
        let query = build_search_query(claim, opts.region.as_deref(), opts.date)
            .map_err(|e| PipelineError::new(Stage::Input, e.to_string()))?;
        let docs = match collect_top_k(
            &query.text,
            self.config.k_documents,
            query.locale.as_deref(),
            self.providers.search(),
            self.providers.fetcher(),
            Execution::Sequential,
        ) {
            Ok(docs) => docs,
            Err(e @ RetrievalError::EmptyContext { .. }) => {
                return Ok(Err(format!("{e}; answered without context")));
            }
            Err(e) => return Err(PipelineError::new(Stage::Search, e.to_string())),
        };
        self.context_from_documents(claim, &docs)
    }

    fn context_from_documents(&self, claim: &str, docs: &[Document]) -> Result<ContextOutcome, PipelineError> {
        let chunks = split_documents(docs, &self.config.splitter);
        if chunks.is_empty() {
            return Ok(Err("retrieved documents contain no text; answered without context".into()));
        }
        let embed_err = |e: crate::context::ContextError| PipelineError::new(Stage::Embed, e.to_string());
        let embedder = self.providers.embedder();
        let index = VectorIndex::from_entries(embed_batch(chunks, embedder).map_err(embed_err)?).map_err(embed_err)?;
        let query = embed_query(claim, embedder).map_err(embed_err)?;
        let top = retrieve_top_n(&index, &query, self.config.retrieved_chunks).map_err(embed_err)?;
        let context = assemble_context(top.iter().map(|s| &s.entry.chunk), self.config.max_context_chars);
        let digest = docs
            .iter()
            .map(|d| SourceRef {
                url: d.url.clone(),
                rank: d.rank,
            })
            .collect();
        Ok(Ok((context, digest)))
    }

    fn infer(
        &self,
        claim: &str,
        opts: &DetectOptions,
        context: ContextOutcome,
        context_build_seconds: f64,
    ) -> Result<Prediction, PipelineError> {
        let mut warnings = Vec::new();
        let (context, digest) = context.unwrap_or_else(|warning| {
            tracing::warn!("{warning}");
            warnings.push(warning);
            (String::new(), Vec::new())
        });
        let id = opts.claim_id.as_deref().unwrap_or("claim");
        let (result, inference_seconds) = self.clock.time(|| {
            run_majority(
                id,
                claim,
                &context,
                &self.template,
                self.providers.llm(),
                self.config.temperature,
                self.config.runs,
            )
        });
        let mut prediction = result.map_err(|e| PipelineError::new(Stage::Inference, e.to_string()))?;
        prediction.context_digest = digest;
        prediction.elapsed = Elapsed {
            context_build_seconds,
            inference_seconds,
        };
        prediction.warnings = warnings;
        Ok(prediction)
    }
}

fn check_claim(claim: &str) -> Result<&str, PipelineError> {
    let claim = claim.trim();
    if claim.is_empty() {
        return Err(PipelineError::new(Stage::Input, "claim is empty"));
    }
    Ok(claim)
}

/// Evidence texts as a retrieval batch ranked in file order.
fn evidence_documents(evidence: &[String]) -> Vec<Document> {
    evidence
        .iter()
        .filter(|t| !t.trim().is_empty())
        .enumerate()
        .map(|(i, text)| Document {
            url: format!("evidence:{}", i + 1),
            rank: i as u32 + 1,
            title: String::new(),
            text: text.clone(),
            fetched_at: DateTime::UNIX_EPOCH,
        })
        .collect()
}
