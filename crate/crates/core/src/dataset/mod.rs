//! Dataset construction from news feeds: ingest, LLM-assisted derivation,
//! file-based human review and assembly.

pub mod alter;
pub mod assemble;
pub mod derive;
pub mod review;
pub mod rss;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alter::{apply_alteration, AlterationDirective, AlterationError, DirectiveInput, DirectiveTemplate};
pub use assemble::{assemble_dataset, AssembleError, AssembledDataset, DatasetSummary};
pub use derive::{
    derive_all, extract_key_context, filter_claimworthy, generate_negation, ContextItem, ContextKind,
    DatasetPrompts, DeriveError, DerivedHeadline,
};
pub use review::{approved_inputs, review_rows, Approved, NegationProposal, ReviewError, ReviewRow};
pub use rss::{ingest_rss, make_headline, FeedEntry, FeedError};

use crate::model::{claim_id, ClaimRecord};
use crate::retrieval::{is_http_url, FetchPolicy, Transport};

/// One line of a feeds manifest: where the feed lives and whom it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedSource {
    /// An http(s) URL or a local file path.
    pub source: String,
    pub provider: String,
    pub region: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read feed {feed}: {message}")]
    Read { feed: String, message: String },
    #[error("feed {feed}: {error}")]
    Parse { feed: String, error: FeedError },
}

/// Reads a JSON array of [`FeedSource`] objects.
pub fn load_feed_manifest(path: &Path) -> Result<Vec<FeedSource>, IngestError> {
    let read_err = |message: String| IngestError::Read {
        feed: path.display().to_string(),
        message,
    };
    let raw = fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
    serde_json::from_str(&raw).map_err(|e| read_err(format!("bad manifest: {e}")))
}

/// Loads and parses every feed. URLs go through `transport`; other
/// sources are files, relative paths resolved against `base`.
pub fn ingest_sources(
    sources: &[FeedSource],
    base: &Path,
    today: NaiveDate,
    transport: &dyn Transport,
    policy: &FetchPolicy,
) -> Result<Vec<FeedEntry>, IngestError> {
    let mut entries = Vec::new();
    for src in sources {
        let read_err = |message: String| IngestError::Read {
            feed: src.source.clone(),
            message,
        };
        let bytes = if is_http_url(&src.source) {
            let resp = transport.get(&src.source, policy).map_err(|c| read_err(c.to_string()))?;
            if !(200..300).contains(&resp.status) {
                return Err(read_err(format!("http status {}", resp.status)));
            }
            resp.body
        } else {
            fs::read(base.join(&src.source)).map_err(|e| read_err(e.to_string()))?
        };
        let parsed = ingest_rss(&bytes, &src.provider, &src.region, today).map_err(|error| IngestError::Parse {
            feed: src.source.clone(),
            error,
        })?;
        entries.extend(parsed);
    }
    Ok(entries)
}

/// Turns feed entries into original records. Ids number the entries of
/// each (provider, date) pair in feed order; a headline already seen for
/// the same provider is skipped.
pub fn originals_from_entries(entries: &[FeedEntry]) -> Vec<ClaimRecord> {
    let mut seq: HashMap<(String, NaiveDate), usize> = HashMap::new();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for e in entries {
        let headline = make_headline(e);
        if !seen.insert((e.provider.clone(), headline.to_lowercase())) {
            continue;
        }
        let n = seq.entry((e.provider.clone(), e.published_date)).or_default();
        *n += 1;
        out.push(ClaimRecord::original(
            claim_id(&e.provider, e.published_date, *n),
            &headline,
            e.provider.clone(),
            e.region.clone(),
            e.published_date,
        ));
    }
    out
}
