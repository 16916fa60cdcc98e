//! LLM-assisted steps of dataset construction: claim-worthiness screening,
//! negation drafting and key-context extraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::inference::{parse_yes_no, LlmProvider, PromptTemplate};
use crate::model::ClaimRecord;
use crate::net::ProviderError;

pub const CLAIMWORTHY_TEMPLATE: &str = include_str!("../../templates/claimworthy.txt");
pub const NEGATION_TEMPLATE: &str = include_str!("../../templates/negation.txt");
pub const EXTRACTION_TEMPLATE: &str = include_str!("../../templates/extraction.txt");

/// Temperature for dataset-generation prompts.
pub const DERIVE_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error("llm provider failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("negation rejected ({reason}); raw response: {raw:?}")]
    Generation { reason: &'static str, raw: String },
    #[error("key-context extraction is not a JSON array: {message}; raw response: {raw:?}")]
    Extraction { message: String, raw: String },
    #[error("headline is empty")]
    EmptyHeadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    PersonName,
    Title,
    Country,
    State,
    City,
    Quantity,
    Unit,
    DateTime,
    Other,
}

impl ContextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextKind::PersonName => "person_name",
            ContextKind::Title => "title",
            ContextKind::Country => "country",
            ContextKind::State => "state",
            ContextKind::City => "city",
            ContextKind::Quantity => "quantity",
            ContextKind::Unit => "unit",
            ContextKind::DateTime => "date_time",
            ContextKind::Other => "other",
        }
    }

    fn from_label(label: &str) -> Self {
        let norm: String = label
            .trim()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "personname" | "person" | "name" => ContextKind::PersonName,
            "title" => ContextKind::Title,
            "country" => ContextKind::Country,
            "state" => ContextKind::State,
            "city" => ContextKind::City,
            "quantity" | "number" => ContextKind::Quantity,
            "unit" => ContextKind::Unit,
            "datetime" | "date" | "time" => ContextKind::DateTime,
            _ => ContextKind::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub kind: ContextKind,
    pub text: String,
}

/// The three prompts used while deriving, each with a `{HEADLINE}` slot.
#[derive(Debug, Clone)]
pub struct DatasetPrompts {
    pub claimworthy: PromptTemplate,
    pub negation: PromptTemplate,
    pub extraction: PromptTemplate,
}

impl Default for DatasetPrompts {
    fn default() -> Self {
        let parse = |t| PromptTemplate::parse_headline(t).expect("bundled template is valid");
        DatasetPrompts {
            claimworthy: parse(CLAIMWORTHY_TEMPLATE),
            negation: parse(NEGATION_TEMPLATE),
            extraction: parse(EXTRACTION_TEMPLATE),
        }
    }
}

fn ask(template: &PromptTemplate, headline: &str, provider: &dyn LlmProvider) -> Result<String, DeriveError> {
    let headline = headline.trim();
    if headline.is_empty() {
        return Err(DeriveError::EmptyHeadline);
    }
    let (system, user) = template.render_headline(headline);
    Ok(provider.complete(&system, &user, DERIVE_TEMPERATURE)?)
}

/// Asks whether a headline is a self-contained, checkable claim. Answers
/// without a trailing Yes/No count as "no".
pub fn filter_claimworthy(
    headline: &str,
    template: &PromptTemplate,
    provider: &dyn LlmProvider,
) -> Result<bool, DeriveError> {
    let raw = ask(template, headline, provider)?;
    Ok(parse_yes_no(&raw).unwrap_or_else(|| {
        tracing::warn!("no Yes/No in claim-worthiness answer for {headline:?}; excluding it");
        false
    }))
}

const QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}', '`'];

/// Asks for a sentiment-reversed rewrite of the headline and cleans it up.
pub fn generate_negation(
    headline: &str,
    template: &PromptTemplate,
    provider: &dyn LlmProvider,
) -> Result<String, DeriveError> {
    let raw = ask(template, headline, provider)?;
    clean_negation(headline, &raw)
}

fn clean_negation(headline: &str, raw: &str) -> Result<String, DeriveError> {
    let fail = |reason| DeriveError::Generation {
        reason,
        raw: raw.to_string(),
    };
    let trimmed = raw.trim();
    if trimmed.lines().count() > 1 {
        return Err(fail("multi-line output"));
    }
    let out = crate::text::nfc(trimmed.trim_matches(QUOTES).trim());
    if out.is_empty() {
        return Err(fail("empty output"));
    }
    if out.to_lowercase() == headline.trim().to_lowercase() {
        return Err(fail("identical to the headline"));
    }
    Ok(out)
}

/// Asks for the key contexts of a headline as a JSON array of
/// `{kind, text}`. Items not found verbatim in the headline are dropped.
pub fn extract_key_context(
    headline: &str,
    template: &PromptTemplate,
    provider: &dyn LlmProvider,
) -> Result<Vec<ContextItem>, DeriveError> {
    let raw = ask(template, headline, provider)?;
    parse_context_items(headline, &raw)
}

#[derive(Deserialize)]
struct RawItem {
    #[serde(default)]
    kind: String,
    text: String,
}

fn parse_context_items(headline: &str, raw: &str) -> Result<Vec<ContextItem>, DeriveError> {
    let body = strip_code_fence(raw);
    let items: Vec<RawItem> = serde_json::from_str(body).map_err(|e| DeriveError::Extraction {
        message: e.to_string(),
        raw: raw.to_string(),
    })?;
    Ok(items
        .into_iter()
        .filter_map(|item| {
            let text = item.text.trim();
            if text.is_empty() || !headline.contains(text) {
                tracing::warn!("dropping extracted context {text:?}: not in headline {headline:?}");
                return None;
            }
            Some(ContextItem {
                kind: ContextKind::from_label(&item.kind),
                text: text.to_string(),
            })
        })
        .collect())
}

/// Models often wrap JSON in a markdown fence; take what is inside.
fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Everything derived for one original headline. Failures are kept as
/// messages so the reviewer sees them instead of losing the headline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedHeadline {
    pub origin_id: String,
    pub headline: String,
    pub claimworthy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negation: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contexts: Vec<ContextItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// Screens each original and, for claim-worthy ones, drafts a negation and
/// extracts key contexts. Provider errors abort; generation and
/// extraction failures are recorded on the row.
pub fn derive_all(
    originals: &[ClaimRecord],
    prompts: &DatasetPrompts,
    provider: &dyn LlmProvider,
    exec: Execution,
) -> Result<Vec<DerivedHeadline>, DeriveError> {
    exec.map(originals, |record| derive_one(record, prompts, provider))
        .into_iter()
        .collect()
}

fn derive_one(
    record: &ClaimRecord,
    prompts: &DatasetPrompts,
    provider: &dyn LlmProvider,
) -> Result<DerivedHeadline, DeriveError> {
    let mut row = DerivedHeadline {
        origin_id: record.id.clone(),
        headline: record.headline.clone(),
        claimworthy: filter_claimworthy(&record.headline, &prompts.claimworthy, provider)?,
        negation: None,
        contexts: Vec::new(),
        errors: Vec::new(),
    };
    if !row.claimworthy {
        return Ok(row);
    }
    match generate_negation(&record.headline, &prompts.negation, provider) {
        Ok(n) => row.negation = Some(n),
        Err(e @ DeriveError::Generation { .. }) => row.errors.push(e.to_string()),
        Err(e) => return Err(e),
    }
    match extract_key_context(&record.headline, &prompts.extraction, provider) {
        Ok(items) => row.contexts = items,
        Err(e @ DeriveError::Extraction { .. }) => row.errors.push(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(row)
}
