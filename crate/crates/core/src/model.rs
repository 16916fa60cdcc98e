//! Shared domain types: claims, documents, chunks, verdicts and predictions.

use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::text;

/// Binary ground-truth label of a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Veracity {
    True,
    False,
}

impl Veracity {
    pub fn is_fake(self) -> bool {
        self == Veracity::False
    }
}

impl fmt::Display for Veracity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Veracity::True => "true",
            Veracity::False => "false",
        })
    }
}

/// How a claim came to exist: a genuine headline, a sentiment-reversed
/// negation of one, or a headline with one key context item replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    Original,
    Negation,
    ContextAltered,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 3] = [
        ClaimKind::Original,
        ClaimKind::Negation,
        ClaimKind::ContextAltered,
    ];

    /// Label every claim of this kind must carry.
    pub fn ground_truth(self) -> Veracity {
        match self {
            ClaimKind::Original => Veracity::True,
            ClaimKind::Negation | ClaimKind::ContextAltered => Veracity::False,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimKind::Original => "original",
            ClaimKind::Negation => "negation",
            ClaimKind::ContextAltered => "context_altered",
        }
    }
}

impl fmt::Display for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The (ground truth, altered) fragment pair of a context alteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManipulationSpan {
    pub original: String,
    pub replacement: String,
}

/// One line of the dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub headline: String,
    pub kind: ClaimKind,
    pub label: Veracity,
    pub provider: String,
    pub region: String,
    pub published_date: NaiveDate,
    pub origin_id: Option<String>,
    pub manipulation: Option<ManipulationSpan>,
}

impl ClaimRecord {
    /// Builds an `Original` record; the headline is NFC-normalized and trimmed.
    pub fn original(
        id: impl Into<String>,
        headline: &str,
        provider: impl Into<String>,
        region: impl Into<String>,
        published_date: NaiveDate,
    ) -> Self {
        ClaimRecord {
            id: id.into(),
            headline: text::nfc(headline.trim()),
            kind: ClaimKind::Original,
            label: Veracity::True,
            provider: provider.into(),
            region: region.into(),
            published_date,
            origin_id: None,
            manipulation: None,
        }
    }
}

/// Builds the `<provider>-<date>-<sequence>` identifier used for original claims.
pub fn claim_id(provider: &str, date: NaiveDate, sequence: usize) -> String {
    let slug: String = provider
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    let slug = slug.trim_matches('_');
    let slug = if slug.is_empty() { "unknown" } else { slug };
    format!("{slug}-{}-{sequence:04}", date.format("%Y-%m-%d"))
}

/// A rule broken by a [`ClaimRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl Violation {
    fn new(field: &'static str, rule: impl Into<String>) -> Self {
        Violation {
            field,
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule)
    }
}

/// Checks every record and span invariant. An empty result means the record
/// is well formed; validation never aborts early.
pub fn validate_claim_record(record: &ClaimRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.headline.trim().is_empty() {
        out.push(Violation::new("headline", "headline must be non-empty"));
    }
    if record.label != record.kind.ground_truth() {
        out.push(Violation::new(
            "label",
            format!(
                "label {} inconsistent with kind {}",
                record.label, record.kind
            ),
        ));
    }
    match (record.kind, &record.manipulation) {
        (ClaimKind::ContextAltered, None) => out.push(Violation::new(
            "manipulation",
            "manipulation required for context_altered",
        )),
        (ClaimKind::Original, Some(_)) => out.push(Violation::new(
            "manipulation",
            "manipulation must be absent for original",
        )),
        _ => {}
    }
    if let Some(span) = &record.manipulation {
        if span.original.trim().to_lowercase() == span.replacement.trim().to_lowercase() {
            out.push(Violation::new(
                "manipulation",
                "original must differ from replacement",
            ));
        }
        if span.replacement.is_empty() || !record.headline.contains(&span.replacement) {
            out.push(Violation::new(
                "manipulation.replacement",
                "replacement occurs in headline",
            ));
        }
        if span.original.is_empty() || text::contains_bounded(&record.headline, &span.original) {
            out.push(Violation::new(
                "manipulation.original",
                "original must not occur in headline",
            ));
        }
    }
    out
}

/// A crawled page reduced to visible text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub url: String,
    pub rank: u32,
    pub title: String,
    pub text: String,
    pub fetched_at: DateTime<Utc>,
}

/// A slice of one document's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_index: usize,
    pub seq: usize,
    pub text: String,
    /// Offset, in characters, of the first character of `text` in the document.
    pub char_start: usize,
}

impl Chunk {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedChunk {
    pub chunk: Chunk,
    pub vector: Vec<f64>,
}

/// Outcome of a single inference run, or the majority over several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    True,
    False,
    NonConclusive,
}

impl VerdictLabel {
    pub fn veracity(self) -> Option<Veracity> {
        match self {
            VerdictLabel::True => Some(Veracity::True),
            VerdictLabel::False => Some(Veracity::False),
            VerdictLabel::NonConclusive => None,
        }
    }
}

impl From<Veracity> for VerdictLabel {
    fn from(v: Veracity) -> Self {
        match v {
            Veracity::True => VerdictLabel::True,
            Veracity::False => VerdictLabel::False,
        }
    }
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictLabel::True => "True",
            VerdictLabel::False => "False",
            VerdictLabel::NonConclusive => "NonConclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: VerdictLabel,
    pub explanation: String,
    pub raw: String,
}

/// A retrieved document that fed the context, identified by URL and search rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub url: String,
    pub rank: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Elapsed {
    pub context_build_seconds: f64,
    pub inference_seconds: f64,
}

/// Aggregate of repeated inference runs for one claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub runs: Vec<Verdict>,
    pub majority: VerdictLabel,
    pub context_digest: Vec<SourceRef>,
    pub elapsed: Elapsed,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Prediction {
    /// Raw outputs of every run joined by blank lines.
    pub fn joined_raw(&self) -> String {
        self.runs
            .iter()
            .map(|r| r.raw.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 8, 5).unwrap()
    }

    fn altered(headline: &str, original: &str, replacement: &str) -> ClaimRecord {
        ClaimRecord {
            id: "bbc-2024-08-05-0001-a1".into(),
            headline: headline.into(),
            kind: ClaimKind::ContextAltered,
            label: Veracity::False,
            provider: "BBC".into(),
            region: "GB".into(),
            published_date: date(),
            origin_id: Some("bbc-2024-08-05-0001".into()),
            manipulation: Some(ManipulationSpan {
                original: original.into(),
                replacement: replacement.into(),
            }),
        }
    }

    #[test]
    fn well_formed_original_has_no_violations() {
        let r = ClaimRecord::original(
            claim_id("BBC", date(), 1),
            "Ukraine wins its first medal in Paris Olympic",
            "BBC",
            "GB",
            date(),
        );
        assert!(validate_claim_record(&r).is_empty());
    }

    #[test]
    fn context_altered_without_manipulation() {
        let mut r = altered("Mexico wins", "Ukraine", "Mexico");
        r.manipulation = None;
        let v = validate_claim_record(&r);
        assert_eq!(
            v.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            vec!["manipulation required for context_altered"]
        );
    }

    #[test]
    fn replacement_missing_from_headline() {
        let r = altered("Ukraine wins its first medal", "Ukraine", "Mexico");
        let v = validate_claim_record(&r);
        assert!(v.iter().any(|v| v.rule == "replacement occurs in headline"));
        assert!(v.iter().any(|v| v.field == "manipulation.original"));
    }

    #[test]
    fn magnitude_increase_is_not_an_original_occurrence() {
        let r = altered(
            "At least 1500 people have been killed in Bangladesh protests",
            "150",
            "1500",
        );
        assert!(validate_claim_record(&r).is_empty());
    }

    #[test]
    fn label_kind_mismatch_is_reported() {
        let mut r = ClaimRecord::original("x", "A claim", "p", "r", date());
        r.label = Veracity::False;
        let v = validate_claim_record(&r);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "label");
    }

    #[test]
    fn blank_headline_is_reported() {
        let r = ClaimRecord::original("x", "   ", "p", "r", date());
        assert_eq!(validate_claim_record(&r)[0].field, "headline");
    }

    #[test]
    fn id_format() {
        assert_eq!(claim_id("AP News", date(), 7), "ap_news-2024-08-05-0007");
    }

    #[test]
    fn jsonl_field_names() {
        let r = altered("Mexico wins", "Ukraine", "Mexico");
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["kind"], "context_altered");
        assert_eq!(v["label"], "false");
        assert_eq!(v["published_date"], "2024-08-05");
        assert_eq!(v["manipulation"]["replacement"], "Mexico");
        let o = ClaimRecord::original("x", "A", "p", "r", date());
        let v: serde_json::Value = serde_json::to_value(&o).unwrap();
        assert!(v["manipulation"].is_null());
    }
}
