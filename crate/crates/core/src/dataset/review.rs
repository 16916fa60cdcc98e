//! The review file: one JSONL row per candidate record, approved by hand.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::alter::AlterationDirective;
use super::derive::DerivedHeadline;
use crate::model::ClaimKind;

/// One reviewable candidate. `original` rows keep or drop a source
/// headline; `negation` rows carry `proposed_headline`; `context_altered`
/// rows carry directive fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRow {
    pub origin_id: String,
    pub kind: ClaimKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposed_headline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    pub approved: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReviewRow {
    fn new(origin_id: &str, kind: ClaimKind) -> Self {
        ReviewRow {
            origin_id: origin_id.to_string(),
            kind,
            proposed_headline: None,
            original: None,
            replacement: None,
            rationale: None,
            offset: None,
            approved: false,
            note: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("review row {row} ({origin_id}): {message}")]
pub struct ReviewError {
    pub row: usize,
    pub origin_id: String,
    pub message: String,
}

/// A negation accepted in review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegationProposal {
    pub origin_id: String,
    pub headline: String,
}

/// What review approved, ready for assembly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Approved {
    pub originals: Vec<String>,
    pub negations: Vec<NegationProposal>,
    pub alterations: Vec<AlterationDirective>,
}

/// Review rows for every claim-worthy headline: the headline itself, its
/// drafted negation, and any human directives naming it. Everything starts
/// unapproved. Directives for unknown or screened-out headlines are kept,
/// with a note, so the reviewer can see them.
pub fn review_rows(derived: &[DerivedHeadline], directives: &[AlterationDirective]) -> Vec<ReviewRow> {
    let mut by_origin: HashMap<&str, Vec<&AlterationDirective>> = HashMap::new();
    for d in directives {
        by_origin.entry(d.origin_id.as_str()).or_default().push(d);
    }
    let alteration_row = |d: &AlterationDirective| ReviewRow {
        original: Some(d.original.clone()),
        replacement: Some(d.replacement.clone()),
        rationale: d.rationale.clone(),
        offset: d.offset,
        ..ReviewRow::new(&d.origin_id, ClaimKind::ContextAltered)
    };

    let mut rows = Vec::new();
    for h in derived.iter().filter(|h| h.claimworthy) {
        rows.push(ReviewRow {
            proposed_headline: Some(h.headline.clone()),
            note: (!h.contexts.is_empty()).then(|| {
                let items: Vec<String> = h
                    .contexts
                    .iter()
                    .map(|c| format!("{}={}", c.kind.as_str(), c.text))
                    .collect();
                format!("key contexts: {}", items.join(", "))
            }),
            ..ReviewRow::new(&h.origin_id, ClaimKind::Original)
        });
        match &h.negation {
            Some(n) => rows.push(ReviewRow {
                proposed_headline: Some(n.clone()),
                ..ReviewRow::new(&h.origin_id, ClaimKind::Negation)
            }),
            None => rows.push(ReviewRow {
                note: Some(format!("no negation drafted: {}", h.errors.join("; "))),
                ..ReviewRow::new(&h.origin_id, ClaimKind::Negation)
            }),
        }
        for d in by_origin.remove(h.origin_id.as_str()).unwrap_or_default() {
            rows.push(alteration_row(d));
        }
    }
    let mut leftovers: Vec<_> = by_origin.into_values().flatten().collect();
    leftovers.sort_by(|a, b| a.origin_id.cmp(&b.origin_id));
    for d in leftovers {
        rows.push(ReviewRow {
            note: Some("origin is not a claim-worthy derived headline".into()),
            ..alteration_row(d)
        });
    }
    rows
}

/// Collects the approved rows, checking that each carries the fields its
/// kind needs. Unapproved rows are ignored whatever they contain.
pub fn approved_inputs(rows: &[ReviewRow]) -> Result<Approved, ReviewError> {
    let mut out = Approved::default();
    for (i, row) in rows.iter().enumerate().filter(|(_, r)| r.approved) {
        let err = |message: &str| ReviewError {
            row: i + 1,
            origin_id: row.origin_id.clone(),
            message: message.to_string(),
        };
        match row.kind {
            ClaimKind::Original => out.originals.push(row.origin_id.clone()),
            ClaimKind::Negation => {
                let headline = row
                    .proposed_headline
                    .as_deref()
                    .map(str::trim)
                    .filter(|h| !h.is_empty())
                    .ok_or_else(|| err("approved negation has no proposed_headline"))?;
                out.negations.push(NegationProposal {
                    origin_id: row.origin_id.clone(),
                    headline: headline.to_string(),
                });
            }
            ClaimKind::ContextAltered => {
                let (Some(original), Some(replacement)) = (&row.original, &row.replacement) else {
                    return Err(err("approved alteration needs original and replacement"));
                };
                out.alterations.push(AlterationDirective {
                    origin_id: row.origin_id.clone(),
                    original: original.clone(),
                    replacement: replacement.clone(),
                    rationale: row.rationale.clone(),
                    offset: row.offset,
                });
            }
        }
    }
    Ok(out)
}
