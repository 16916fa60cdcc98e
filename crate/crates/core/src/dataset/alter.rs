//! Human-authored context alterations and their application.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_claim_record, ClaimKind, ClaimRecord, ManipulationSpan, Veracity};
use crate::text;

/// Replace `original` with `replacement` in the headline of `origin_id`.
/// `offset` (a character offset into the headline) picks one occurrence
/// when the fragment appears more than once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlterationDirective {
    pub origin_id: String,
    pub original: String,
    pub replacement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlterationError {
    #[error("{origin_id}: {original:?} does not occur in the headline")]
    NotFound { origin_id: String, original: String },
    #[error("{origin_id}: invalid directive: {reason}")]
    InvalidDirective { origin_id: String, reason: String },
    #[error("{origin_id}: {original:?} occurs {count} times; give an offset to pick one")]
    Ambiguous {
        origin_id: String,
        original: String,
        count: usize,
    },
}

/// Templates a reviewer may use instead of spelling out the replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectiveTemplate {
    /// Multiply the number in `original` by ten.
    NumericMagnitude,
    /// Use `replacement` verbatim (a name, place or title swap).
    EntitySwap,
}

/// A directive as written in a directives file: the replacement may be
/// left to a template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectiveInput {
    pub origin_id: String,
    pub original: String,
    #[serde(default)]
    pub replacement: Option<String>,
    #[serde(default)]
    pub template: Option<DirectiveTemplate>,
    #[serde(default)]
    pub rationale: Option<String>,
    #[serde(default)]
    pub offset: Option<usize>,
}

impl DirectiveInput {
    pub fn resolve(self) -> Result<AlterationDirective, AlterationError> {
        let invalid = |reason: String| AlterationError::InvalidDirective {
            origin_id: self.origin_id.clone(),
            reason,
        };
        let replacement = match (self.template, &self.replacement) {
            (_, Some(r)) => r.clone(),
            (Some(DirectiveTemplate::NumericMagnitude), None) => magnify(&self.original)
                .ok_or_else(|| invalid(format!("{:?} is not a number", self.original)))?,
            (_, None) => return Err(invalid("replacement missing".into())),
        };
        let rationale = self.rationale.clone().or_else(|| match self.template {
            Some(DirectiveTemplate::NumericMagnitude) => Some("numeric magnitude increase".into()),
            Some(DirectiveTemplate::EntitySwap) => Some("entity swap".into()),
            None => None,
        });
        Ok(AlterationDirective {
            origin_id: self.origin_id,
            original: self.original,
            replacement,
            rationale,
            offset: self.offset,
        })
    }
}

/// Ten times the number written in `s`, without digit grouping:
/// "150" → "1500", "2.5" → "25", "1,200" → "12000".
pub fn magnify(s: &str) -> Option<String> {
    let plain = text::strip_digit_grouping(s.trim());
    if plain.is_empty() || !plain.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    match plain.split_once('.') {
        None => {
            let int = plain.trim_start_matches('0');
            Some(if int.is_empty() { "0".into() } else { format!("{int}0") })
        }
        Some((int, frac)) if !frac.contains('.') && !frac.is_empty() => {
            let (head, tail) = frac.split_at(1);
            let int = format!("{int}{head}");
            let int = int.trim_start_matches('0');
            let int = if int.is_empty() { "0" } else { int };
            Some(if tail.is_empty() { int.to_string() } else { format!("{int}.{tail}") })
        }
        _ => None,
    }
}

/// Char offsets of every non-overlapping occurrence of `needle`.
fn occurrences(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    haystack
        .match_indices(needle)
        .map(|(byte, _)| (haystack[..byte].chars().count(), byte))
        .collect()
}

/// Builds the `ContextAltered` record for `directive` applied to `origin`.
pub fn apply_alteration(
    origin: &ClaimRecord,
    directive: &AlterationDirective,
    id: &str,
) -> Result<ClaimRecord, AlterationError> {
    let origin_id = origin.id.clone();
    let invalid = |reason: &str| AlterationError::InvalidDirective {
        origin_id: origin_id.clone(),
        reason: reason.to_string(),
    };
    if origin.kind != ClaimKind::Original {
        return Err(invalid("origin is not an original headline"));
    }
    if directive.origin_id != origin.id {
        return Err(invalid("directive names a different origin"));
    }
    let original = directive.original.as_str();
    let replacement = directive.replacement.as_str();
    if original.trim().is_empty() || replacement.trim().is_empty() {
        return Err(invalid("original and replacement must be non-empty"));
    }
    if original.trim().to_lowercase() == replacement.trim().to_lowercase() {
        return Err(invalid("replacement equals original"));
    }

    let found = occurrences(&origin.headline, original);
    let byte = match (directive.offset, found.len()) {
        (_, 0) => None,
        (Some(offset), _) => found.iter().find(|(c, _)| *c == offset).map(|(_, b)| *b),
        (None, 1) => Some(found[0].1),
        (None, count) => {
            return Err(AlterationError::Ambiguous {
                origin_id,
                original: original.to_string(),
                count,
            })
        }
    };
    let byte = byte.ok_or_else(|| AlterationError::NotFound {
        origin_id: origin_id.clone(),
        original: original.to_string(),
    })?;

    let headline = format!(
        "{}{}{}",
        &origin.headline[..byte],
        replacement,
        &origin.headline[byte + original.len()..]
    );
    if headline.replacen(replacement, original, 1) != origin.headline {
        return Err(invalid("replacement already occurs earlier in the headline; the edit would not be reversible"));
    }
    let record = ClaimRecord {
        id: id.to_string(),
        headline,
        kind: ClaimKind::ContextAltered,
        label: Veracity::False,
        provider: origin.provider.clone(),
        region: origin.region.clone(),
        published_date: origin.published_date,
        origin_id: Some(origin.id.clone()),
        manipulation: Some(ManipulationSpan {
            original: original.to_string(),
            replacement: replacement.to_string(),
        }),
    };
    let violations = validate_claim_record(&record);
    if !violations.is_empty() {
        let reasons: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(invalid(&reasons.join("; ")));
    }
    Ok(record)
}
