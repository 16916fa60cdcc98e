//! Acceptance rules for one prediction.

use serde::{Deserialize, Serialize};

use crate::model::{ClaimKind, ClaimRecord, ManipulationSpan, Prediction, VerdictLabel, Veracity};
use crate::text;

/// Which runs the explanation check reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationScope {
    #[default]
    AllRuns,
    /// Only the runs whose label equals the majority.
    MajorityRuns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub accepted: bool,
    pub predicted_positive: bool,
    pub explanation_valid: Option<bool>,
}

fn normalize(s: &str) -> String {
    text::collapse_whitespace(&text::strip_digit_grouping(&text::nfc(s).to_lowercase()))
}

/// Whether an LLM output names both sides of a context alteration. The
/// match ignores case, Unicode composition, whitespace runs and digit
/// grouping, and a number never matches inside a longer number.
pub fn validate_explanation(raw: &str, span: &ManipulationSpan) -> bool {
    let haystack = normalize(raw);
    [&span.original, &span.replacement].into_iter().all(|fragment| {
        let needle = normalize(fragment);
        !needle.is_empty() && text::contains_number_bounded(&haystack, &needle)
    })
}

/// Scores a prediction against a ground-truth label. A non-conclusive
/// majority counts as the wrong label. When `manipulation` is given and
/// the majority is a correct False, the explanation must also name both
/// sides of the manipulation or the claim counts as missed.
pub fn score_prediction(
    truth: Veracity,
    manipulation: Option<&ManipulationSpan>,
    prediction: &Prediction,
    scope: ExplanationScope,
) -> Score {
    let predicted = effective_label(truth, prediction.majority);
    let explanation_valid = match (manipulation, truth, predicted) {
        (Some(span), Veracity::False, Veracity::False) => {
            let raw = match scope {
                ExplanationScope::AllRuns => prediction.joined_raw(),
                ExplanationScope::MajorityRuns => prediction
                    .runs
                    .iter()
                    .filter(|r| r.label == prediction.majority)
                    .map(|r| r.raw.as_str())
                    .collect::<Vec<_>>()
                    .join("\n\n"),
            };
            Some(validate_explanation(&raw, span))
        }
        _ => None,
    };
    let explained = explanation_valid.unwrap_or(true);
    Score {
        accepted: predicted == truth && explained,
        predicted_positive: predicted.is_fake() && explained,
        explanation_valid,
    }
}

pub fn score_claim(claim: &ClaimRecord, prediction: &Prediction, scope: ExplanationScope) -> Score {
    let span = match claim.kind {
        ClaimKind::ContextAltered => claim.manipulation.as_ref(),
        _ => None,
    };
    score_prediction(claim.label, span, prediction, scope)
}

/// Label a non-conclusive majority is scored as.
pub fn effective_label(truth: Veracity, majority: VerdictLabel) -> Veracity {
    majority.veracity().unwrap_or(match truth {
        Veracity::True => Veracity::False,
        Veracity::False => Veracity::True,
    })
}
