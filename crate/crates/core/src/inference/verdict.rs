//! Decision-token parsing and majority voting.

use crate::model::{Verdict, VerdictLabel};
use crate::text::final_alpha_token;

/// Separators trimmed from the explanation once the decision token is cut off.
fn is_explanation_tail(c: char) -> bool {
    c.is_whitespace() || matches!(c, '*' | '_' | '`' | '#' | ':' | '-' | '>')
}

/// Reads the final word of an LLM answer as the decision. Anything other
/// than True/False (any case) is non-conclusive. Never fails.
pub fn parse_verdict(raw: &str) -> Verdict {
    if let Some((start, end)) = final_alpha_token(raw) {
        let token = &raw[start..end];
        let label = if token.eq_ignore_ascii_case("true") {
            Some(VerdictLabel::True)
        } else if token.eq_ignore_ascii_case("false") {
            Some(VerdictLabel::False)
        } else {
            None
        };
        if let Some(label) = label {
            return Verdict {
                label,
                explanation: raw[..start].trim_end_matches(is_explanation_tail).to_string(),
                raw: raw.to_string(),
            };
        }
    }
    Verdict {
        label: VerdictLabel::NonConclusive,
        explanation: raw.to_string(),
        raw: raw.to_string(),
    }
}

/// Reads a trailing Yes/No answer by the same stripping rules.
pub fn parse_yes_no(raw: &str) -> Option<bool> {
    let (start, end) = final_alpha_token(raw)?;
    let token = &raw[start..end];
    if token.eq_ignore_ascii_case("yes") {
        Some(true)
    } else if token.eq_ignore_ascii_case("no") {
        Some(false)
    } else {
        None
    }
}

/// The label held by a strict majority of runs (two of three), else
/// non-conclusive. Non-conclusive is itself a votable label.
pub fn majority_label(labels: &[VerdictLabel]) -> VerdictLabel {
    [VerdictLabel::True, VerdictLabel::False, VerdictLabel::NonConclusive]
        .into_iter()
        .find(|l| 2 * labels.iter().filter(|x| *x == l).count() > labels.len())
        .unwrap_or(VerdictLabel::NonConclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use VerdictLabel::*;

    #[test]
    fn trailing_true() {
        let v = parse_verdict("The context confirms every detail of the claim. True");
        assert_eq!(v.label, True);
        assert_eq!(v.explanation, "The context confirms every detail of the claim.");
    }

    #[test]
    fn i_dont_know_is_non_conclusive() {
        let raw = "I don't know whether this is accurate.";
        let v = parse_verdict(raw);
        assert_eq!(v.label, NonConclusive);
        assert_eq!(v.explanation, raw);
    }

    #[test]
    fn markdown_bold_false() {
        let v = parse_verdict("The claim is fabricated. **False.**");
        assert_eq!(v.label, False);
        assert_eq!(v.explanation, "The claim is fabricated.");
    }

    #[test]
    fn glued_words_do_not_count() {
        assert_eq!(parse_verdict("This is untrue").label, NonConclusive);
        assert_eq!(parse_verdict("Decision: FALSE").label, False);
        assert_eq!(parse_verdict("Decision: FALSE").explanation, "Decision");
        assert_eq!(parse_verdict("true").explanation, "");
        assert_eq!(parse_verdict("").label, NonConclusive);
        assert_eq!(parse_verdict("Answer: True (confidence 90)").label, NonConclusive);
    }

    #[test]
    fn yes_no() {
        assert_eq!(parse_yes_no("It is a question. No."), Some(false));
        assert_eq!(parse_yes_no("**Yes**"), Some(true));
        assert_eq!(parse_yes_no("maybe"), None);
    }

    #[test]
    fn votes() {
        assert_eq!(majority_label(&[True, True, False]), True);
        assert_eq!(majority_label(&[True, False, NonConclusive]), NonConclusive);
        assert_eq!(majority_label(&[NonConclusive, NonConclusive, True]), NonConclusive);
        assert_eq!(majority_label(&[False, False, False]), False);
        assert_eq!(majority_label(&[]), NonConclusive);
    }
}
