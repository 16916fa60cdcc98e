//! Small string utilities shared across modules.

use unicode_normalization::UnicodeNormalization;

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Collapses every whitespace run to a single ASCII space and trims.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Characters stripped from the end of an LLM answer before reading its
/// decision token.
pub(crate) fn is_trailing_noise(c: char) -> bool {
    c.is_whitespace() || matches!(c, '.' | ',' | '!' | '?' | ':' | ';' | '"' | '\'' | '*' | '`')
}

/// Locates the final maximal alphabetic token of `raw` once trailing
/// whitespace, punctuation and markdown emphasis are stripped. Returns the
/// token's byte range in `raw`, or `None` when the stripped text does not
/// end in a letter.
pub(crate) fn final_alpha_token(raw: &str) -> Option<(usize, usize)> {
    let stripped = raw.trim_end_matches(is_trailing_noise);
    let end = stripped.len();
    let start = stripped
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic())
        .last()
        .map(|(i, _)| i)?;
    Some((start, end))
}

/// Substring search that refuses matches glued to surrounding alphanumerics,
/// so "150" is not found inside "1500" and "Iran" is not found in "Tirana".
pub fn contains_bounded(haystack: &str, needle: &str) -> bool {
    find_with(haystack, needle, |c| c.is_alphanumeric())
}

/// Substring search that only enforces boundaries on digit edges: a needle
/// starting or ending in a digit may not extend a longer number, while
/// alphabetic edges match freely ("Israel" is found in "Israeli").
pub fn contains_number_bounded(haystack: &str, needle: &str) -> bool {
    find_with(haystack, needle, |c| c.is_ascii_digit())
}

fn find_with(haystack: &str, needle: &str, glued: impl Fn(char) -> bool) -> bool {
    let Some(first) = needle.chars().next() else {
        return false;
    };
    let last = needle.chars().next_back().unwrap_or(first);
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before_ok = !glued(first) || haystack[..start].chars().next_back().is_none_or(|c| !glued(c));
        let after_ok = !glued(last) || haystack[end..].chars().next().is_none_or(|c| !glued(c));
        if before_ok && after_ok {
            return true;
        }
        from = start + first.len_utf8();
    }
    false
}

/// Removes digit-grouping separators (comma, apostrophe, thin and no-break
/// spaces) that sit between two digits: "1,500" becomes "1500".
pub fn strip_digit_grouping(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        let grouping = matches!(c, ',' | '\'' | '\u{2009}' | '\u{202F}' | '\u{00A0}' | '_');
        if grouping
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            continue;
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn final_token_skips_markdown_and_punctuation() {
        let raw = "The claim is fabricated. **False.**";
        let (s, e) = final_alpha_token(raw).unwrap();
        assert_eq!(&raw[s..e], "False");
        assert_eq!(final_alpha_token("answer 42"), None);
        assert_eq!(final_alpha_token(""), None);
        assert_eq!(final_alpha_token("..."), None);
    }

    #[test]
    fn bounded_search() {
        assert!(!contains_bounded("At least 1500 people", "150"));
        assert!(contains_bounded("At least 150 people", "150"));
        assert!(contains_bounded("150", "150"));
        assert!(!contains_bounded("Israeli forces", "Israel"));
        assert!(contains_number_bounded("Israeli forces", "Israel"));
        assert!(!contains_number_bounded("1500 dead", "150"));
        assert!(contains_number_bounded("150, not 1500", "1500"));
        assert!(!contains_bounded("", "x"));
        assert!(!contains_bounded("abc", ""));
    }

    #[test]
    fn digit_grouping() {
        assert_eq!(strip_digit_grouping("1,500 and 2,000,000"), "1500 and 2000000");
        assert_eq!(strip_digit_grouping("a, b"), "a, b");
        assert_eq!(strip_digit_grouping("1, 2"), "1, 2");
    }

    #[test]
    fn whitespace() {
        assert_eq!(collapse_whitespace("  a \n\t b  "), "a b");
    }
}
