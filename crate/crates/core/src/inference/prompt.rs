//! Prompt templates stored as `---SYSTEM---` / `---USER---` text files.

use std::fs;
use std::path::Path;

use thiserror::Error;

pub const CONTEXT_SLOT: &str = "{CONTEXT}";
pub const CLAIM_SLOT: &str = "{CLAIM}";
pub const HEADLINE_SLOT: &str = "{HEADLINE}";

pub const SYSTEM_MARKER: &str = "---SYSTEM---";
pub const USER_MARKER: &str = "---USER---";

/// Substituted for the context block when no context is available.
pub const NO_CONTEXT_SENTENCE: &str = "No external context is provided; rely on your own knowledge.";

pub const DEFAULT_DETECT_TEMPLATE: &str = include_str!("../../templates/detect.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template is missing the {0} section marker")]
    MissingMarker(&'static str),
    #[error("{section} text must contain {slot} exactly once (found {found})")]
    Placeholder {
        section: &'static str,
        slot: &'static str,
        found: usize,
    },
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

/// A two-part chat prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system_text: String,
    pub user_text: String,
}

fn require_once(
    text: &str,
    section: &'static str,
    slot: &'static str,
) -> Result<(), TemplateError> {
    let found = text.matches(slot).count();
    if found != 1 {
        return Err(TemplateError::Placeholder { section, slot, found });
    }
    Ok(())
}

impl PromptTemplate {
    /// Splits a template file into its system and user sections.
    pub fn parse_sections(text: &str) -> Result<Self, TemplateError> {
        let s = text
            .find(SYSTEM_MARKER)
            .ok_or(TemplateError::MissingMarker(SYSTEM_MARKER))?;
        let u = text
            .find(USER_MARKER)
            .filter(|u| *u > s)
            .ok_or(TemplateError::MissingMarker(USER_MARKER))?;
        let clean = |t: &str| t.trim_matches(|c| c == '\n' || c == '\r').to_string();
        Ok(PromptTemplate {
            system_text: clean(&text[s + SYSTEM_MARKER.len()..u]),
            user_text: clean(&text[u + USER_MARKER.len()..]),
        })
    }

    /// Parses and checks a detection template: `{CONTEXT}` once in the
    /// system text and `{CLAIM}` once in the user text.
    pub fn parse_detect(text: &str) -> Result<Self, TemplateError> {
        let t = Self::parse_sections(text)?;
        require_once(&t.system_text, "system", CONTEXT_SLOT)?;
        require_once(&t.user_text, "user", CLAIM_SLOT)?;
        Ok(t)
    }

    /// Parses a dataset-tool template with `{HEADLINE}` once in the user text.
    pub fn parse_headline(text: &str) -> Result<Self, TemplateError> {
        let t = Self::parse_sections(text)?;
        require_once(&t.user_text, "user", HEADLINE_SLOT)?;
        Ok(t)
    }

    pub fn load_detect(path: &Path) -> Result<Self, TemplateError> {
        Self::parse_detect(&read(path)?)
    }

    pub fn load_headline(path: &Path) -> Result<Self, TemplateError> {
        Self::parse_headline(&read(path)?)
    }

    pub fn default_detect() -> Self {
        Self::parse_detect(DEFAULT_DETECT_TEMPLATE).expect("bundled template is valid")
    }

    /// Fills the headline slot of a dataset-tool template.
    pub fn render_headline(&self, headline: &str) -> (String, String) {
        (
            self.system_text.clone(),
            self.user_text.replace(HEADLINE_SLOT, headline),
        )
    }
}

fn read(path: &Path) -> Result<String, TemplateError> {
    fs::read_to_string(path).map_err(|e| TemplateError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::default_detect()
    }
}

/// Fills a detection template. Empty (whitespace-only) context is replaced
/// by [`NO_CONTEXT_SENTENCE`] so the prompt keeps its shape.
pub fn build_prompt(
    claim: &str,
    context: &str,
    template: &PromptTemplate,
) -> Result<(String, String), String> {
    let claim = claim.trim();
    if claim.is_empty() {
        return Err("claim is empty".into());
    }
    let context = if context.trim().is_empty() {
        NO_CONTEXT_SENTENCE
    } else {
        context
    };
    // Substitute the claim first so a context mentioning "{CLAIM}" stays literal.
    let user = template.user_text.replace(CLAIM_SLOT, claim);
    let system = template.system_text.replace(CONTEXT_SLOT, context);
    Ok((system, user))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_template_has_parts_in_order() {
        let t = PromptTemplate::default_detect();
        let task = t.system_text.find("Decide whether").unwrap();
        let ctx = t.system_text.find(CONTEXT_SLOT).unwrap();
        let rules = t.system_text.find("Rules:").unwrap();
        let output = t.system_text.find("Output format:").unwrap();
        assert!(task < ctx && ctx < rules && rules < output);
        assert!(t.system_text.trim_end().ends_with("write nothing after that word."));
        assert_eq!(t.user_text.matches(CLAIM_SLOT).count(), 1);
    }

    #[test]
    fn substitution() {
        let t = PromptTemplate::default_detect();
        let (system, user) = build_prompt("C", "K", &t).unwrap();
        let k = system.find("\nK\n").unwrap();
        assert!(k < system.find("Output format:").unwrap());
        assert!(user.contains("Statement: C"));
        assert!(!system.contains(CONTEXT_SLOT) && !user.contains(CLAIM_SLOT));
    }

    #[test]
    fn empty_context_uses_fallback_sentence() {
        let t = PromptTemplate::default_detect();
        let (system, _) = build_prompt("C", "  ", &t).unwrap();
        assert!(system.contains(NO_CONTEXT_SENTENCE));
        assert!(!system.contains(CONTEXT_SLOT));
    }

    #[test]
    fn pure_and_rejects_empty_claim() {
        let t = PromptTemplate::default_detect();
        assert_eq!(build_prompt("C", "K", &t), build_prompt("C", "K", &t));
        assert!(build_prompt(" ", "K", &t).is_err());
    }

    #[test]
    fn missing_placeholders_fail_at_load() {
        let err = PromptTemplate::parse_detect("---SYSTEM---\nno slot\n---USER---\n{CLAIM}").unwrap_err();
        assert_eq!(
            err,
            TemplateError::Placeholder {
                section: "system",
                slot: CONTEXT_SLOT,
                found: 0
            }
        );
        assert!(PromptTemplate::parse_detect("{CONTEXT} {CLAIM}").is_err());
        assert!(PromptTemplate::parse_detect("---SYSTEM---\n{CONTEXT}\n---USER---\n{CLAIM} {CLAIM}").is_err());
    }

    #[test]
    fn bundled_dataset_templates_parse() {
        for t in [
            include_str!("../../templates/claimworthy.txt"),
            include_str!("../../templates/negation.txt"),
            include_str!("../../templates/extraction.txt"),
        ] {
            PromptTemplate::parse_headline(t).unwrap();
        }
    }
}
