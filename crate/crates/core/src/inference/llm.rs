//! LLM providers: the chat-completion trait, a scripted transcript for
//! offline runs, and a live HTTP client.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::net::{self, ProviderError};

pub trait LlmProvider: Send + Sync {
    fn complete(
        &self,
        system_text: &str,
        user_text: &str,
        temperature: f64,
    ) -> Result<String, ProviderError>;
}

/// Key of a scripted transcript entry: lowercase hex SHA-256 over the
/// system text, a NUL byte, and the user text.
pub fn prompt_digest(system_text: &str, user_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(system_text.as_bytes());
    h.update([0u8]);
    h.update(user_text.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptEntry {
    Responses(Vec<String>),
    Annotated {
        responses: Vec<String>,
        #[allow(dead_code)]
        #[serde(default)]
        note: Option<String>,
    },
}

/// Replays canned answers keyed by [`prompt_digest`]. The n-th call for a
/// digest gets response `n mod len`, so a three-entry script answers run 1,
/// 2 and 3 and then starts over. Unknown digests are errors.
#[derive(Debug, Default)]
pub struct ScriptedLlm {
    script: HashMap<String, Vec<String>>,
    cursor: Mutex<HashMap<String, usize>>,
    calls: AtomicUsize,
}

impl ScriptedLlm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `{digest: [responses]}`; values may also be
    /// `{"note": .., "responses": [..]}`.
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let raw: HashMap<String, ScriptEntry> = serde_json::from_str(json)?;
        let script = raw
            .into_iter()
            .map(|(k, v)| {
                let responses = match v {
                    ScriptEntry::Responses(r) => r,
                    ScriptEntry::Annotated { responses, .. } => responses,
                };
                (k.to_ascii_lowercase(), responses)
            })
            .collect();
        Ok(ScriptedLlm {
            script,
            ..Default::default()
        })
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let raw = fs::read_to_string(path)?;
        Self::from_json(&raw).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Scripts the answers for one exact prompt.
    pub fn respond<S: Into<String>>(
        mut self,
        system_text: &str,
        user_text: &str,
        responses: impl IntoIterator<Item = S>,
    ) -> Self {
        self.insert(system_text, user_text, responses);
        self
    }

    pub fn insert<S: Into<String>>(
        &mut self,
        system_text: &str,
        user_text: &str,
        responses: impl IntoIterator<Item = S>,
    ) {
        self.script.insert(
            prompt_digest(system_text, user_text),
            responses.into_iter().map(Into::into).collect(),
        );
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.cursor.lock().expect("cursor lock").clear();
    }
}

impl LlmProvider for ScriptedLlm {
    fn complete(
        &self,
        system_text: &str,
        user_text: &str,
        _temperature: f64,
    ) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let digest = prompt_digest(system_text, user_text);
        let responses = self
            .script
            .get(&digest)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| ProviderError::Script(format!("no scripted response for prompt digest {digest}")))?;
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let n = cursor.entry(digest).or_insert(0);
        let out = responses[*n % responses.len()].clone();
        *n += 1;
        Ok(out)
    }
}

/// Live chat completion over HTTP POST
/// `{model, messages, temperature, stream: false}`.
#[derive(Debug, Clone)]
pub struct HttpLlmProvider {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpLlmProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpLlmProvider {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            timeout: Duration::from_secs(180),
        }
    }
}

/// Finds the assistant text in common chat-completion response shapes.
pub fn parse_chat_response(body: &serde_json::Value) -> Result<String, ProviderError> {
    let candidates = [
        body.pointer("/choices/0/message/content"),
        body.pointer("/message/content"),
        body.pointer("/choices/0/text"),
        body.get("response"),
        body.get("content"),
    ];
    candidates
        .into_iter()
        .flatten()
        .find_map(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Response("no assistant message in response".into()))
}

impl LlmProvider for HttpLlmProvider {
    fn complete(
        &self,
        system_text: &str,
        user_text: &str,
        temperature: f64,
    ) -> Result<String, ProviderError> {
        net::begin_request(&self.endpoint)?;
        let agent = net::agent(self.timeout, concat!("manicheck/", env!("CARGO_PKG_VERSION")));
        let mut req = agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = req
            .send_json(json!({
                "model": self.model,
                "messages": [
                    {"role": "system", "content": system_text},
                    {"role": "user", "content": user_text},
                ],
                "temperature": temperature,
                "stream": false,
            }))
            .map_err(net::map_ureq)?;
        parse_chat_response(&net::read_json(resp)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_separates_sections() {
        assert_ne!(prompt_digest("ab", "c"), prompt_digest("a", "bc"));
        assert_eq!(prompt_digest("s", "u").len(), 64);
    }

    #[test]
    fn scripted_sequence_cycles() {
        let llm = ScriptedLlm::new().respond("s", "u", ["one", "two", "three"]);
        let got: Vec<String> = (0..4).map(|_| llm.complete("s", "u", 0.1).unwrap()).collect();
        assert_eq!(got, vec!["one", "two", "three", "one"]);
        assert!(matches!(llm.complete("s", "x", 0.1), Err(ProviderError::Script(_))));
        assert_eq!(llm.calls(), 5);
        llm.reset();
        assert_eq!(llm.complete("s", "u", 0.1).unwrap(), "one");
    }

    #[test]
    fn script_file_formats() {
        let d = prompt_digest("s", "u");
        let json = format!(r#"{{"{d}": {{"note": "claim X", "responses": ["a True"]}}, "ff": ["b"]}}"#);
        let llm = ScriptedLlm::from_json(&json).unwrap();
        assert_eq!(llm.complete("s", "u", 0.1).unwrap(), "a True");
    }

    #[test]
    fn chat_response_shapes() {
        let openai = json!({"choices": [{"message": {"role": "assistant", "content": "x True"}}]});
        assert_eq!(parse_chat_response(&openai).unwrap(), "x True");
        let ollama = json!({"message": {"content": "y"}});
        assert_eq!(parse_chat_response(&ollama).unwrap(), "y");
        assert!(parse_chat_response(&json!({"nope": 1})).is_err());
    }
}
