//! Knowledge-grounded inference: prompt the LLM with claim and context,
//! read the final decision word, and vote over repeated runs.

pub mod llm;
pub mod prompt;
pub mod verdict;

use thiserror::Error;

pub use llm::{parse_chat_response, prompt_digest, HttpLlmProvider, LlmProvider, ScriptedLlm};
pub use prompt::{build_prompt, PromptTemplate, TemplateError, NO_CONTEXT_SENTENCE};
pub use verdict::{majority_label, parse_verdict, parse_yes_no};

use crate::model::{Elapsed, Prediction, Verdict};
use crate::net::ProviderError;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;
pub const DEFAULT_RUNS: usize = 3;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("llm provider failed for claim {claim_id}: {source}")]
    Provider {
        claim_id: String,
        #[source]
        source: ProviderError,
    },
}

/// One provider call, parsed. Transport failures are retried once;
/// anything the model actually says (including refusals) is kept as is.
pub fn run_single(
    claim_id: &str,
    claim: &str,
    context: &str,
    template: &PromptTemplate,
    provider: &dyn LlmProvider,
    temperature: f64,
) -> Result<Verdict, InferenceError> {
    if !(0.0..=2.0).contains(&temperature) {
        return Err(InferenceError::InvalidArgument(format!(
            "temperature {temperature} outside [0, 2]"
        )));
    }
    let (system, user) = build_prompt(claim, context, template).map_err(InferenceError::InvalidArgument)?;
    let raw = match provider.complete(&system, &user, temperature) {
        Err(e) if e.is_transport() => {
            tracing::warn!("retrying claim {claim_id} after transport error: {e}");
            provider.complete(&system, &user, temperature)
        }
        other => other,
    }
    .map_err(|source| InferenceError::Provider {
        claim_id: claim_id.to_string(),
        source,
    })?;
    Ok(parse_verdict(&raw))
}

/// Runs inference `runs` times in sequence and records the majority.
/// Timing and context digest are left for the caller to fill in.
pub fn run_majority(
    claim_id: &str,
    claim: &str,
    context: &str,
    template: &PromptTemplate,
    provider: &dyn LlmProvider,
    temperature: f64,
    runs: usize,
) -> Result<Prediction, InferenceError> {
    if runs == 0 || runs.is_multiple_of(2) {
        return Err(InferenceError::InvalidArgument(format!(
            "runs must be odd and positive, got {runs}"
        )));
    }
    let verdicts = (0..runs)
        .map(|_| run_single(claim_id, claim, context, template, provider, temperature))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<_> = verdicts.iter().map(|v| v.label).collect();
    Ok(Prediction {
        majority: majority_label(&labels),
        runs: verdicts,
        context_digest: Vec::new(),
        elapsed: Elapsed::default(),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VerdictLabel;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn scripted(claim: &str, responses: &[&str]) -> (PromptTemplate, ScriptedLlm) {
        let t = PromptTemplate::default_detect();
        let (s, u) = build_prompt(claim, "ctx", &t).unwrap();
        (t, ScriptedLlm::new().respond(&s, &u, responses.iter().copied()))
    }

    #[test]
    fn single_run_parses() {
        let (t, llm) = scripted("C", &["Looks consistent. True"]);
        let v = run_single("c1", "C", "ctx", &t, &llm, DEFAULT_TEMPERATURE).unwrap();
        assert_eq!(v.label, VerdictLabel::True);
        assert_eq!(v.raw, "Looks consistent. True");
        let (t, llm) = scripted("C", &["maybe"]);
        assert_eq!(run_single("c1", "C", "ctx", &t, &llm, 0.1).unwrap().label, VerdictLabel::NonConclusive);
    }

    struct Flaky {
        failures: usize,
        calls: AtomicUsize,
        error: fn() -> ProviderError,
    }

    impl LlmProvider for Flaky {
        fn complete(&self, _: &str, _: &str, _: f64) -> Result<String, ProviderError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err((self.error)())
            } else {
                Ok("fine. False".into())
            }
        }
    }

    fn flaky(failures: usize, error: fn() -> ProviderError) -> Flaky {
        Flaky {
            failures,
            calls: AtomicUsize::new(0),
            error,
        }
    }

    #[test]
    fn transport_error_is_retried_once() {
        let t = PromptTemplate::default_detect();
        let p = flaky(1, || ProviderError::Transport("reset".into()));
        assert_eq!(run_single("c1", "C", "", &t, &p, 0.1).unwrap().label, VerdictLabel::False);
        assert_eq!(p.calls.load(Ordering::SeqCst), 2);

        let p = flaky(2, || ProviderError::Transport("reset".into()));
        match run_single("claim-7", "C", "", &t, &p, 0.1) {
            Err(InferenceError::Provider { claim_id, .. }) => assert_eq!(claim_id, "claim-7"),
            other => panic!("{other:?}"),
        }
        assert_eq!(p.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn non_transport_errors_are_not_retried() {
        let t = PromptTemplate::default_detect();
        let p = flaky(1, || ProviderError::Response("garbled".into()));
        assert!(run_single("c", "C", "", &t, &p, 0.1).is_err());
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn majority_of_three_calls() {
        let (t, llm) = scripted("C", &["a. True", "b. True", "c. False"]);
        let p = run_majority("c1", "C", "ctx", &t, &llm, 0.1, 3).unwrap();
        assert_eq!(p.majority, VerdictLabel::True);
        assert_eq!(p.runs.len(), 3);
        assert_eq!(p.runs[2].label, VerdictLabel::False);
        assert_eq!(llm.calls(), 3);
    }

    #[test]
    fn argument_checks() {
        let (t, llm) = scripted("C", &["True"]);
        assert!(run_majority("c", "C", "ctx", &t, &llm, 0.1, 2).is_err());
        assert!(run_single("c", "C", "ctx", &t, &llm, 2.5).is_err());
        assert_eq!(llm.calls(), 0);
    }
}
