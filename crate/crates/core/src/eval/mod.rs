//! Evaluation harness: run the detector over a dataset or benchmark,
//! score every claim and aggregate the report.

pub mod benchmark;
pub mod metrics;
pub mod score;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use benchmark::{load_benchmark, parse_benchmark, BenchmarkAdapterConfig, BenchmarkClaim, BenchmarkError, LabelScheme};
pub use metrics::{compute_metrics, quantiles, ConfusionMatrix, Metrics, Quantiles};
pub use score::{effective_label, score_claim, score_prediction, validate_explanation, ExplanationScope, Score};

use crate::exec::Execution;
use crate::model::{ClaimKind, ClaimRecord, ManipulationSpan, Prediction, VerdictLabel, Veracity};
use crate::pipeline::{DetectOptions, Detector, Mode, PipelineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMode {
    Retrieval,
    Ablation,
    /// Benchmark claims answered from their bundled evidence.
    Evidence,
}

impl From<Mode> for ReportMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Retrieval => ReportMode::Retrieval,
            Mode::Ablation => ReportMode::Ablation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimOutcome {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ClaimKind>,
    pub ground_truth: Veracity,
    pub majority: VerdictLabel,
    pub run_labels: Vec<VerdictLabel>,
    pub accepted: bool,
    pub predicted_positive: bool,
    pub explanation_valid: Option<bool>,
    pub context_build_seconds: f64,
    pub inference_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ClaimOutcome {
    fn scored(
        id: &str,
        kind: Option<ClaimKind>,
        truth: Veracity,
        manipulation: Option<&ManipulationSpan>,
        result: Result<Prediction, PipelineError>,
        scope: ExplanationScope,
    ) -> Self {
        match result {
            Ok(p) => {
                let s = score_prediction(truth, manipulation, &p, scope);
                ClaimOutcome {
                    id: id.to_string(),
                    kind,
                    ground_truth: truth,
                    majority: p.majority,
                    run_labels: p.runs.iter().map(|r| r.label).collect(),
                    accepted: s.accepted,
                    predicted_positive: s.predicted_positive,
                    explanation_valid: s.explanation_valid,
                    context_build_seconds: p.elapsed.context_build_seconds,
                    inference_seconds: p.elapsed.inference_seconds,
                    warnings: p.warnings,
                    error: None,
                }
            }
            Err(e) => {
                tracing::warn!("claim {id} failed: {e}");
                ClaimOutcome {
                    id: id.to_string(),
                    kind,
                    ground_truth: truth,
                    majority: VerdictLabel::NonConclusive,
                    run_labels: Vec::new(),
                    accepted: false,
                    predicted_positive: effective_label(truth, VerdictLabel::NonConclusive).is_fake(),
                    explanation_valid: None,
                    context_build_seconds: 0.0,
                    inference_seconds: 0.0,
                    warnings: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub context_build: Quantiles,
    pub inference: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: ReportMode,
    pub config_digest: String,
    pub per_claim: Vec<ClaimOutcome>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub per_kind_accuracy: BTreeMap<ClaimKind, f64>,
    pub per_kind_counts: BTreeMap<ClaimKind, usize>,
    pub non_conclusive_rate_runs: Option<f64>,
    pub non_conclusive_rate_majority: Option<f64>,
    pub timing: TimingSummary,
}

impl EvalReport {
    /// Aggregates outcomes; `per_claim` ends up sorted by claim id.
    pub fn from_outcomes(mode: ReportMode, config_digest: String, mut per_claim: Vec<ClaimOutcome>) -> Self {
        per_claim.sort_by(|a, b| a.id.cmp(&b.id));
        let confusion = confusion_of(&per_claim);
        let mut per_kind_counts = BTreeMap::new();
        let mut accepted_per_kind: BTreeMap<ClaimKind, usize> = BTreeMap::new();
        for o in &per_claim {
            if let Some(kind) = o.kind {
                *per_kind_counts.entry(kind).or_insert(0) += 1;
                *accepted_per_kind.entry(kind).or_insert(0) += usize::from(o.accepted);
            }
        }
        let per_kind_accuracy = per_kind_counts
            .iter()
            .map(|(k, n)| (*k, accepted_per_kind[k] as f64 / *n as f64))
            .collect();
        let runs: Vec<VerdictLabel> = per_claim.iter().flat_map(|o| o.run_labels.iter().copied()).collect();
        let rate = |hits: usize, total: usize| (total > 0).then(|| hits as f64 / total as f64);
        let non_conclusive_rate_runs = rate(
            runs.iter().filter(|l| **l == VerdictLabel::NonConclusive).count(),
            runs.len(),
        );
        let non_conclusive_rate_majority = rate(
            per_claim.iter().filter(|o| o.majority == VerdictLabel::NonConclusive).count(),
            per_claim.len(),
        );
        let times = |f: fn(&ClaimOutcome) -> f64| quantiles(&per_claim.iter().filter(|o| o.error.is_none()).map(f).collect::<Vec<_>>());
        let timing = TimingSummary {
            context_build: times(|o| o.context_build_seconds),
            inference: times(|o| o.inference_seconds),
        };
        EvalReport {
            mode,
            config_digest,
            metrics: compute_metrics(&confusion),
            confusion,
            per_claim,
            per_kind_accuracy,
            per_kind_counts,
            non_conclusive_rate_runs,
            non_conclusive_rate_majority,
            timing,
        }
    }

    /// Rebuilds the matrix and metrics from the per-claim outcomes.
    pub fn recompute(&self) -> (ConfusionMatrix, Metrics) {
        let cm = confusion_of(&self.per_claim);
        (cm, compute_metrics(&cm))
    }
}

fn confusion_of(outcomes: &[ClaimOutcome]) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for o in outcomes {
        cm.record(o.ground_truth, o.predicted_positive);
    }
    cm
}

fn scope_of(detector: &Detector) -> ExplanationScope {
    if detector.config().explain_majority_runs_only {
        ExplanationScope::MajorityRuns
    } else {
        ExplanationScope::AllRuns
    }
}

fn run_dataset(dataset: &[ClaimRecord], detector: &Detector, mode: Mode) -> EvalReport {
    let scope = scope_of(detector);
    let exec = Execution::with_parallelism(detector.config().parallel);
    let outcomes = exec.map(dataset, |claim| {
        let opts = DetectOptions {
            claim_id: Some(claim.id.clone()),
            region: Some(claim.region.clone()),
            date: Some(claim.published_date),
        };
        let span = match claim.kind {
            ClaimKind::ContextAltered => claim.manipulation.as_ref(),
            _ => None,
        };
        let result = detector.detect_as(mode, &claim.headline, &opts);
        ClaimOutcome::scored(&claim.id, Some(claim.kind), claim.label, span, result, scope)
    });
    EvalReport::from_outcomes(mode.into(), detector.config().digest(), outcomes)
}

/// Runs the detector, in its configured mode, over every claim. Failures
/// of individual claims are recorded as non-conclusive with an error note.
pub fn evaluate_dataset(dataset: &[ClaimRecord], detector: &Detector) -> EvalReport {
    run_dataset(dataset, detector, detector.config().mode)
}

/// The same protocol with retrieval switched off.
pub fn run_ablation(dataset: &[ClaimRecord], detector: &Detector) -> EvalReport {
    run_dataset(dataset, detector, Mode::Ablation)
}

/// Scores benchmark claims. Claims carrying evidence are answered from it
/// without any search; the rest go through the configured mode.
pub fn run_benchmark(claims: &[BenchmarkClaim], config: &BenchmarkAdapterConfig, detector: &Detector) -> EvalReport {
    let exec = Execution::with_parallelism(detector.config().parallel);
    let outcomes = exec.map(claims, |c| {
        let opts = DetectOptions {
            claim_id: Some(c.id.clone()),
            ..DetectOptions::default()
        };
        let result = match (&c.evidence, config.evidence_mode) {
            (Some(evidence), true) => detector.detect_with_evidence(&c.claim, evidence, &opts),
            _ => detector.detect(&c.claim, &opts),
        };
        ClaimOutcome::scored(&c.id, None, c.truth, None, result, ExplanationScope::AllRuns)
    });
    let mode = match (config.evidence_mode, detector.config().mode) {
        (_, Mode::Ablation) => ReportMode::Ablation,
        (true, Mode::Retrieval) => ReportMode::Evidence,
        (false, Mode::Retrieval) => ReportMode::Retrieval,
    };
    EvalReport::from_outcomes(mode, detector.config().digest(), outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(id: &str, kind: ClaimKind, majority: VerdictLabel, accepted: bool, positive: bool) -> ClaimOutcome {
        ClaimOutcome {
            id: id.into(),
            kind: Some(kind),
            ground_truth: kind.ground_truth(),
            majority,
            run_labels: vec![majority; 3],
            accepted,
            predicted_positive: positive,
            explanation_valid: None,
            context_build_seconds: 1.0,
            inference_seconds: 2.0,
            warnings: Vec::new(),
            error: None,
        }
    }

    #[test]
    fn empty_report() {
        let r = EvalReport::from_outcomes(ReportMode::Retrieval, "d".into(), Vec::new());
        assert_eq!(r.confusion, ConfusionMatrix::default());
        assert_eq!(r.metrics, Metrics::default());
        assert!(r.per_kind_accuracy.is_empty());
        assert_eq!(r.non_conclusive_rate_runs, None);
    }

    #[test]
    fn aggregation_is_order_independent() {
        use VerdictLabel::*;
        let rows = vec![
            outcome("b", ClaimKind::Original, True, true, false),
            outcome("a", ClaimKind::Negation, False, true, true),
            outcome("c", ClaimKind::Original, NonConclusive, false, true),
        ];
        let r1 = EvalReport::from_outcomes(ReportMode::Retrieval, "d".into(), rows.clone());
        let mut rev = rows;
        rev.reverse();
        let r2 = EvalReport::from_outcomes(ReportMode::Retrieval, "d".into(), rev);
        assert_eq!(r1, r2);
        assert_eq!(r1.per_claim.iter().map(|o| o.id.as_str()).collect::<Vec<_>>(), vec!["a", "b", "c"]);
        assert_eq!(r1.confusion, ConfusionMatrix::new(1, 1, 0, 1));
        assert_eq!(r1.per_kind_accuracy[&ClaimKind::Original], 0.5);
        assert_eq!(r1.per_kind_counts.values().sum::<usize>() as u64, r1.confusion.total());
        assert_eq!(r1.non_conclusive_rate_majority, Some(1.0 / 3.0));
        assert_eq!(r1.timing.inference.median, Some(2.0));
        assert_eq!(r1.recompute(), (r1.confusion, r1.metrics));
    }

    #[test]
    fn failed_claims_count_as_wrong() {
        let err = Err(PipelineError::new(crate::pipeline::Stage::Search, "boom"));
        let o = ClaimOutcome::scored("x", Some(ClaimKind::Original), Veracity::True, None, err, ExplanationScope::AllRuns);
        assert_eq!(o.majority, VerdictLabel::NonConclusive);
        assert!(!o.accepted && o.predicted_positive);
        assert_eq!(o.error.as_deref(), Some("search stage: boom"));
    }
}
