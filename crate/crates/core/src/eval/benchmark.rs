//! Loader for external fact-checking benchmarks in a normalized JSONL
//! form: `{"claim": str, "label": str, "evidence": [str]?, "id": str?}`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Veracity;

/// How a benchmark's label scale maps onto true/false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Labels are already `true` / `false`.
    Binary,
    /// true, mostly-true → true; false, pants-fire → false; half-true and
    /// barely-true are dropped.
    #[serde(rename = "sixway")]
    SixWayCollapse,
    /// true → true; false → false; half-true is dropped.
    #[serde(rename = "threeway")]
    ThreeWayCollapse,
}

impl FromStr for LabelScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(LabelScheme::Binary),
            "sixway" => Ok(LabelScheme::SixWayCollapse),
            "threeway" => Ok(LabelScheme::ThreeWayCollapse),
            _ => Err(format!("unknown label scheme {s:?} (expected binary, sixway or threeway)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkAdapterConfig {
    pub scheme: LabelScheme,
    pub evidence_mode: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkClaim {
    pub id: String,
    pub claim: String,
    pub truth: Veracity,
    /// Present only in evidence mode.
    pub evidence: Option<Vec<String>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchmarkError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Deserialize)]
struct Row {
    claim: String,
    label: String,
    #[serde(default)]
    evidence: Option<Vec<String>>,
    #[serde(default)]
    id: Option<String>,
}

fn canonical_label(label: &str) -> String {
    let l: String = label
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == '_' || c == ' ' { '-' } else { c })
        .collect();
    match l.as_str() {
        "pants-on-fire" | "pants-on-fire!" => "pants-fire".into(),
        _ => l,
    }
}

/// `Some(Some(v))` keeps the row with truth `v`, `Some(None)` drops it,
/// `None` means the label is not part of the scheme.
fn map_label(scheme: LabelScheme, label: &str) -> Option<Option<Veracity>> {
    use Veracity::{False, True};
    match (scheme, label) {
        (_, "true") => Some(Some(True)),
        (_, "false") => Some(Some(False)),
        (LabelScheme::SixWayCollapse, "mostly-true") => Some(Some(True)),
        (LabelScheme::SixWayCollapse, "pants-fire") => Some(Some(False)),
        (LabelScheme::SixWayCollapse, "half-true" | "barely-true") => Some(None),
        (LabelScheme::ThreeWayCollapse, "half-true") => Some(None),
        _ => None,
    }
}

/// Parses benchmark rows, applying the scheme's label map. Rows without
/// an `id` are named after their line number.
pub fn parse_benchmark(
    text: &str,
    origin: &str,
    config: &BenchmarkAdapterConfig,
) -> Result<Vec<BenchmarkClaim>, BenchmarkError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| BenchmarkError::Format {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let row: Row = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let label = canonical_label(&row.label);
        let truth = map_label(config.scheme, &label)
            .ok_or_else(|| err(format!("unknown label {:?} for scheme {:?}", row.label, config.scheme)))?;
        let Some(truth) = truth else {
            continue;
        };
        if row.claim.trim().is_empty() {
            return Err(err("claim is empty".into()));
        }
        out.push(BenchmarkClaim {
            id: row.id.unwrap_or_else(|| format!("line-{:06}", i + 1)),
            claim: row.claim.trim().to_string(),
            truth,
            evidence: config.evidence_mode.then(|| row.evidence.unwrap_or_default()),
        });
    }
    Ok(out)
}

pub fn load_benchmark(path: &Path, config: &BenchmarkAdapterConfig) -> Result<Vec<BenchmarkClaim>, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|e| BenchmarkError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_benchmark(&text, &path.display().to_string(), config)
}
