//! Assembly of reviewed originals, negations and alterations into the
//! labeled dataset.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::alter::{apply_alteration, AlterationDirective, AlterationError};
use super::review::NegationProposal;
use crate::model::{validate_claim_record, ClaimKind, ClaimRecord, Veracity};
use crate::text;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("{kind} record references unknown origin {origin_id}")]
    DanglingOrigin { kind: ClaimKind, origin_id: String },
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("record {id} is invalid: {rules}")]
    Invalid { id: String, rules: String },
    #[error(transparent)]
    Alteration(#[from] AlterationError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total: usize,
    pub per_kind: BTreeMap<ClaimKind, usize>,
    pub per_provider: BTreeMap<String, usize>,
    pub per_region: BTreeMap<String, usize>,
}

impl DatasetSummary {
    pub fn of(records: &[ClaimRecord]) -> Self {
        let mut s = DatasetSummary {
            total: records.len(),
            ..Default::default()
        };
        for r in records {
            *s.per_kind.entry(r.kind).or_default() += 1;
            *s.per_provider.entry(r.provider.clone()).or_default() += 1;
            *s.per_region.entry(r.region.clone()).or_default() += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledDataset {
    pub records: Vec<ClaimRecord>,
    pub summary: DatasetSummary,
}

/// Id of the n-th (1-based) negation derived from `origin_id`.
pub fn negation_id(origin_id: &str, n: usize) -> String {
    format!("{origin_id}-neg{n}")
}

/// Id of the n-th (1-based) alteration derived from `origin_id`.
pub fn alteration_id(origin_id: &str, n: usize) -> String {
    format!("{origin_id}-alt{n}")
}

fn check(record: &ClaimRecord) -> Result<(), AssembleError> {
    let violations = validate_claim_record(record);
    if violations.is_empty() {
        return Ok(());
    }
    Err(AssembleError::Invalid {
        id: record.id.clone(),
        rules: violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
    })
}

/// Builds the dataset. Derived records take their metadata from the origin
/// they name; the output is sorted by id.
pub fn assemble_dataset(
    originals: Vec<ClaimRecord>,
    negations: &[NegationProposal],
    alterations: &[AlterationDirective],
) -> Result<AssembledDataset, AssembleError> {
    let mut by_id: HashMap<String, ClaimRecord> = HashMap::new();
    for record in originals {
        if record.kind != ClaimKind::Original {
            return Err(AssembleError::Invalid {
                id: record.id.clone(),
                rules: format!("expected an original record, found {}", record.kind),
            });
        }
        check(&record)?;
        if by_id.contains_key(&record.id) {
            return Err(AssembleError::DuplicateId(record.id));
        }
        by_id.insert(record.id.clone(), record);
    }

    let origin = |kind, id: &str| {
        by_id.get(id).ok_or_else(|| AssembleError::DanglingOrigin {
            kind,
            origin_id: id.to_string(),
        })
    };
    let mut derived = Vec::new();
    let mut seen: HashMap<(ClaimKind, &str), usize> = HashMap::new();
    for n in negations {
        let o = origin(ClaimKind::Negation, &n.origin_id)?;
        let count = seen.entry((ClaimKind::Negation, &n.origin_id)).or_default();
        *count += 1;
        let record = ClaimRecord {
            id: negation_id(&o.id, *count),
            headline: text::nfc(n.headline.trim()),
            kind: ClaimKind::Negation,
            label: Veracity::False,
            provider: o.provider.clone(),
            region: o.region.clone(),
            published_date: o.published_date,
            origin_id: Some(o.id.clone()),
            manipulation: None,
        };
        check(&record)?;
        derived.push(record);
    }
    for d in alterations {
        let o = origin(ClaimKind::ContextAltered, &d.origin_id)?;
        let count = seen.entry((ClaimKind::ContextAltered, &d.origin_id)).or_default();
        *count += 1;
        derived.push(apply_alteration(o, d, &alteration_id(&o.id, *count))?);
    }

    let mut records: Vec<ClaimRecord> = by_id.into_values().chain(derived).collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in records.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(AssembleError::DuplicateId(pair[0].id.clone()));
        }
    }
    let summary = DatasetSummary::of(&records);
    Ok(AssembledDataset { records, summary })
}
