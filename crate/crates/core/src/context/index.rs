//! Append-only in-memory vector index with exact cosine search.

use std::cmp::Ordering;

use super::ContextError;
use crate::exec::Execution;
use crate::model::EmbeddedChunk;

/// Index size from which [`retrieve_top_n`] scans in parallel.
pub const PARALLEL_SCAN_MIN: usize = 4096;

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ContextError> {
    if a.len() != b.len() {
        return Err(ContextError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(ContextError::InvalidArgument("zero or non-finite vector".into()));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    entries: Vec<EmbeddedChunk>,
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<EmbeddedChunk>) -> Result<Self, ContextError> {
        let mut idx = VectorIndex::new();
        for e in entries {
            idx.push(e)?;
        }
        Ok(idx)
    }

    /// Appends an entry; rejects dimension changes and zero vectors.
    pub fn push(&mut self, entry: EmbeddedChunk) -> Result<(), ContextError> {
        if let Some(dim) = self.dimension() {
            if entry.vector.len() != dim {
                return Err(ContextError::DimensionMismatch {
                    expected: dim,
                    found: entry.vector.len(),
                });
            }
        }
        if entry.vector.is_empty() || entry.vector.iter().all(|x| *x == 0.0) {
            return Err(ContextError::InvalidArgument("zero vector".into()));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn dimension(&self) -> Option<usize> {
        self.entries.first().map(|e| e.vector.len())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EmbeddedChunk] {
        &self.entries
    }
}

/// An index entry with its similarity to the query.
#[derive(Debug, Clone, Copy)]
pub struct Scored<'a> {
    pub position: usize,
    pub similarity: f64,
    pub entry: &'a EmbeddedChunk,
}

/// The `n` most similar entries, most similar first; ties go to the
/// earlier-inserted entry.
pub fn retrieve_top_n<'a>(
    index: &'a VectorIndex,
    query: &[f64],
    n: usize,
) -> Result<Vec<Scored<'a>>, ContextError> {
    let exec = if index.len() >= PARALLEL_SCAN_MIN {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    retrieve_top_n_with(index, query, n, exec)
}

pub fn retrieve_top_n_with<'a>(
    index: &'a VectorIndex,
    query: &[f64],
    n: usize,
    exec: Execution,
) -> Result<Vec<Scored<'a>>, ContextError> {
    if index.is_empty() {
        return Err(ContextError::EmptyContext);
    }
    if n == 0 {
        return Err(ContextError::InvalidArgument("n must be at least 1".into()));
    }
    let sims = exec.map(index.entries(), |e| cosine_similarity(query, &e.vector));
    let mut scored = Vec::with_capacity(sims.len());
    for (position, (sim, entry)) in sims.into_iter().zip(index.entries()).enumerate() {
        scored.push(Scored {
            position,
            similarity: sim?,
            entry,
        });
    }
    let by_rank = |a: &Scored, b: &Scored| -> Ordering {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.position.cmp(&b.position))
    };
    if scored.len() > n {
        scored.select_nth_unstable_by(n - 1, by_rank);
        scored.truncate(n);
    }
    scored.sort_by(by_rank);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Chunk;

    fn entry(seq: usize, v: &[f64]) -> EmbeddedChunk {
        EmbeddedChunk {
            chunk: Chunk {
                doc_index: 0,
                seq,
                text: format!("c{seq}"),
                char_start: 0,
            },
            vector: v.to_vec(),
        }
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - 32.0 / (14f64.sqrt() * 77f64.sqrt())).abs() < 1e-12);
        assert!((c - 0.974631846).abs() < 1e-6);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(ContextError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]),
            Err(ContextError::InvalidArgument(_))
        ));
    }

    #[test]
    fn fewer_entries_than_n() {
        let idx = VectorIndex::from_entries(vec![
            entry(0, &[1.0, 0.0]),
            entry(1, &[0.0, 1.0]),
            entry(2, &[1.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(retrieve_top_n(&idx, &[1.0, 0.0], 5).unwrap().len(), 3);
    }

    #[test]
    fn identical_query_ranks_first_and_ties_keep_insertion_order() {
        let idx = VectorIndex::from_entries(vec![
            entry(0, &[0.0, 1.0]),
            entry(1, &[2.0, 0.0]),
            entry(2, &[1.0, 0.0]),
            entry(3, &[1.0, 1.0]),
        ])
        .unwrap();
        let top = retrieve_top_n(&idx, &[1.0, 0.0], 3).unwrap();
        assert_eq!(top.iter().map(|s| s.position).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!((top[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_index_and_bad_vectors() {
        let idx = VectorIndex::new();
        assert!(matches!(retrieve_top_n(&idx, &[1.0], 5), Err(ContextError::EmptyContext)));
        let mut idx = VectorIndex::new();
        idx.push(entry(0, &[1.0, 0.0])).unwrap();
        assert!(idx.push(entry(1, &[1.0, 0.0, 0.0])).is_err());
        assert!(idx.push(entry(1, &[0.0, 0.0])).is_err());
        assert!(retrieve_top_n(&idx, &[1.0], 1).is_err());
    }
}
