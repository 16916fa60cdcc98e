//! Embedding providers and batched chunk embedding.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::json;

use super::ContextError;
use crate::model::{Chunk, EmbeddedChunk};
use crate::net::{self, ProviderError};

/// Maximum number of texts sent in one provider call.
pub const EMBED_BATCH_SIZE: usize = 64;

pub trait EmbeddingProvider: Send + Sync {
    /// Vector length, when known before the first call.
    fn dimension(&self) -> Option<usize>;

    /// One vector per input text, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

/// Deterministic 16-dimensional embedding for offline runs.
///
/// Character `c` at position `i` adds `hash(c) / (1 + i)` to bucket
/// `i mod 16`, where `hash` is SplitMix64 of the code point xor a fixed
/// seed, mapped onto `[-1, 1)` through its top 53 bits. The sum is
/// L2-normalized; empty text (or a zero sum) yields the first basis vector.
#[derive(Debug, Default)]
pub struct MockEmbedding16 {
    calls: AtomicUsize,
}

pub const MOCK_DIMENSION: usize = 16;

const MOCK_SEED: u64 = 0x616e_6963_6865_636b;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn char_weight(c: char) -> f64 {
    let h = splitmix64(MOCK_SEED ^ c as u64);
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

impl MockEmbedding16 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn embed_one(text: &str) -> Vec<f64> {
        let mut v = [0.0f64; MOCK_DIMENSION];
        for (i, c) in text.chars().enumerate() {
            v[i % MOCK_DIMENSION] += char_weight(c) / (1.0 + i as f64);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            let mut basis = vec![0.0; MOCK_DIMENSION];
            basis[0] = 1.0;
            return basis;
        }
        v.iter().map(|x| x / norm).collect()
    }
}

impl EmbeddingProvider for MockEmbedding16 {
    fn dimension(&self) -> Option<usize> {
        Some(MOCK_DIMENSION)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}

/// Live embedding over HTTP POST `{model, input}` returning `{embeddings}`.
#[derive(Debug, Clone)]
pub struct HttpEmbeddingProvider {
    pub endpoint: String,
    pub model: String,
    pub dimension: Option<usize>,
    pub timeout: Duration,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpEmbeddingProvider {
            endpoint: endpoint.into(),
            model: model.into(),
            dimension: None,
            timeout: Duration::from_secs(60),
        }
    }
}

/// Reads `{"embeddings": [[..]]}`, also accepting `{"data": [{"embedding": [..]}]}`.
pub fn parse_embedding_response(body: &serde_json::Value) -> Result<Vec<Vec<f64>>, ProviderError> {
    let to_vec = |v: &serde_json::Value| -> Option<Vec<f64>> {
        v.as_array()?.iter().map(|x| x.as_f64()).collect()
    };
    if let Some(arr) = body.get("embeddings").and_then(|e| e.as_array()) {
        return arr
            .iter()
            .map(|v| to_vec(v).ok_or_else(|| ProviderError::Response("non-numeric embedding".into())))
            .collect();
    }
    if let Some(arr) = body.get("data").and_then(|e| e.as_array()) {
        return arr
            .iter()
            .map(|d| {
                d.get("embedding")
                    .and_then(to_vec)
                    .ok_or_else(|| ProviderError::Response("bad embedding item".into()))
            })
            .collect();
    }
    Err(ProviderError::Response("no embeddings in response".into()))
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        net::begin_request(&self.endpoint)?;
        let agent = net::agent(self.timeout, concat!("manicheck/", env!("CARGO_PKG_VERSION")));
        let resp = agent
            .post(&self.endpoint)
            .send_json(json!({ "model": self.model, "input": texts }))
            .map_err(net::map_ureq)?;
        parse_embedding_response(&net::read_json(resp)?)
    }
}

/// Embeds chunk texts in batches of [`EMBED_BATCH_SIZE`], preserving order.
pub fn embed_batch(
    chunks: Vec<Chunk>,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<EmbeddedChunk>, ContextError> {
    let mut out = Vec::with_capacity(chunks.len());
    let mut dim = provider.dimension();
    let mut iter = chunks.into_iter().peekable();
    while iter.peek().is_some() {
        let batch: Vec<Chunk> = iter.by_ref().take(EMBED_BATCH_SIZE).collect();
        let ids = || batch.iter().map(|c| (c.doc_index, c.seq)).collect::<Vec<_>>();
        let texts: Vec<String> = batch.iter().map(|c| c.text.clone()).collect();
        let vectors = provider.embed(&texts).map_err(|source| ContextError::Embedding {
            chunks: ids(),
            source,
        })?;
        if vectors.len() != batch.len() {
            return Err(ContextError::Embedding {
                chunks: ids(),
                source: ProviderError::Response(format!(
                    "expected {} vectors, got {}",
                    batch.len(),
                    vectors.len()
                )),
            });
        }
        for (chunk, vector) in batch.into_iter().zip(vectors) {
            let expected = *dim.get_or_insert(vector.len());
            if vector.len() != expected || expected == 0 {
                return Err(ContextError::DimensionMismatch {
                    expected,
                    found: vector.len(),
                });
            }
            out.push(EmbeddedChunk { chunk, vector });
        }
    }
    Ok(out)
}

/// Embeds a single query text.
pub fn embed_query(text: &str, provider: &dyn EmbeddingProvider) -> Result<Vec<f64>, ContextError> {
    let mut v = provider
        .embed(&[text.to_string()])
        .map_err(|source| ContextError::Embedding {
            chunks: Vec::new(),
            source,
        })?;
    if v.len() != 1 {
        return Err(ContextError::Embedding {
            chunks: Vec::new(),
            source: ProviderError::Response(format!("expected 1 vector, got {}", v.len())),
        });
    }
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Produced by an independent Python transcription of the construction
    // documented on `MockEmbedding16`.
    const ABC_GOLDEN: [f64; 16] = include!("../../tests/data/mock16_abc.txt");

    #[test]
    fn mock_golden_abc() {
        let v = MockEmbedding16::embed_one("abc");
        for (got, want) in v.iter().zip(ABC_GOLDEN) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn mock_golden_wraps_buckets() {
        let v = MockEmbedding16::embed_one("Floods hit Dhaka after record rain");
        assert!((v[0] - 0.8492421159427802).abs() < 1e-12);
        assert!((v[15] - -0.10408303031501816).abs() < 1e-12);
    }

    #[test]
    fn mock_empty_is_first_basis() {
        let v = MockEmbedding16::embed_one("");
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn mock_is_unit_norm_and_deterministic() {
        for t in ["a", "hello world", "Ünïcödé ✓"] {
            let v = MockEmbedding16::embed_one(t);
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert_eq!(v, MockEmbedding16::embed_one(t));
        }
    }

    fn chunk(seq: usize, text: &str) -> Chunk {
        Chunk {
            doc_index: 0,
            seq,
            text: text.into(),
            char_start: 0,
        }
    }

    #[test]
    fn batches_of_64() {
        let p = MockEmbedding16::new();
        assert!(embed_batch(Vec::new(), &p).unwrap().is_empty());
        assert_eq!(p.calls(), 0);
        let chunks: Vec<Chunk> = (0..130).map(|i| chunk(i, &format!("c{i}"))).collect();
        let out = embed_batch(chunks, &p).unwrap();
        assert_eq!(out.len(), 130);
        assert_eq!(p.calls(), 3);
        assert_eq!(out[129].chunk.seq, 129);
    }

    #[test]
    fn identical_text_identical_vectors() {
        let out = embed_batch(vec![chunk(0, "same"), chunk(1, "same")], &MockEmbedding16::new()).unwrap();
        assert_eq!(out[0].vector, out[1].vector);
    }

    struct Broken;
    impl EmbeddingProvider for Broken {
        fn dimension(&self) -> Option<usize> {
            Some(4)
        }
        fn embed(&self, _: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
            Err(ProviderError::Transport("down".into()))
        }
    }

    #[test]
    fn provider_failure_names_chunks() {
        let err = embed_batch(vec![chunk(0, "a"), chunk(1, "b")], &Broken).unwrap_err();
        match err {
            ContextError::Embedding { chunks, .. } => assert_eq!(chunks, vec![(0, 0), (0, 1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn response_shapes() {
        let a = serde_json::json!({"embeddings": [[1.0, 2.0]]});
        assert_eq!(parse_embedding_response(&a).unwrap(), vec![vec![1.0, 2.0]]);
        let b = serde_json::json!({"data": [{"embedding": [0.5]}]});
        assert_eq!(parse_embedding_response(&b).unwrap(), vec![vec![0.5]]);
        assert!(parse_embedding_response(&serde_json::json!({})).is_err());
    }
}
