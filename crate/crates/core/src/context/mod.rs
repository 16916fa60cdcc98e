//! Retrieval-augmented context: chunk documents, embed, index, and select
//! the chunks most similar to the claim.

pub mod embedding;
pub mod index;
pub mod splitter;

use thiserror::Error;

pub use embedding::{
    embed_batch, embed_query, EmbeddingProvider, HttpEmbeddingProvider, MockEmbedding16,
    EMBED_BATCH_SIZE, MOCK_DIMENSION,
};
pub use index::{cosine_similarity, retrieve_top_n, retrieve_top_n_with, Scored, VectorIndex};
pub use splitter::{split_recursive, SplitterConfig};

use crate::model::{Chunk, Document};
use crate::net::ProviderError;

pub const DEFAULT_MAX_CONTEXT_CHARS: usize = 4000;

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("nothing to retrieve from")]
    EmptyContext,
    #[error("embedding provider failed on chunks {chunks:?}: {source}")]
    Embedding {
        /// `(doc_index, seq)` of every chunk in the failing batch.
        chunks: Vec<(usize, usize)>,
        #[source]
        source: ProviderError,
    },
}

/// Splits every document of a retrieval batch, in batch order.
pub fn split_documents(docs: &[Document], config: &SplitterConfig) -> Vec<Chunk> {
    docs.iter()
        .enumerate()
        .flat_map(|(i, d)| split_recursive(&d.text, i, config))
        .collect()
}

/// Joins chunk texts as `[source N] text` blocks separated by blank lines.
/// Whole chunks are dropped from the end so the result stays within
/// `max_chars` characters.
pub fn assemble_context<'a>(chunks: impl IntoIterator<Item = &'a Chunk>, max_chars: usize) -> String {
    let mut out = String::new();
    let mut used = 0usize;
    for chunk in chunks {
        let block = format!("[source {}] {}", chunk.doc_index + 1, chunk.text);
        let sep = if out.is_empty() { 0 } else { 2 };
        let cost = sep + block.chars().count();
        if used + cost > max_chars {
            break;
        }
        if sep > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&block);
        used += cost;
    }
    out
}
