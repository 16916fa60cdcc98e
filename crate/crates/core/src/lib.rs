//! Retrieval-augmented detection of manipulated news content.
//!
//! A claim is searched on the web, the top pages are crawled and chunked,
//! the chunks closest to the claim become context for an LLM, and three
//! LLM runs vote on a True/False verdict. The crate also carries the
//! tooling that builds labeled datasets from news feeds and the harness
//! that scores the detector on them.
//!
//! Every network dependency sits behind a provider trait with an offline
//! implementation, so whole runs are reproducible without a network.

pub mod context;
pub mod dataset;
pub mod eval;
pub mod exec;
pub mod inference;
pub mod jsonl;
pub mod model;
pub mod net;
pub mod pipeline;
pub mod retrieval;
pub mod text;
