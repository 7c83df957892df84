//! Knowledge management core for class-hierarchy ontologies.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`] and [`store`]: RDF terms, triples and the three-index in-memory store.
//! - [`turtle`]: Turtle / N-Triples reading and writing, snapshot persistence.
//! - [`sparql`]: a SELECT / basic-graph-pattern / FILTER subset of SPARQL.
//! - [`ontology`]: concept-level management with consistency checks and a change log.
//! - [`text`]: tokenizer, inverted index with TF-IDF ranking, edit-distance suggestions.
//! - [`ingest`]: clinical free-text record ingestion from JSONL / CSV files.
//! - [`navigation`]: neighbourhood views and root paths over the hierarchy.
//! - [`kb`]: the facade that keeps ontology, record catalog and text index in step.

pub mod error;
pub mod ingest;
pub mod kb;
pub mod model;
pub mod navigation;
pub mod ontology;
pub mod seed;
pub mod sparql;
pub mod store;
pub mod text;
pub mod turtle;
pub mod vocab;

pub use error::{Error, ParseError, Result};
pub use kb::KnowledgeBase;
pub use model::{Term, TermError, Triple};
pub use store::TripleStore;
