//! Free-text search over concept annotations and ingested records.

mod index;
mod suggest;
mod tokenize;

pub use index::{DocKind, DocRef, InvertedIndex, SearchHit};
pub use suggest::{levenshtein, Suggestion, SuggestionList, TokenSuggestions};
pub use tokenize::tokenize;
