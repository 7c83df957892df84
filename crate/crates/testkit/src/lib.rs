//! Seeded oracles and randomized drivers shared by the integration and
//! acceptance suites. Every checker returns `Err` with a description of the
//! first disagreement it finds.

pub mod coherence;
pub mod fuzz;
pub mod gen;
pub mod levenshtein_oracle;
pub mod roundtrip;
pub mod sparql_oracle;
