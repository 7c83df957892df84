//! Serialization round trips over random stores.

use ontokms_core::turtle::{self, RdfFormat};
use ontokms_core::TripleStore;

use crate::gen;

/// For each random store and both formats: parsing the serialization gives
/// back the same triples, and export → import → export is byte-identical.
pub fn check_random_round_trips(seed: u64, stores: usize, max_triples: usize) -> Result<usize, String> {
    let mut rng = gen::rng(seed);
    let mut checked = 0;
    for i in 0..stores {
        let store = gen::random_store(&mut rng, max_triples, 25, 6);
        for format in [RdfFormat::Turtle, RdfFormat::NTriples] {
            let text = turtle::serialize(&store, format);
            let parsed =
                turtle::parse(&text, format, None).map_err(|e| format!("store {i} {format:?}: {e}\n{text}"))?;
            let back: TripleStore = parsed.into_iter().collect();
            if back.triple_set() != store.triple_set() {
                return Err(format!("store {i} {format:?}: parsed triples differ\n{text}"));
            }
            if turtle::serialize(&back, format) != text {
                return Err(format!("store {i} {format:?}: export after import is not byte-identical"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
