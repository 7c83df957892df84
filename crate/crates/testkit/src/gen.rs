//! Seeded random generators for stores and terms.

use ontokms_core::{Term, Triple, TripleStore};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn iri(local: &str) -> Term {
    Term::iri(format!("http://ex.org/r/{local}")).unwrap()
}

/// Literal texts that exercise escaping, non-ASCII and language tags.
const TEXTS: [&str; 10] = [
    "plain",
    "with \"quotes\"",
    "back\\slash",
    "line\nbreak\ttab",
    "Crise epiléptica",
    "émoji \u{1F9E0}",
    "",
    "x^^y",
    "@en",
    "control \u{1}",
];

pub fn random_literal(rng: &mut ChaCha8Rng) -> Term {
    let text = TEXTS.choose(rng).unwrap();
    match rng.gen_range(0..3) {
        0 => Term::literal(*text),
        1 => Term::lang_literal(*text, "en").unwrap(),
        _ => Term::lang_literal(*text, "pt-br").unwrap(),
    }
}

/// A random store over a small vocabulary so that patterns join often.
pub fn random_store(rng: &mut ChaCha8Rng, max_triples: usize, subjects: usize, predicates: usize) -> TripleStore {
    let n = rng.gen_range(0..=max_triples);
    let mut store = TripleStore::new();
    for _ in 0..n {
        let s = iri(&format!("n{}", rng.gen_range(0..subjects)));
        let p = iri(&format!("p{}", rng.gen_range(0..predicates)));
        let o = if rng.gen_bool(0.3) { random_literal(rng) } else { iri(&format!("n{}", rng.gen_range(0..subjects))) };
        store.insert(Triple::new(s, p, o).unwrap());
    }
    store
}
