//! Text index coherence: the incrementally maintained index against a
//! from-scratch rebuild, and TF-IDF scores against a brute-force scorer that
//! re-reads the raw triples and records.

use std::collections::BTreeMap;

use ontokms_core::ingest::IngestFormat;
use ontokms_core::kb::KnowledgeBase;
use ontokms_core::ontology::DEFAULT_BASE;
use ontokms_core::text::{DocKind, DocRef};
use ontokms_core::turtle::RdfFormat;
use ontokms_core::vocab::{OWL_CLASS, RDFS_COMMENT, RDFS_LABEL, RDF_TYPE};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::fuzz::{execute, predict, OpGen, Shadow};
use crate::gen;

/// Reference tokenizer: lowercase, compatibility-decompose, drop combining
/// marks, split on anything that is not alphanumeric, keep tokens of two or
/// more characters.
pub fn reference_tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut folded = String::new();
    for c in lowered.nfkd() {
        if !is_combining_mark(c) {
            folded.push(c);
        }
    }
    let mut out = Vec::new();
    let mut current = String::new();
    for c in folded.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() {
            current.push(c);
        } else {
            if current.chars().count() >= 2 {
                out.push(current.clone());
            }
            current.clear();
        }
    }
    out
}

/// Every indexable document rebuilt from raw data: concept label and comment
/// triples grouped by (kind, concept, language), plus ingested records.
pub fn raw_documents(kb: &KnowledgeBase) -> BTreeMap<DocRef, Vec<String>> {
    let store = kb.store();
    let is_concept = |s: &str| {
        store
            .iter()
            .any(|t| t.subject().value() == s && t.predicate().value() == RDF_TYPE && t.object().value() == OWL_CLASS)
    };
    let mut concepts = BTreeMap::new();
    let mut docs: BTreeMap<DocRef, Vec<String>> = BTreeMap::new();
    for t in store.iter() {
        let kind = match t.predicate().value() {
            RDFS_LABEL => DocKind::ConceptLabel,
            RDFS_COMMENT => DocKind::ConceptComment,
            _ => continue,
        };
        let Some(lang) = t.object().lang() else { continue };
        let subject = t.subject().value().to_string();
        if !*concepts.entry(subject.clone()).or_insert_with(|| is_concept(&subject)) {
            continue;
        }
        docs.entry(DocRef { kind, owner: subject, lang: Some(lang.to_string()) })
            .or_default()
            .extend(reference_tokens(t.object().value()));
    }
    for (id, record) in kb.records() {
        docs.insert(DocRef::record(id), reference_tokens(&record.text));
    }
    docs
}

/// `Σ tf · ln(N / df)` over the distinct query tokens, by rescanning every document.
pub fn brute_force_scores(docs: &BTreeMap<DocRef, Vec<String>>, query: &str) -> BTreeMap<DocRef, f64> {
    let n = docs.len() as f64;
    let mut query_tokens = reference_tokens(query);
    query_tokens.sort();
    query_tokens.dedup();
    let mut scores = BTreeMap::new();
    for token in &query_tokens {
        let df = docs.values().filter(|tokens| tokens.contains(token)).count();
        if df == 0 {
            continue;
        }
        let idf = (n / df as f64).ln();
        for (doc, tokens) in docs {
            let tf = tokens.iter().filter(|t| *t == token).count();
            if tf > 0 {
                *scores.entry(doc.clone()).or_insert(0.0) += tf as f64 * idf;
            }
        }
    }
    scores
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale || (a - b).abs() < 1e-12
}

/// Largest relative score difference seen across `queries` random queries,
/// or an error describing the first disagreement beyond `rel`.
pub fn compare_scores(kb: &KnowledgeBase, rng: &mut ChaCha8Rng, queries: usize, rel: f64) -> Result<f64, String> {
    let docs = raw_documents(kb);
    let vocabulary: Vec<&str> = kb.index().vocabulary().collect();
    let mut worst: f64 = 0.0;
    for _ in 0..queries {
        let mut words: Vec<String> =
            (0..rng.gen_range(1..=3)).filter_map(|_| vocabulary.choose(rng).map(|w| w.to_string())).collect();
        if rng.gen_bool(0.2) {
            words.push("zzqx".to_string());
        }
        if rng.gen_bool(0.2) {
            words.push("SÍNDROME Crise".to_string());
        }
        let query = words.join(" ");
        let expected = brute_force_scores(&docs, &query);
        let hits = kb.search(&query, None, usize::MAX);
        if hits.len() != expected.len() {
            return Err(format!("query {query:?}: {} hits, brute force found {}", hits.len(), expected.len()));
        }
        for hit in &hits {
            let Some(&want) = expected.get(&hit.doc) else {
                return Err(format!("query {query:?}: unexpected hit {:?}", hit.doc));
            };
            if !close(hit.score, want, rel) {
                return Err(format!(
                    "query {query:?}: {:?} scored {} but brute force gives {want}",
                    hit.doc, hit.score
                ));
            }
            if want != 0.0 {
                worst = worst.max((hit.score - want).abs() / want.abs());
            }
        }
    }
    Ok(worst)
}

fn random_records(rng: &mut ChaCha8Rng, next_id: &mut usize, known: &[String]) -> String {
    let mut lines = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let id = if !known.is_empty() && rng.gen_bool(0.15) {
            known.choose(rng).unwrap().clone()
        } else {
            *next_id += 1;
            format!("rec-{next_id}")
        };
        let text = if rng.gen_bool(0.1) { "   ".to_string() } else { OpGen::text(rng, "notes") };
        lines.push(format!(r#"{{"record_id":"{id}","table":"eeg","field":"notes","text":"{text}"}}"#));
    }
    lines.join("\n")
}

#[derive(Debug, Clone, Default)]
pub struct CoherenceSummary {
    pub operations: usize,
    pub checks: usize,
    pub score_queries: usize,
    pub worst_relative_error: f64,
    pub final_docs: usize,
}

/// Runs `operations` random management, import and ingest operations.
/// Every `check_every` operations (and at the end) the index is compared with
/// a rebuild and scores with the brute-force scorer.
pub fn run_index_coherence(
    seed: u64,
    operations: usize,
    check_every: usize,
    rel: f64,
) -> Result<CoherenceSummary, String> {
    let mut rng = gen::rng(seed);
    let mut kb = KnowledgeBase::seeded(DEFAULT_BASE);
    let mut shadow = Shadow::from_kb(&kb);
    let mut ops = OpGen { base: DEFAULT_BASE.to_string(), fresh: 0 };
    let mut next_record = 0;
    let mut summary = CoherenceSummary::default();

    for step in 1..=operations {
        match rng.gen_range(0..100) {
            0..=59 => {
                let op = ops.next(&mut rng, &shadow);
                let expected = predict(&mut shadow, &op);
                let got = execute(&mut kb, &op);
                if got != expected {
                    return Err(format!("step {step}: {op:?} gave {got:?}, expected {expected:?}"));
                }
            }
            60..=79 => {
                let known: Vec<String> = kb.records().keys().cloned().collect();
                let text = random_records(&mut rng, &mut next_record, &known);
                kb.ingest_text(&text, IngestFormat::Jsonl, "fuzz").map_err(|e| e.to_string())?;
            }
            80..=89 => {
                let victims: Vec<String> = kb.records().keys().cloned().choose_multiple(&mut rng, 2);
                kb.remove_records(&victims);
            }
            _ => {
                // Import extra annotations for an existing concept through Turtle.
                let target = ops_target(&mut rng, &shadow);
                let ttl = format!("<{target}> <{RDFS_COMMENT}> \"{}\"@es .\n", OpGen::text(&mut rng, "importado"));
                kb.import_text(&ttl, RdfFormat::Turtle, "fuzz").map_err(|e| e.to_string())?;
                shadow = Shadow::from_kb(&kb);
            }
        }
        if step % check_every == 0 || step == operations {
            if !kb.index().is_consistent() {
                return Err(format!("step {step}: index bookkeeping is inconsistent"));
            }
            let mut rebuilt = kb.clone();
            rebuilt.rebuild_index();
            if rebuilt.index().canonical_dump() != kb.index().canonical_dump() {
                return Err(format!("step {step}: incremental index differs from a rebuild"));
            }
            let worst = compare_scores(&kb, &mut rng, 10, rel).map_err(|e| format!("step {step}: {e}"))?;
            summary.worst_relative_error = summary.worst_relative_error.max(worst);
            summary.score_queries += 10;
            summary.checks += 1;
        }
        summary.operations = step;
    }
    summary.final_docs = kb.index().doc_count();
    Ok(summary)
}

fn ops_target(rng: &mut ChaCha8Rng, shadow: &Shadow) -> String {
    shadow.concepts.keys().choose(rng).cloned().unwrap_or_else(|| format!("{DEFAULT_BASE}GeneralConcept"))
}
