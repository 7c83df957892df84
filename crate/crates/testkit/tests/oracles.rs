use ontokms_testkit::{coherence, fuzz, levenshtein_oracle, roundtrip, sparql_oracle};

#[test]
fn sparql_engine_agrees_with_exhaustive_oracle() {
    let stats = sparql_oracle::check_random_queries(101, 120, 5, 40).unwrap();
    assert!(stats.queries > 500, "{stats:?}");
    assert!(stats.non_empty * 8 > stats.queries, "{stats:?}");
}

#[test]
fn sparql_pattern_order_is_irrelevant() {
    assert!(sparql_oracle::check_pattern_permutations(102, 100, 40).unwrap() > 200);
}

#[test]
fn round_trips_hold() {
    assert_eq!(roundtrip::check_random_round_trips(103, 40, 120).unwrap(), 80);
}

#[test]
fn levenshtein_small_alphabet_exhaustive() {
    let summary = levenshtein_oracle::check_all_pairs(&['a', 'b'], 6).unwrap();
    assert_eq!(summary.strings, 127);
    assert_eq!(summary.pairs, 127 * 127);
}

#[test]
fn naive_recursion_known_values() {
    assert_eq!(levenshtein_oracle::naive(b"kitten", b"sitting"), 3);
    assert_eq!(levenshtein_oracle::naive(b"", b"abc"), 3);
    assert_eq!(levenshtein_oracle::all_strings(&['a', 'b', 'c'], 2).len(), 13);
}

#[test]
fn suggestion_lists_are_well_formed() {
    assert!(levenshtein_oracle::check_suggestion_lists(104, 300).unwrap() > 100);
}

#[test]
fn short_consistency_fuzz() {
    let summary = fuzz::run_consistency_fuzz(105, 1_500, 100).unwrap();
    assert_eq!(summary.steps, 1_500);
    assert!(summary.successes > 300, "{summary:?}");
    assert!(summary.max_injected > 0, "no violations were injected: {summary:?}");
}

#[test]
fn short_index_coherence() {
    let summary = coherence::run_index_coherence(106, 200, 50, 1e-9).unwrap();
    assert_eq!(summary.checks, 4);
    assert!(summary.worst_relative_error <= 1e-9);
}

#[test]
fn reference_tokenizer_folds_accents() {
    assert_eq!(coherence::reference_tokens("Síndrome, crise-focal a"), vec!["sindrome", "crise", "focal"]);
}

#[test]
fn hierarchy_check_catches_cycles_and_dangling_parents() {
    use ontokms_core::kb::KnowledgeBase;
    use ontokms_core::ontology::DEFAULT_BASE;
    use ontokms_core::turtle::RdfFormat;

    let mut kb = KnowledgeBase::seeded(DEFAULT_BASE);
    assert!(fuzz::check_hierarchy(&kb).is_ok());
    let sub = "<http://www.w3.org/2000/01/rdf-schema#subClassOf>";
    let mut looped = kb.clone();
    let edge = format!("<{DEFAULT_BASE}SYN-SeizureType-001> {sub} <{DEFAULT_BASE}SYN-SeizureType-006> .\n");
    looped.import_text(&edge, RdfFormat::NTriples, "t").unwrap();
    assert!(fuzz::check_hierarchy(&looped).unwrap_err().contains("cycle"));
    let edge = format!("<{DEFAULT_BASE}SYN-SeizureType-001> {sub} <{DEFAULT_BASE}Nowhere> .\n");
    kb.import_text(&edge, RdfFormat::NTriples, "t").unwrap();
    assert!(fuzz::check_hierarchy(&kb).unwrap_err().contains("dangling"));
}
