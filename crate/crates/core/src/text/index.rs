use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::suggest::{levenshtein, Suggestion, SuggestionList, TokenSuggestions};
use super::tokenize::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DocKind {
    ConceptLabel,
    ConceptComment,
    Record,
}

/// One indexed text field. Orders by (kind, owner, lang).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DocRef {
    pub kind: DocKind,
    /// Concept IRI or record id.
    pub owner: String,
    pub lang: Option<String>,
}

impl DocRef {
    pub fn label(owner: impl Into<String>, lang: impl Into<String>) -> Self {
        Self { kind: DocKind::ConceptLabel, owner: owner.into(), lang: Some(lang.into()) }
    }

    pub fn comment(owner: impl Into<String>, lang: impl Into<String>) -> Self {
        Self { kind: DocKind::ConceptComment, owner: owner.into(), lang: Some(lang.into()) }
    }

    pub fn record(id: impl Into<String>) -> Self {
        Self { kind: DocKind::Record, owner: id.into(), lang: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub doc: DocRef,
    pub score: f64,
    pub snippet: String,
}

const SNIPPET_CHARS: usize = 160;

/// Token → document → term frequency, plus per-document token counts.
///
/// Documents that tokenize to nothing are still tracked in `doc_tokens` with a
/// count of zero so that they count towards the document total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    postings: BTreeMap<String, BTreeMap<DocRef, u32>>,
    doc_tokens: BTreeMap<DocRef, u32>,
    texts: BTreeMap<DocRef, String>,
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_tokens.len()
    }

    pub fn contains_doc(&self, doc: &DocRef) -> bool {
        self.doc_tokens.contains_key(doc)
    }

    pub fn docs(&self) -> impl Iterator<Item = &DocRef> {
        self.doc_tokens.keys()
    }

    /// Indexed documents of one kind belonging to `owner`, in order.
    pub fn docs_for_owner(&self, kind: DocKind, owner: &str) -> Vec<DocRef> {
        let start = DocRef { kind, owner: owner.to_string(), lang: None };
        self.doc_tokens
            .range(start..)
            .map(|(d, _)| d)
            .take_while(|d| d.kind == kind && d.owner == owner)
            .cloned()
            .collect()
    }

    pub fn text(&self, doc: &DocRef) -> Option<&str> {
        self.texts.get(doc).map(String::as_str)
    }

    pub fn doc_len(&self, doc: &DocRef) -> Option<u32> {
        self.doc_tokens.get(doc).copied()
    }

    pub fn tf(&self, token: &str, doc: &DocRef) -> u32 {
        self.postings.get(token).and_then(|p| p.get(doc)).copied().unwrap_or(0)
    }

    pub fn df(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, BTreeMap::len)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.doc_tokens.is_empty()
    }

    /// Indexes `text` under `doc`, replacing anything previously indexed for it.
    pub fn index_doc(&mut self, doc: DocRef, text: &str) {
        self.remove_doc(&doc);
        let tokens = tokenize(text);
        self.doc_tokens.insert(doc.clone(), tokens.len() as u32);
        for token in tokens {
            *self.postings.entry(token).or_default().entry(doc.clone()).or_insert(0) += 1;
        }
        self.texts.insert(doc, text.to_string());
    }

    /// Purges every trace of `doc`. Returns whether it was indexed.
    pub fn remove_doc(&mut self, doc: &DocRef) -> bool {
        let Some(text) = self.texts.remove(doc) else { return false };
        self.doc_tokens.remove(doc);
        for token in tokenize(&text) {
            if let Some(docs) = self.postings.get_mut(&token) {
                docs.remove(doc);
                if docs.is_empty() {
                    self.postings.remove(&token);
                }
            }
        }
        true
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    /// Ranked search with an optional language restriction.
    ///
    /// `score(d) = Σ tf(t, d) · ln(N / df(t))` over the distinct query tokens,
    /// for documents containing at least one of them; a token present in every
    /// document contributes zero. Hits sort by score descending, then DocRef.
    pub fn search(&self, query: &str, lang: Option<&str>, k: usize) -> Vec<SearchHit> {
        self.search_where(query, k, |doc| lang.is_none_or(|l| doc.lang.as_deref() == Some(l)))
    }

    /// [`search`](Self::search) restricted to documents accepted by `keep`.
    /// Document frequencies are always taken over the whole index.
    pub fn search_where(&self, query: &str, k: usize, keep: impl Fn(&DocRef) -> bool) -> Vec<SearchHit> {
        let n = self.doc_count() as f64;
        let tokens: BTreeSet<String> = tokenize(query).into_iter().collect();
        let mut scores: BTreeMap<&DocRef, f64> = BTreeMap::new();
        for token in &tokens {
            let Some(docs) = self.postings.get(token) else { continue };
            let idf = (n / docs.len() as f64).ln();
            for (doc, &tf) in docs {
                if keep(doc) {
                    *scores.entry(doc).or_insert(0.0) += f64::from(tf) * idf;
                }
            }
        }
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .map(|(doc, score)| SearchHit { doc: doc.clone(), score, snippet: self.snippet(doc) })
            .collect();
        hits.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then_with(|| a.doc.cmp(&b.doc)));
        hits.truncate(k);
        hits
    }

    fn snippet(&self, doc: &DocRef) -> String {
        let text = self.texts.get(doc).map_or("", String::as_str).trim();
        if text.chars().count() <= SNIPPET_CHARS {
            text.to_string()
        } else {
            let mut s: String = text.chars().take(SNIPPET_CHARS).collect();
            s.push('…');
            s
        }
    }

    /// Near-miss vocabulary tokens for each query token that has no postings.
    ///
    /// Candidates are within `max_distance` edits and sorted by (distance,
    /// token); at most `k` per query token.
    pub fn suggest(&self, query: &str, max_distance: usize, k: usize) -> SuggestionList {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for token in tokenize(query) {
            if self.postings.contains_key(&token) || !seen.insert(token.clone()) {
                continue;
            }
            let len = token.chars().count();
            let mut candidates: Vec<Suggestion> = self
                .postings
                .keys()
                .filter(|cand| cand.chars().count().abs_diff(len) <= max_distance)
                .filter_map(|cand| {
                    let distance = levenshtein(&token, cand);
                    (distance <= max_distance).then(|| Suggestion { token: cand.clone(), distance })
                })
                .collect();
            candidates.sort_by(|a, b| a.distance.cmp(&b.distance).then_with(|| a.token.cmp(&b.token)));
            candidates.truncate(k);
            out.push(TokenSuggestions { token, suggestions: candidates });
        }
        SuggestionList { tokens: out }
    }

    /// Deterministic text dump of the full index state, for equality checks.
    pub fn canonical_dump(&self) -> String {
        let mut out = String::new();
        for (doc, len) in &self.doc_tokens {
            let _ = writeln!(
                out,
                "doc {:?} {} {:?} len={len} text={:?}",
                doc.kind,
                doc.owner,
                doc.lang,
                self.texts.get(doc)
            );
        }
        for (token, docs) in &self.postings {
            let _ = write!(out, "tok {token}:");
            for (doc, tf) in docs {
                let _ = write!(out, " ({:?},{},{:?})={tf}", doc.kind, doc.owner, doc.lang);
            }
            out.push('\n');
        }
        out
    }

    /// Checks the internal bookkeeping: per-document tf sums equal the token
    /// counts and every posting refers to a tracked document.
    pub fn is_consistent(&self) -> bool {
        let mut sums: BTreeMap<&DocRef, u32> = BTreeMap::new();
        for docs in self.postings.values() {
            for (doc, tf) in docs {
                if *tf == 0 || !self.doc_tokens.contains_key(doc) {
                    return false;
                }
                *sums.entry(doc).or_insert(0) += tf;
            }
        }
        self.doc_tokens.keys().eq(self.texts.keys())
            && self.doc_tokens.iter().all(|(doc, &len)| sums.get(doc).copied().unwrap_or(0) == len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus() -> InvertedIndex {
        let mut idx = InvertedIndex::new();
        idx.index_doc(DocRef::record("D1"), "seizure onset");
        idx.index_doc(DocRef::record("D2"), "seizure free");
        idx
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn idf_weighted_hit() {
        let hits = corpus().search("onset", None, 10);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc, DocRef::record("D1"));
        assert!((hits[0].score - 2f64.ln()).abs() < 1e-12);
        assert!((hits[0].score - 0.693_147_180_559_945_3).abs() < 1e-12);
    }

    #[test]
    fn absent_token_gives_nothing() {
        assert!(corpus().search("zzzz", None, 10).is_empty());
    }

    #[test]
    fn ubiquitous_token_scores_zero_and_ties_break_by_docref() {
        let hits = corpus().search("seizure", None, 10);
        let docs: Vec<_> = hits.iter().map(|h| h.doc.owner.as_str()).collect();
        assert_eq!(docs, vec!["D1", "D2"]);
        assert!(hits.iter().all(|h| h.score == 0.0));
    }

    #[test]
    fn term_frequency_and_reindex() {
        let mut idx = InvertedIndex::new();
        let d = DocRef::record("r");
        idx.index_doc(d.clone(), "seizure seizure");
        assert_eq!(idx.tf("seizure", &d), 2);
        assert_eq!(idx.doc_len(&d), Some(2));
        idx.index_doc(d.clone(), "aura");
        assert_eq!(idx.tf("seizure", &d), 0);
        assert_eq!(idx.df("seizure"), 0);
        assert_eq!(idx.doc_count(), 1);
        assert!(idx.is_consistent());
    }

    #[test]
    fn index_then_remove_restores_state() {
        let before = corpus();
        let mut idx = before.clone();
        idx.index_doc(DocRef::label("http://e/A", "pt"), "Crise focal");
        assert!(idx.remove_doc(&DocRef::label("http://e/A", "pt")));
        assert_eq!(idx, before);
        assert!(!idx.remove_doc(&DocRef::record("nope")));
    }

    #[test]
    fn empty_documents_count_towards_total() {
        let mut idx = corpus();
        idx.index_doc(DocRef::record("blank"), "- -");
        assert_eq!(idx.doc_count(), 3);
        let hits = idx.search("seizure", None, 10);
        assert!((hits[0].score - (1.5f64).ln()).abs() < 1e-12);
        assert!(idx.is_consistent());
    }

    #[test]
    fn lang_filter_and_k() {
        let mut idx = InvertedIndex::new();
        idx.index_doc(DocRef::label("http://e/A", "en"), "focal seizure");
        idx.index_doc(DocRef::label("http://e/A", "pt"), "crise focal");
        idx.index_doc(DocRef::record("r1"), "nothing here");
        let pt = idx.search("focal", Some("pt"), 10);
        assert_eq!(pt.len(), 1);
        assert_eq!(pt[0].doc.lang.as_deref(), Some("pt"));
        assert_eq!(idx.search("focal", None, 1).len(), 1);
    }

    #[test]
    fn suggestions() {
        let mut idx = InvertedIndex::new();
        idx.index_doc(DocRef::record("a"), "epilepsy seizure");
        let s = idx.suggest("epilepsi", 2, 5);
        assert_eq!(s.tokens.len(), 1);
        assert_eq!(s.tokens[0].suggestions, vec![Suggestion { token: "epilepsy".into(), distance: 1 }]);
        let s = idx.suggest("siezure", 2, 5);
        assert_eq!(s.tokens[0].suggestions, vec![Suggestion { token: "seizure".into(), distance: 2 }]);
        assert!(idx.suggest("seizure", 2, 5).tokens.is_empty());
        let s = idx.suggest("zzzzzzzz", 2, 5);
        assert_eq!(s.tokens.len(), 1);
        assert!(s.tokens[0].suggestions.is_empty());
    }

    proptest! {
        #[test]
        fn build_and_teardown(docs in prop::collection::vec("[a-c ]{0,20}", 0..30)) {
            let mut idx = InvertedIndex::new();
            for (i, text) in docs.iter().enumerate() {
                idx.index_doc(DocRef::record(format!("r{i}")), text);
                prop_assert!(idx.is_consistent());
            }
            for i in 0..docs.len() {
                idx.remove_doc(&DocRef::record(format!("r{i}")));
            }
            prop_assert_eq!(idx, InvertedIndex::new());
        }

        #[test]
        fn suggestions_respect_bound_and_order(
            words in prop::collection::vec("[a-d]{2,6}", 1..40),
            query in "[a-d]{2,7}",
            max in 0usize..3,
        ) {
            let mut idx = InvertedIndex::new();
            idx.index_doc(DocRef::record("r"), &words.join(" "));
            for entry in idx.suggest(&query, max, 5).tokens {
                prop_assert!(entry.suggestions.len() <= 5);
                for s in &entry.suggestions {
                    prop_assert!(s.distance <= max);
                    prop_assert_eq!(s.distance, levenshtein(&entry.token, &s.token));
                }
                for w in entry.suggestions.windows(2) {
                    prop_assert!((w[0].distance, &w[0].token) < (w[1].distance, &w[1].token));
                }
            }
        }
    }
}
