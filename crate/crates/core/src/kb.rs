//! The knowledge base: ontology, ingested record catalog and the text index
//! kept in step with both.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::{self, AnnotationRecord, IngestFormat, IngestReport, ParsedRecords, Rejection};
use crate::model::Triple;
use crate::ontology::{
    AnnotationChange, AnnotationKind, ChangeLog, ChangeOp, ChangeRecord, Concept, DeleteMode, DeleteOutcome, Ontology,
};
use crate::seed;
use crate::store::TripleStore;
use crate::text::{DocKind, DocRef, InvertedIndex, SearchHit, SuggestionList};
use crate::turtle;

/// Change-log subject used for record catalog events.
pub const RECORDS_SUBJECT: &str = "urn:ontokms:records";

/// Edit distance bound for query suggestions.
pub const SUGGEST_MAX_DISTANCE: usize = 2;
pub const SUGGEST_PER_TOKEN: usize = 5;

#[derive(Debug)]
pub struct KnowledgeBase {
    ontology: Ontology,
    index: InvertedIndex,
    records: BTreeMap<String, AnnotationRecord>,
}

impl Clone for KnowledgeBase {
    fn clone(&self) -> Self {
        let ontology =
            Ontology::from_parts(self.ontology.store().clone(), self.ontology.log().clone(), self.ontology.base());
        Self { ontology, index: self.index.clone(), records: self.records.clone() }
    }
}

impl KnowledgeBase {
    pub fn new(base: impl Into<String>) -> Self {
        Self::from_parts(Ontology::new(base), BTreeMap::new())
    }

    /// Wraps existing state and builds the index from scratch.
    pub fn from_parts(ontology: Ontology, records: BTreeMap<String, AnnotationRecord>) -> Self {
        let mut kb = Self { ontology, index: InvertedIndex::new(), records };
        kb.rebuild_index();
        kb
    }

    /// A fresh knowledge base holding the bundled seed ontology.
    pub fn seeded(base: impl Into<String>) -> Self {
        let mut kb = Self::new(base);
        kb.install_seed().expect("empty store accepts the seed");
        kb
    }

    /// Imports the bundled seed; refuses a non-empty store.
    pub fn install_seed(&mut self) -> Result<usize> {
        if !self.ontology.store().is_empty() {
            return Err(Error::Conflict(format!(
                "store already holds {} triples; seeding needs an empty store",
                self.ontology.store().len()
            )));
        }
        let seed = seed::generate_seed(self.ontology.base());
        Ok(self.import_triples(seed.iter().collect(), "seed"))
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn store(&self) -> &TripleStore {
        self.ontology.store()
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn records(&self) -> &BTreeMap<String, AnnotationRecord> {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&AnnotationRecord> {
        self.records.get(id)
    }

    pub fn change_log(&self, since: u64) -> &[ChangeRecord] {
        self.ontology.change_log(since)
    }

    pub fn create_concept(&mut self, concept: Concept) -> Result<Concept> {
        let created = self.ontology.create_concept(concept)?;
        self.reindex_concept(&created.id);
        Ok(created)
    }

    pub fn rename_concept(&mut self, iri: &str, new_iri: &str) -> Result<Concept> {
        let renamed = self.ontology.rename_concept(iri, new_iri)?;
        self.reindex_concept(iri);
        self.reindex_concept(new_iri);
        Ok(renamed)
    }

    pub fn annotate(&mut self, iri: &str, change: &AnnotationChange) -> Result<Concept> {
        let concept = self.ontology.annotate(iri, change)?;
        self.reindex_concept(iri);
        Ok(concept)
    }

    pub fn move_concept(&mut self, iri: &str, parents: &BTreeSet<String>) -> Result<Concept> {
        self.ontology.move_concept(iri, parents)
    }

    pub fn delete_concept(&mut self, iri: &str, mode: DeleteMode) -> Result<DeleteOutcome> {
        let outcome = self.ontology.delete_concept(iri, mode)?;
        self.reindex_concept(iri);
        Ok(outcome)
    }

    /// Merges triples; returns how many were new.
    pub fn import_triples(&mut self, triples: Vec<Triple>, source: &str) -> usize {
        let subjects: BTreeSet<String> = triples.iter().map(|t| t.subject().value().to_string()).collect();
        let added = self.ontology.import_triples(triples, source);
        for s in &subjects {
            self.reindex_concept(s);
        }
        added
    }

    /// Parses and imports RDF text in the given format.
    pub fn import_text(&mut self, text: &str, format: turtle::RdfFormat, source: &str) -> Result<usize> {
        let triples = turtle::parse(text, format, Some(self.ontology.base()))?;
        Ok(self.import_triples(triples, source))
    }

    /// Brings the index entries owned by `iri` in line with the store.
    fn reindex_concept(&mut self, iri: &str) {
        for (kind, annotation) in
            [(DocKind::ConceptLabel, AnnotationKind::Label), (DocKind::ConceptComment, AnnotationKind::Comment)]
        {
            for doc in self.index.docs_for_owner(kind, iri) {
                self.index.remove_doc(&doc);
            }
            if !self.ontology.is_concept(iri) {
                continue;
            }
            for lang in self.ontology.annotation_langs(iri, annotation) {
                if let Some(text) = self.ontology.annotation_text(iri, annotation, &lang) {
                    self.index.index_doc(DocRef { kind, owner: iri.to_string(), lang: Some(lang) }, &text);
                }
            }
        }
    }

    /// Discards the index and rebuilds it from the store and record catalog.
    pub fn rebuild_index(&mut self) {
        self.index = build_index(&self.ontology, &self.records);
    }

    /// True when the incrementally maintained index equals a fresh rebuild.
    pub fn index_matches_rebuild(&self) -> bool {
        build_index(&self.ontology, &self.records) == self.index
    }

    /// Accepts well-formed, non-duplicate records; logs one change record.
    pub fn ingest_parsed(&mut self, parsed: ParsedRecords, source: &str) -> IngestReport {
        let mut reasons = parsed.rejections;
        let mut accepted = Vec::new();
        for (row, record) in parsed.records {
            if let Err(reason) = ingest::check_record(&record) {
                reasons.push(Rejection { row, reason });
            } else if self.records.contains_key(&record.record_id) {
                reasons.push(Rejection { row, reason: format!("duplicate record_id {:?}", record.record_id) });
            } else {
                self.index.index_doc(DocRef::record(&record.record_id), &record.text);
                self.records.insert(record.record_id.clone(), record.clone());
                accepted.push(record);
            }
        }
        reasons.sort_by_key(|r| r.row);
        let report = IngestReport { accepted: accepted.len(), rejected: reasons.len(), reasons };
        self.ontology.log_event(
            ChangeOp::Import,
            RECORDS_SUBJECT,
            json!({
                "before": null,
                "after": { "source": source, "accepted": report.accepted, "rejected": report.rejected, "records": accepted },
            }),
        );
        report
    }

    pub fn ingest_text(&mut self, text: &str, format: IngestFormat, source: &str) -> Result<IngestReport> {
        let parsed = ingest::parse_records(text, format)?;
        Ok(self.ingest_parsed(parsed, source))
    }

    pub fn ingest_file(&mut self, path: &Path, format: IngestFormat) -> Result<IngestReport> {
        let parsed = ingest::read_records(path, format)?;
        Ok(self.ingest_parsed(parsed, &path.display().to_string()))
    }

    /// Drops records from the catalog and index; logs one change record.
    pub fn remove_records(&mut self, ids: &[String]) -> usize {
        let mut removed = Vec::new();
        for id in ids {
            if self.records.remove(id).is_some() {
                self.index.remove_doc(&DocRef::record(id));
                removed.push(id.clone());
            }
        }
        self.ontology.log_event(
            ChangeOp::Delete,
            RECORDS_SUBJECT,
            json!({ "before": { "records": removed }, "after": null }),
        );
        removed.len()
    }

    pub fn remove_all_records(&mut self) -> usize {
        let ids: Vec<String> = self.records.keys().cloned().collect();
        self.remove_records(&ids)
    }

    pub fn search(&self, query: &str, lang: Option<&str>, k: usize) -> Vec<SearchHit> {
        self.index.search(query, lang, k)
    }

    pub fn suggest(&self, query: &str) -> SuggestionList {
        self.index.suggest(query, SUGGEST_MAX_DISTANCE, SUGGEST_PER_TOKEN)
    }

    /// Concepts whose labels best match `text`: label-document scores summed
    /// per concept, sorted by score descending then IRI.
    pub fn suggest_concepts(&self, text: &str, k: usize) -> Vec<(String, f64)> {
        let hits = self.index.search_where(text, usize::MAX, |d| d.kind == DocKind::ConceptLabel);
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        for hit in hits {
            *totals.entry(hit.doc.owner).or_insert(0.0) += hit.score;
        }
        let mut ranked: Vec<(String, f64)> = totals.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }

    /// Rebuilds a knowledge base by re-executing a change log from empty.
    pub fn replay(base: impl Into<String>, records: &[ChangeRecord]) -> Result<Self> {
        let mut kb = Self::new(base);
        for record in records {
            if record.subject == RECORDS_SUBJECT {
                kb.replay_records_event(record)?;
            } else {
                kb.ontology.apply_record(record)?;
            }
        }
        kb.rebuild_index();
        Ok(kb)
    }

    fn replay_records_event(&mut self, record: &ChangeRecord) -> Result<()> {
        let bad = || Error::Validation(format!("change record {} has an unexpected payload", record.seq));
        match record.op {
            ChangeOp::Import => {
                let records: Vec<AnnotationRecord> =
                    serde_json::from_value(record.detail["after"]["records"].clone()).map_err(|_| bad())?;
                for r in records {
                    self.records.insert(r.record_id.clone(), r);
                }
            }
            ChangeOp::Delete => {
                let ids: Vec<String> =
                    serde_json::from_value(record.detail["before"]["records"].clone()).map_err(|_| bad())?;
                for id in ids {
                    self.records.remove(&id);
                }
            }
            _ => return Err(bad()),
        }
        self.ontology.log_event(record.op, RECORDS_SUBJECT, record.detail.clone());
        Ok(())
    }
}

fn build_index(ontology: &Ontology, records: &BTreeMap<String, AnnotationRecord>) -> InvertedIndex {
    let mut index = InvertedIndex::new();
    for iri in ontology.concepts() {
        for (kind, annotation) in
            [(DocKind::ConceptLabel, AnnotationKind::Label), (DocKind::ConceptComment, AnnotationKind::Comment)]
        {
            for lang in ontology.annotation_langs(&iri, annotation) {
                if let Some(text) = ontology.annotation_text(&iri, annotation, &lang) {
                    index.index_doc(DocRef { kind, owner: iri.clone(), lang: Some(lang) }, &text);
                }
            }
        }
    }
    for (id, record) in records {
        index.index_doc(DocRef::record(id), &record.text);
    }
    index
}

/// On-disk layout: `store.nt` snapshot, `changes.jsonl` log, `records.jsonl`
/// catalog and `seed.nt` written when seeding.
#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
    persisted_seq: u64,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), persisted_seq: 0 }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.root.join("store.nt")
    }

    pub fn changes_path(&self) -> PathBuf {
        self.root.join("changes.jsonl")
    }

    pub fn records_path(&self) -> PathBuf {
        self.root.join("records.jsonl")
    }

    pub fn seed_path(&self) -> PathBuf {
        self.root.join("seed.nt")
    }

    /// Loads whatever state exists; a missing directory yields an empty base.
    pub fn load(&mut self, base: &str) -> Result<KnowledgeBase> {
        let snapshot = self.snapshot_path();
        let store = if snapshot.exists() { turtle::load_snapshot(&snapshot)? } else { TripleStore::new() };
        let changes = self.changes_path();
        let log = if changes.exists() { ChangeLog::load_jsonl(&changes)? } else { ChangeLog::new() };
        let records_path = self.records_path();
        let mut records = BTreeMap::new();
        if records_path.exists() {
            let text = fs::read_to_string(&records_path).map_err(|e| Error::io(&records_path, e))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let r: AnnotationRecord = serde_json::from_str(line)
                    .map_err(|e| Error::Validation(format!("{}:{}: bad record: {e}", records_path.display(), i + 1)))?;
                records.insert(r.record_id.clone(), r);
            }
        }
        self.persisted_seq = log.last_seq();
        Ok(KnowledgeBase::from_parts(Ontology::from_parts(store, log, base), records))
    }

    /// Writes the snapshot and catalog and appends unsaved change records.
    pub fn save(&mut self, kb: &KnowledgeBase) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        turtle::save_snapshot(kb.store(), &self.snapshot_path())?;
        let records: String =
            kb.records.values().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect();
        write_atomic(&self.records_path(), &records)?;
        let changes = self.changes_path();
        for record in kb.change_log(self.persisted_seq) {
            ChangeLog::append_jsonl(&changes, record)?;
            self.persisted_seq = record.seq;
        }
        Ok(())
    }

    pub fn write_seed_file(&self, store: &TripleStore) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        write_atomic(&self.seed_path(), &turtle::to_ntriples(store))
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
