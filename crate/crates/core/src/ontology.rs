//! Concept-level management over the triple store.
//!
//! A concept is any IRI typed `owl:Class`. Its parents are its
//! `rdfs:subClassOf` objects; labels and comments are language-tagged
//! `rdfs:label` / `rdfs:comment` literals. Every successful mutation appends
//! exactly one [`ChangeRecord`]; a failed one leaves both store and log alone.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Term, Triple};
use crate::store::TripleStore;
use crate::turtle;
use crate::vocab;

pub const DEFAULT_BASE: &str = "http://epilepsiae.example.org/onto#";

/// Local names of the four top-level branches.
pub const ROOT_NAMES: [&str; 4] = ["GeneralConcept", "SeizureType", "EpilepticSyndrome", "Electroencephalography"];

/// Annotation languages every concept must carry.
pub const LANGUAGES: [&str; 2] = ["en", "pt"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub parents: BTreeSet<String>,
    pub labels: BTreeMap<String, String>,
    pub comments: BTreeMap<String, String>,
}

/// Label and comment edits keyed by language; `None` removes the annotation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationChange {
    #[serde(default)]
    pub labels: BTreeMap<String, Option<String>>,
    #[serde(default)]
    pub comments: BTreeMap<String, Option<String>>,
}

impl AnnotationChange {
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty() && self.comments.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteMode {
    RefuseIfChildren,
    ReparentChildren,
}

impl std::str::FromStr for DeleteMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "refuse_if_children" | "refuse" => Ok(Self::RefuseIfChildren),
            "reparent_children" | "reparent" => Ok(Self::ReparentChildren),
            other => Err(format!("unknown delete mode {other:?} (expected refuse_if_children or reparent_children)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeleteOutcome {
    pub removed_triples: usize,
    pub reparented: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChangeOp {
    Create,
    Rename,
    Annotate,
    Move,
    Delete,
    Import,
}

/// One append-only audit entry. `detail` holds `{"before": .., "after": ..}`
/// plus whatever parameters are needed to replay the operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub op: ChangeOp,
    pub subject: String,
    pub detail: Value,
}

/// Gapless, append-only sequence of change records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChangeLog {
    records: Vec<ChangeRecord>,
}

impl ChangeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_seq(&self) -> u64 {
        self.records.last().map_or(0, |r| r.seq)
    }

    pub fn records(&self) -> &[ChangeRecord] {
        &self.records
    }

    /// Records with `seq > since`, in order.
    pub fn since(&self, since: u64) -> &[ChangeRecord] {
        let start = self.records.partition_point(|r| r.seq <= since);
        &self.records[start..]
    }

    fn append(&mut self, op: ChangeOp, subject: &str, detail: Value) -> &ChangeRecord {
        let record =
            ChangeRecord { seq: self.last_seq() + 1, timestamp: Utc::now(), op, subject: subject.to_string(), detail };
        self.records.push(record);
        self.records.last().expect("just pushed")
    }

    /// Reads a JSON-lines log. Sequence numbers must run 1, 2, 3, ...
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: ChangeRecord = serde_json::from_str(line)
                .map_err(|e| Error::Validation(format!("{}:{}: bad change record: {e}", path.display(), i + 1)))?;
            if record.seq != records.len() as u64 + 1 {
                return Err(Error::Validation(format!(
                    "{}:{}: change log gap, expected seq {} found {}",
                    path.display(),
                    i + 1,
                    records.len() + 1,
                    record.seq
                )));
            }
            records.push(record);
        }
        Ok(Self { records })
    }

    /// Appends one record as a JSON line.
    pub fn append_jsonl(path: &Path, record: &ChangeRecord) -> Result<()> {
        let mut line = serde_json::to_string(record).expect("records serialize");
        line.push('\n');
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// (a) the subClassOf graph has a cycle
    Cycle,
    /// (b) the set of parentless concepts is not exactly the four roots
    Roots,
    /// (c) a non-root concept has no path to a root
    Unreachable,
    /// (d) a concept lacks exactly one `en` and one `pt` label and comment
    Annotation,
    /// (e) a subClassOf object is not a concept
    DanglingParent,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub concepts: usize,
    pub labels: usize,
    pub comments: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    /// Human-readable summary ending in `N violations`.
    pub fn summary(&self) -> String {
        let mut out = format!("concepts: {}\nlabels: {}\ncomments: {}\n", self.concepts, self.labels, self.comments);
        for v in &self.violations {
            out.push_str(&format!("violation [{:?}] {}: {}\n", v.kind, v.subject, v.message));
        }
        out.push_str(&format!("{} violations\n", self.violations.len()));
        out
    }
}

/// Well-known vocabulary terms used throughout the module.
struct Vocab {
    rdf_type: Term,
    owl_class: Term,
    sub_class_of: Term,
    label: Term,
    comment: Term,
}

impl Vocab {
    fn new() -> Self {
        Self {
            rdf_type: Term::vocab(vocab::RDF_TYPE),
            owl_class: Term::vocab(vocab::OWL_CLASS),
            sub_class_of: Term::vocab(vocab::RDFS_SUBCLASS_OF),
            label: Term::vocab(vocab::RDFS_LABEL),
            comment: Term::vocab(vocab::RDFS_COMMENT),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationKind {
    Label,
    Comment,
}

/// The managed ontology: a triple store, its change log and the IRI base.
pub struct Ontology {
    store: TripleStore,
    log: ChangeLog,
    base: String,
    vocab: Vocab,
}

impl std::fmt::Debug for Ontology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ontology")
            .field("base", &self.base)
            .field("triples", &self.store.len())
            .field("log", &self.log.len())
            .finish()
    }
}

fn iri_term(iri: &str) -> Result<Term> {
    Ok(Term::iri(iri)?)
}

fn triple(s: &Term, p: &Term, o: &Term) -> Triple {
    Triple::new(s.clone(), p.clone(), o.clone()).expect("subject and predicate are IRIs")
}

impl Ontology {
    pub fn new(base: impl Into<String>) -> Self {
        Self::from_parts(TripleStore::new(), ChangeLog::new(), base)
    }

    pub fn from_parts(store: TripleStore, log: ChangeLog, base: impl Into<String>) -> Self {
        Self { store, log, base: base.into(), vocab: Vocab::new() }
    }

    pub fn store(&self) -> &TripleStore {
        &self.store
    }

    pub fn log(&self) -> &ChangeLog {
        &self.log
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn change_log(&self, since: u64) -> &[ChangeRecord] {
        self.log.since(since)
    }

    /// Full IRI for a local name; anything containing `:` is taken as an IRI already.
    pub fn resolve_id(&self, id: &str) -> String {
        if id.contains(':') {
            id.to_string()
        } else {
            format!("{}{id}", self.base)
        }
    }

    pub fn root_iris(&self) -> Vec<String> {
        ROOT_NAMES.iter().map(|n| format!("{}{n}", self.base)).collect()
    }

    pub fn is_root(&self, iri: &str) -> bool {
        iri.strip_prefix(self.base.as_str()).is_some_and(|local| ROOT_NAMES.contains(&local))
    }

    pub fn is_concept(&self, iri: &str) -> bool {
        let Ok(term) = Term::iri(iri) else { return false };
        self.is_concept_term(&term)
    }

    fn is_concept_term(&self, term: &Term) -> bool {
        self.store.contains(&triple(term, &self.vocab.rdf_type, &self.vocab.owl_class))
    }

    /// All concept IRIs, sorted.
    pub fn concepts(&self) -> Vec<String> {
        self.store.subjects(&self.vocab.rdf_type, &self.vocab.owl_class).map(|t| t.value().to_string()).collect()
    }

    pub fn parents(&self, iri: &str) -> Vec<String> {
        let Ok(term) = Term::iri(iri) else { return Vec::new() };
        self.store.objects(&term, &self.vocab.sub_class_of).filter_map(|t| t.as_iri().map(str::to_string)).collect()
    }

    pub fn children(&self, iri: &str) -> Vec<String> {
        let Ok(term) = Term::iri(iri) else { return Vec::new() };
        self.store.subjects(&self.vocab.sub_class_of, &term).map(|t| t.value().to_string()).collect()
    }

    /// Transitive parents, excluding `iri` itself unless it lies on a cycle.
    pub fn ancestors(&self, iri: &str) -> BTreeSet<String> {
        self.closure(iri, |o, n| o.parents(n))
    }

    pub fn descendants(&self, iri: &str) -> BTreeSet<String> {
        self.closure(iri, |o, n| o.children(n))
    }

    fn closure(&self, start: &str, step: impl Fn(&Self, &str) -> Vec<String>) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<String> = step(self, start).into();
        while let Some(n) = queue.pop_front() {
            if seen.insert(n.clone()) {
                queue.extend(step(self, &n));
            }
        }
        seen
    }

    pub fn concept(&self, iri: &str) -> Option<Concept> {
        let term = Term::iri(iri).ok()?;
        if !self.is_concept_term(&term) {
            return None;
        }
        Some(Concept {
            id: iri.to_string(),
            parents: self.parents(iri).into_iter().collect(),
            labels: self.annotations(&term, &self.vocab.label),
            comments: self.annotations(&term, &self.vocab.comment),
        })
    }

    /// lang → text for tagged literals; the first (canonical order) wins per language.
    fn annotations(&self, subject: &Term, predicate: &Term) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for o in self.store.objects(subject, predicate) {
            if let Some(lang) = o.lang() {
                out.entry(lang.to_string()).or_insert_with(|| o.value().to_string());
            }
        }
        out
    }

    /// Concatenated text of a concept's annotations in one language, for indexing.
    pub fn annotation_text(&self, iri: &str, kind: AnnotationKind, lang: &str) -> Option<String> {
        let term = Term::iri(iri).ok()?;
        let predicate = match kind {
            AnnotationKind::Label => &self.vocab.label,
            AnnotationKind::Comment => &self.vocab.comment,
        };
        let texts: Vec<&str> =
            self.store.objects(&term, predicate).filter(|o| o.lang() == Some(lang)).map(Term::value).collect();
        (!texts.is_empty()).then(|| texts.join("\n"))
    }

    /// Languages in which a concept has label or comment annotations.
    pub fn annotation_langs(&self, iri: &str, kind: AnnotationKind) -> BTreeSet<String> {
        let Ok(term) = Term::iri(iri) else { return BTreeSet::new() };
        let predicate = match kind {
            AnnotationKind::Label => &self.vocab.label,
            AnnotationKind::Comment => &self.vocab.comment,
        };
        self.store.objects(&term, predicate).filter_map(|o| o.lang().map(str::to_string)).collect()
    }

    fn require_concept(&self, iri: &str) -> Result<Term> {
        let term = iri_term(iri)?;
        if self.is_concept_term(&term) {
            Ok(term)
        } else {
            Err(Error::NotFound(format!("concept <{iri}>")))
        }
    }

    fn annotation_triples(
        &self,
        subject: &Term,
        predicate: &Term,
        map: &BTreeMap<String, String>,
    ) -> Result<Vec<Triple>> {
        map.iter()
            .map(|(lang, text)| Ok(triple(subject, predicate, &Term::lang_literal(text.as_str(), lang)?)))
            .collect()
    }

    /// Adds a concept with its type, parent edges and annotations.
    pub fn create_concept(&mut self, concept: Concept) -> Result<Concept> {
        let id = iri_term(&concept.id)?;
        if self.is_concept_term(&id) {
            return Err(Error::Conflict(format!("concept <{}> already exists", concept.id)));
        }
        if concept.parents.contains(&concept.id) {
            return Err(Error::Cycle(format!("<{}> cannot be its own parent", concept.id)));
        }
        let is_root = self.is_root(&concept.id);
        if is_root && !concept.parents.is_empty() {
            return Err(Error::Validation(format!("root <{}> cannot have parents", concept.id)));
        }
        if !is_root && concept.parents.is_empty() {
            return Err(Error::Validation(format!("<{}> needs at least one parent", concept.id)));
        }
        let mut parent_terms = Vec::new();
        for p in &concept.parents {
            parent_terms.push(self.require_concept(p).map_err(|_| Error::NotFound(format!("parent concept <{p}>")))?);
        }
        for p in &concept.parents {
            if self.ancestors(p).contains(&concept.id) {
                return Err(Error::Cycle(format!("<{}> is already an ancestor of <{p}>", concept.id)));
            }
        }
        let mut triples = vec![triple(&id, &self.vocab.rdf_type, &self.vocab.owl_class)];
        triples.extend(parent_terms.iter().map(|p| triple(&id, &self.vocab.sub_class_of, p)));
        triples.extend(self.annotation_triples(&id, &self.vocab.label, &concept.labels)?);
        triples.extend(self.annotation_triples(&id, &self.vocab.comment, &concept.comments)?);

        self.store.extend(triples);
        let created = self.concept(&concept.id).expect("just created");
        self.log.append(ChangeOp::Create, &concept.id, json!({ "before": null, "after": created }));
        Ok(created)
    }

    /// Changes a concept's IRI, rewriting every triple that mentions it.
    pub fn rename_concept(&mut self, iri: &str, new_iri: &str) -> Result<Concept> {
        let old = self.require_concept(iri)?;
        let new = iri_term(new_iri)?;
        if self.is_root(iri) {
            return Err(Error::Conflict(format!("root <{iri}> cannot be renamed")));
        }
        if iri == new_iri {
            return Err(Error::Validation("new id equals the current id".to_string()));
        }
        if self.is_root(new_iri) {
            return Err(Error::Conflict(format!("<{new_iri}> is reserved for a root concept")));
        }
        let mentions_new = !self.store.match_pattern(Some(&new), None, None).is_empty()
            || !self.store.match_pattern(None, None, Some(&new)).is_empty();
        if mentions_new {
            return Err(Error::Conflict(format!("<{new_iri}> is already in use")));
        }
        let swap = |t: &Term| if *t == old { new.clone() } else { t.clone() };
        let mut affected = self.store.match_pattern(Some(&old), None, None);
        affected.extend(self.store.match_pattern(None, None, Some(&old)).into_iter().filter(|t| t.subject() != &old));
        let rewritten: Vec<Triple> =
            affected.iter().map(|t| triple(&swap(t.subject()), &swap(t.predicate()), &swap(t.object()))).collect();
        for t in &affected {
            self.store.remove(t);
        }
        self.store.extend(rewritten);
        self.log.append(ChangeOp::Rename, new_iri, json!({ "before": { "id": iri }, "after": { "id": new_iri } }));
        Ok(self.concept(new_iri).expect("renamed concept exists"))
    }

    /// Sets or removes labels and comments per language.
    pub fn annotate(&mut self, iri: &str, change: &AnnotationChange) -> Result<Concept> {
        let id = self.require_concept(iri)?;
        if change.is_empty() {
            return Err(Error::Validation("annotation change is empty".to_string()));
        }
        let mut removals = Vec::new();
        let mut additions = Vec::new();
        for (predicate, edits) in [(&self.vocab.label, &change.labels), (&self.vocab.comment, &change.comments)] {
            for (lang, text) in edits {
                let lang = crate::model::normalize_lang(lang)?;
                removals.extend(
                    self.store
                        .objects(&id, predicate)
                        .filter(|o| o.lang() == Some(lang.as_str()))
                        .map(|o| triple(&id, predicate, o)),
                );
                if let Some(text) = text {
                    additions.push(triple(&id, predicate, &Term::lang_literal(text.as_str(), &lang)?));
                }
            }
        }
        let before = self.concept(iri).expect("concept exists");
        for t in &removals {
            self.store.remove(t);
        }
        self.store.extend(additions);
        let after = self.concept(iri).expect("concept exists");
        self.log.append(ChangeOp::Annotate, iri, json!({ "before": before, "after": after, "change": change }));
        Ok(after)
    }

    /// Replaces a concept's parents.
    pub fn move_concept(&mut self, iri: &str, new_parents: &BTreeSet<String>) -> Result<Concept> {
        let id = self.require_concept(iri)?;
        if self.is_root(iri) {
            return Err(Error::Conflict(format!("root <{iri}> cannot be moved")));
        }
        if new_parents.is_empty() {
            return Err(Error::Validation(format!("<{iri}> needs at least one parent")));
        }
        let mut parent_terms = Vec::new();
        for p in new_parents {
            if p == iri {
                return Err(Error::Cycle(format!("<{iri}> cannot be its own parent")));
            }
            parent_terms.push(self.require_concept(p).map_err(|_| Error::NotFound(format!("parent concept <{p}>")))?);
        }
        let descendants = self.descendants(iri);
        if let Some(p) = new_parents.iter().find(|p| descendants.contains(*p)) {
            return Err(Error::Cycle(format!("<{p}> is a descendant of <{iri}>")));
        }
        let before: BTreeSet<String> = self.parents(iri).into_iter().collect();
        let old_edges: Vec<Triple> = self.store.match_pattern(Some(&id), Some(&self.vocab.sub_class_of), None);
        for t in &old_edges {
            self.store.remove(t);
        }
        self.store.extend(parent_terms.iter().map(|p| triple(&id, &self.vocab.sub_class_of, p)));
        self.log.append(
            ChangeOp::Move,
            iri,
            json!({ "before": { "parents": before }, "after": { "parents": new_parents } }),
        );
        Ok(self.concept(iri).expect("concept exists"))
    }

    /// Removes a concept and every triple mentioning it.
    pub fn delete_concept(&mut self, iri: &str, mode: DeleteMode) -> Result<DeleteOutcome> {
        let id = self.require_concept(iri)?;
        if self.is_root(iri) {
            return Err(Error::Conflict(format!("root <{iri}> cannot be deleted")));
        }
        let children = self.children(iri);
        if mode == DeleteMode::RefuseIfChildren && !children.is_empty() {
            return Err(Error::Conflict(format!("<{iri}> has {} child concept(s)", children.len())));
        }
        let before = self.concept(iri).expect("concept exists");
        let parents: Vec<Term> = self.store.objects(&id, &self.vocab.sub_class_of).cloned().collect();

        let mut doomed = self.store.match_pattern(Some(&id), None, None);
        doomed.extend(self.store.match_pattern(None, None, Some(&id)).into_iter().filter(|t| t.subject() != &id));
        doomed.extend(
            self.store
                .match_pattern(None, Some(&id), None)
                .into_iter()
                .filter(|t| t.subject() != &id && t.object() != &id),
        );
        for t in &doomed {
            self.store.remove(t);
        }
        for child in &children {
            let child = iri_term(child)?;
            self.store.extend(parents.iter().map(|p| triple(&child, &self.vocab.sub_class_of, p)));
        }
        let reparented = if mode == DeleteMode::ReparentChildren { children } else { Vec::new() };
        self.log.append(
            ChangeOp::Delete,
            iri,
            json!({
                "before": before,
                "after": null,
                "mode": mode,
                "removed_triples": doomed.len(),
                "reparented": reparented,
            }),
        );
        Ok(DeleteOutcome { removed_triples: doomed.len(), reparented })
    }

    /// Merges triples into the store; one Import record lists those that were new.
    pub fn import_triples(&mut self, triples: Vec<Triple>, source: &str) -> usize {
        let mut added = TripleStore::new();
        for t in triples {
            if self.store.insert(t.clone()) {
                added.insert(t);
            }
        }
        let count = added.len();
        let subject = self.base.clone();
        self.log.append(
            ChangeOp::Import,
            &subject,
            json!({ "before": null, "after": { "source": source, "added": count, "triples": turtle::to_ntriples(&added) } }),
        );
        count
    }

    /// Appends a record for a mutation handled outside the triple store.
    pub(crate) fn log_event(&mut self, op: ChangeOp, subject: &str, detail: Value) -> &ChangeRecord {
        self.log.append(op, subject, detail)
    }

    /// Re-executes one logged operation. Used to rebuild state from a log.
    pub fn apply_record(&mut self, record: &ChangeRecord) -> Result<()> {
        let detail = &record.detail;
        let bad = || Error::Validation(format!("change record {} has an unexpected payload", record.seq));
        match record.op {
            ChangeOp::Create => {
                let concept: Concept = serde_json::from_value(detail["after"].clone()).map_err(|_| bad())?;
                self.create_concept(concept)?;
            }
            ChangeOp::Rename => {
                let from = detail["before"]["id"].as_str().ok_or_else(bad)?;
                let to = detail["after"]["id"].as_str().ok_or_else(bad)?;
                self.rename_concept(from, to)?;
            }
            ChangeOp::Annotate => {
                let change: AnnotationChange = serde_json::from_value(detail["change"].clone()).map_err(|_| bad())?;
                self.annotate(&record.subject, &change)?;
            }
            ChangeOp::Move => {
                let parents: BTreeSet<String> =
                    serde_json::from_value(detail["after"]["parents"].clone()).map_err(|_| bad())?;
                self.move_concept(&record.subject, &parents)?;
            }
            ChangeOp::Delete => {
                let mode: DeleteMode = serde_json::from_value(detail["mode"].clone()).map_err(|_| bad())?;
                self.delete_concept(&record.subject, mode)?;
            }
            ChangeOp::Import => {
                let after = &detail["after"];
                match after.get("triples").and_then(Value::as_str) {
                    Some(nt) => {
                        let triples = turtle::parse_turtle(nt, None)?;
                        let source = after["source"].as_str().unwrap_or("replay");
                        self.import_triples(triples, source);
                    }
                    None => {
                        self.log_event(ChangeOp::Import, &record.subject, detail.clone());
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks the structural and annotation invariants of the whole store.
    pub fn validate(&self) -> ValidationReport {
        validate_store(&self.store, &self.base)
    }
}

/// Validation over a raw store, with roots taken under `base`.
pub fn validate_store(store: &TripleStore, base: &str) -> ValidationReport {
    let v = Vocab::new();
    let concepts: BTreeSet<Term> = store.subjects(&v.rdf_type, &v.owl_class).cloned().collect();
    let roots: BTreeSet<String> = ROOT_NAMES.iter().map(|n| format!("{base}{n}")).collect();
    let mut violations = Vec::new();

    let edges = store.match_pattern(None, Some(&v.sub_class_of), None);
    let mut parents: BTreeMap<&Term, Vec<&Term>> = BTreeMap::new();
    for e in &edges {
        parents.entry(e.subject()).or_default().push(e.object());
    }

    // (a) cycles: one violation per strongly connected component that loops.
    for component in cyclic_components(&parents) {
        let names: Vec<&str> = component.iter().map(|t| t.value()).collect();
        violations.push(Violation {
            kind: ViolationKind::Cycle,
            subject: names[0].to_string(),
            message: format!("subClassOf cycle through {}", names.join(", ")),
        });
    }

    // (b) the parentless concepts are exactly the four roots.
    for root in &roots {
        let term = Term::iri(root.as_str()).ok();
        match term.filter(|t| concepts.contains(t)) {
            None => violations.push(Violation {
                kind: ViolationKind::Roots,
                subject: root.clone(),
                message: "root concept is missing".to_string(),
            }),
            Some(t) if parents.contains_key(&t) => violations.push(Violation {
                kind: ViolationKind::Roots,
                subject: root.clone(),
                message: "root concept has parents".to_string(),
            }),
            Some(_) => {}
        }
    }
    for c in &concepts {
        if !parents.contains_key(c) && !roots.contains(c.value()) {
            violations.push(Violation {
                kind: ViolationKind::Roots,
                subject: c.value().to_string(),
                message: "concept has no parent but is not a root".to_string(),
            });
        }
    }

    // (c) every non-root reaches a root.
    for c in concepts.iter().filter(|c| !roots.contains(c.value())) {
        let mut seen = BTreeSet::new();
        let mut stack = vec![c];
        let mut reached = false;
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if roots.contains(n.value()) && concepts.contains(n) {
                reached = true;
                break;
            }
            stack.extend(parents.get(n).into_iter().flatten().copied());
        }
        if !reached {
            violations.push(Violation {
                kind: ViolationKind::Unreachable,
                subject: c.value().to_string(),
                message: "no subClassOf path to a root".to_string(),
            });
        }
    }

    // (d) exactly one en and one pt label and comment; nothing else.
    let mut labels = 0;
    let mut comments = 0;
    for c in &concepts {
        for (predicate, what, counter) in [(&v.label, "label", &mut labels), (&v.comment, "comment", &mut comments)] {
            let objects: Vec<&Term> = store.objects(c, predicate).collect();
            *counter += objects.len();
            for lang in LANGUAGES {
                let n = objects.iter().filter(|o| o.lang() == Some(lang)).count();
                if n != 1 {
                    violations.push(Violation {
                        kind: ViolationKind::Annotation,
                        subject: c.value().to_string(),
                        message: format!("expected exactly one {lang} {what}, found {n}"),
                    });
                }
            }
            for o in objects.iter().filter(|o| !o.lang().is_some_and(|l| LANGUAGES.contains(&l))) {
                violations.push(Violation {
                    kind: ViolationKind::Annotation,
                    subject: c.value().to_string(),
                    message: format!("{what} {o} is not tagged en or pt"),
                });
            }
        }
    }

    // (e) every subClassOf object is a concept.
    for e in &edges {
        if !concepts.contains(e.object()) {
            violations.push(Violation {
                kind: ViolationKind::DanglingParent,
                subject: e.subject().value().to_string(),
                message: format!("parent {} is not a concept", e.object()),
            });
        }
    }

    violations.sort();
    ValidationReport { concepts: concepts.len(), labels, comments, violations }
}

/// Strongly connected components with a cycle (size > 1 or a self-loop),
/// each sorted, via iterative Tarjan.
fn cyclic_components<'a>(graph: &BTreeMap<&'a Term, Vec<&'a Term>>) -> Vec<Vec<&'a Term>> {
    let mut index: BTreeMap<&Term, usize> = BTreeMap::new();
    let mut low: BTreeMap<&Term, usize> = BTreeMap::new();
    let mut on_stack: BTreeSet<&Term> = BTreeSet::new();
    let mut stack: Vec<&Term> = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    let empty = Vec::new();

    for &start in graph.keys() {
        if index.contains_key(start) {
            continue;
        }
        // (node, next child position)
        let mut work: Vec<(&Term, usize)> = vec![(start, 0)];
        index.insert(start, counter);
        low.insert(start, counter);
        counter += 1;
        stack.push(start);
        on_stack.insert(start);
        while let Some(&mut (node, ref mut child_pos)) = work.last_mut() {
            let succs = graph.get(node).unwrap_or(&empty);
            if let Some(&next) = succs.get(*child_pos) {
                *child_pos += 1;
                if !index.contains_key(next) {
                    index.insert(next, counter);
                    low.insert(next, counter);
                    counter += 1;
                    stack.push(next);
                    on_stack.insert(next);
                    work.push((next, 0));
                } else if on_stack.contains(next) {
                    let l = low[node].min(index[next]);
                    low.insert(node, l);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    let l = low[parent].min(low[node]);
                    low.insert(parent, l);
                }
                if low[node] == index[node] {
                    let mut component = Vec::new();
                    loop {
                        let n = stack.pop().expect("tarjan stack");
                        on_stack.remove(n);
                        component.push(n);
                        if n == node {
                            break;
                        }
                    }
                    let self_loop = succs.contains(&node);
                    if component.len() > 1 || self_loop {
                        component.sort();
                        out.push(component);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: &str = DEFAULT_BASE;

    fn id(local: &str) -> String {
        format!("{B}{local}")
    }

    fn bilingual(en: &str, pt: &str) -> BTreeMap<String, String> {
        [("en".to_string(), en.to_string()), ("pt".to_string(), pt.to_string())].into()
    }

    fn concept(local: &str, parents: &[&str]) -> Concept {
        Concept {
            id: id(local),
            parents: parents.iter().map(|p| id(p)).collect(),
            labels: bilingual(local, local),
            comments: bilingual(&format!("{local} comment"), &format!("comentário {local}")),
        }
    }

    /// Four roots plus the chain A -> B -> C under GeneralConcept.
    fn fixture() -> Ontology {
        let mut o = Ontology::new(B);
        for r in ROOT_NAMES {
            o.create_concept(concept(r, &[])).unwrap();
        }
        o.create_concept(concept("C", &["GeneralConcept"])).unwrap();
        o.create_concept(concept("B", &["C"])).unwrap();
        o.create_concept(concept("A", &["B"])).unwrap();
        o
    }

    fn snapshot(o: &Ontology) -> String {
        turtle::to_ntriples(o.store())
    }

    #[test]
    fn create_adds_six_triples_and_one_record() {
        let mut o = fixture();
        let before = o.store().len();
        let log_before = o.log().len();
        let c = o.create_concept(concept("Aura", &["GeneralConcept"])).unwrap();
        assert_eq!(c.parents.len(), 1);
        assert_eq!(o.store().len(), before + 6);
        assert_eq!(o.log().len(), log_before + 1);
        assert_eq!(o.log().records().last().unwrap().op, ChangeOp::Create);
        assert!(o.validate().is_valid());
    }

    #[test]
    fn create_errors_leave_state_untouched() {
        let mut o = fixture();
        let snap = snapshot(&o);
        let log = o.log().len();
        assert!(matches!(o.create_concept(concept("X", &["X"])), Err(Error::Cycle(_))));
        assert!(matches!(o.create_concept(concept("A", &["B"])), Err(Error::Conflict(_))));
        assert!(matches!(o.create_concept(concept("X", &["Nope"])), Err(Error::NotFound(_))));
        assert!(matches!(o.create_concept(concept("X", &[])), Err(Error::Validation(_))));
        assert!(matches!(o.create_concept(concept("SeizureType", &["A"])), Err(Error::Conflict(_))));
        assert_eq!(snapshot(&o), snap);
        assert_eq!(o.log().len(), log);
    }

    #[test]
    fn move_under_grandparent() {
        let mut o = fixture();
        let c = o.move_concept(&id("A"), &[id("C")].into()).unwrap();
        assert_eq!(c.parents, [id("C")].into());
        assert!(o.validate().is_valid());
    }

    #[test]
    fn move_into_own_subtree_is_a_cycle() {
        let mut o = fixture();
        let snap = snapshot(&o);
        assert!(matches!(o.move_concept(&id("B"), &[id("A")].into()), Err(Error::Cycle(_))));
        assert!(matches!(o.move_concept(&id("C"), &[id("A")].into()), Err(Error::Cycle(_))));
        assert!(matches!(o.move_concept(&id("B"), &[id("B")].into()), Err(Error::Cycle(_))));
        assert!(matches!(o.move_concept(&id("Nope"), &[id("C")].into()), Err(Error::NotFound(_))));
        assert!(matches!(o.move_concept(&id("SeizureType"), &[id("C")].into()), Err(Error::Conflict(_))));
        assert_eq!(snapshot(&o), snap);
    }

    #[test]
    fn delete_modes() {
        let mut o = fixture();
        let before = o.store().len();
        let out = o.delete_concept(&id("A"), DeleteMode::RefuseIfChildren).unwrap();
        assert_eq!(out.removed_triples, 6);
        assert_eq!(o.store().len(), before - 6);

        let mut o = fixture();
        assert!(matches!(o.delete_concept(&id("B"), DeleteMode::RefuseIfChildren), Err(Error::Conflict(_))));
        let out = o.delete_concept(&id("B"), DeleteMode::ReparentChildren).unwrap();
        assert_eq!(out.reparented, vec![id("A")]);
        assert_eq!(o.parents(&id("A")), vec![id("C")]);
        assert!(o.validate().is_valid());

        assert!(matches!(o.delete_concept(&id("SeizureType"), DeleteMode::ReparentChildren), Err(Error::Conflict(_))));
        assert!(matches!(o.delete_concept(&id("B"), DeleteMode::ReparentChildren), Err(Error::NotFound(_))));
    }

    #[test]
    fn rename_rewrites_references() {
        let mut o = fixture();
        o.rename_concept(&id("B"), &id("Bee")).unwrap();
        assert_eq!(o.parents(&id("A")), vec![id("Bee")]);
        assert_eq!(o.parents(&id("Bee")), vec![id("C")]);
        assert!(!o.is_concept(&id("B")));
        assert!(o.validate().is_valid());
        assert!(matches!(o.rename_concept(&id("A"), &id("C")), Err(Error::Conflict(_))));
        assert!(matches!(o.rename_concept(&id("GeneralConcept"), &id("G")), Err(Error::Conflict(_))));
    }

    #[test]
    fn annotate_replaces_and_removes() {
        let mut o = fixture();
        let change = AnnotationChange {
            labels: [("pt".to_string(), Some("Bê".to_string()))].into(),
            comments: [("en".to_string(), None)].into(),
        };
        let c = o.annotate(&id("B"), &change).unwrap();
        assert_eq!(c.labels["pt"], "Bê");
        assert!(!c.comments.contains_key("en"));
        let report = o.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::Annotation);
        assert!(matches!(o.annotate(&id("B"), &AnnotationChange::default()), Err(Error::Validation(_))));
    }

    #[test]
    fn validation_detects_injected_faults() {
        let mut o = fixture();
        let report = o.validate();
        assert_eq!((report.concepts, report.labels, report.comments), (7, 14, 14));
        assert!(report.is_valid());

        // drop one pt label
        let mut store = o.store().clone();
        let pt = Triple::new(
            Term::iri(id("A")).unwrap(),
            Term::iri(vocab::RDFS_LABEL).unwrap(),
            Term::lang_literal("A", "pt").unwrap(),
        )
        .unwrap();
        assert!(store.remove(&pt));
        let report = validate_store(&store, B);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::Annotation);

        // close a cycle at store level
        let sub = Term::iri(vocab::RDFS_SUBCLASS_OF).unwrap();
        o.import_triples(
            vec![Triple::new(Term::iri(id("C")).unwrap(), sub.clone(), Term::iri(id("A")).unwrap()).unwrap()],
            "test",
        );
        let report = o.validate();
        assert_eq!(report.count(ViolationKind::Cycle), 1);

        // dangling parent
        let mut o = fixture();
        o.import_triples(
            vec![Triple::new(Term::iri(id("A")).unwrap(), sub, Term::iri(id("Ghost")).unwrap()).unwrap()],
            "test",
        );
        let report = o.validate();
        assert_eq!(report.count(ViolationKind::DanglingParent), 1);
    }

    #[test]
    fn change_log_sequence_and_since() {
        let mut o = Ontology::new(B);
        assert!(o.change_log(0).is_empty());
        o.create_concept(concept("GeneralConcept", &[])).unwrap();
        assert_eq!(o.change_log(0).len(), 1);
        assert_eq!(o.change_log(0)[0].op, ChangeOp::Create);
        o.create_concept(concept("X", &["GeneralConcept"])).unwrap();
        let seqs: Vec<u64> = o.change_log(0).iter().map(|r| r.seq).collect();
        assert_eq!(seqs, vec![1, 2]);
        assert_eq!(o.change_log(1).len(), 1);
        assert!(o.change_log(2).is_empty());
    }

    #[test]
    fn replay_reproduces_store() {
        let mut o = fixture();
        o.rename_concept(&id("B"), &id("B2")).unwrap();
        o.move_concept(&id("A"), &[id("C"), id("SeizureType")].into()).unwrap();
        o.annotate(
            &id("A"),
            &AnnotationChange { labels: [("en".to_string(), Some("Ay".into()))].into(), ..Default::default() },
        )
        .unwrap();
        o.delete_concept(&id("C"), DeleteMode::ReparentChildren).unwrap();
        let mut replayed = Ontology::new(B);
        for r in o.log().records() {
            replayed.apply_record(r).unwrap();
        }
        assert_eq!(snapshot(&replayed), snapshot(&o));
        assert_eq!(replayed.log().len(), o.log().len());
    }

    #[test]
    fn jsonl_round_trip() {
        let o = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("changes.jsonl");
        for r in o.log().records() {
            ChangeLog::append_jsonl(&path, r).unwrap();
        }
        let loaded = ChangeLog::load_jsonl(&path).unwrap();
        assert_eq!(&loaded, o.log());
        assert_eq!(loaded.to_jsonl(), fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn tarjan_finds_self_loops_and_cycles() {
        let t = |s: &str| Term::iri(format!("http://e/{s}")).unwrap();
        let (a, b, c, d) = (t("a"), t("b"), t("c"), t("d"));
        let mut g: BTreeMap<&Term, Vec<&Term>> = BTreeMap::new();
        g.insert(&a, vec![&b]);
        g.insert(&b, vec![&c]);
        g.insert(&c, vec![&a]);
        g.insert(&d, vec![&d]);
        let comps = cyclic_components(&g);
        assert_eq!(comps, vec![vec![&a, &b, &c], vec![&d]]);
    }
}
