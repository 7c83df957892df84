//! Randomized management scripts checked against an independent shadow model.
//!
//! The shadow tracks parents and per-language annotation counts, predicts the
//! outcome of every operation (success or the exact error kind) and the
//! validation report, including violations injected on purpose through
//! annotation edits.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use ontokms_core::kb::KnowledgeBase;
use ontokms_core::model::Term;
use ontokms_core::ontology::{AnnotationChange, Concept, DeleteMode, ViolationKind, DEFAULT_BASE, ROOT_NAMES};
use ontokms_core::vocab::{OWL_CLASS, RDFS_COMMENT, RDFS_LABEL, RDFS_SUBCLASS_OF, RDF_TYPE};
use ontokms_core::Error;
use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Ok,
    NotFound,
    Conflict,
    Cycle,
    Validation,
    Other,
}

impl Outcome {
    fn of<T>(result: &Result<T, Error>) -> Self {
        match result {
            Ok(_) => Self::Ok,
            Err(Error::NotFound(_)) => Self::NotFound,
            Err(Error::Conflict(_)) => Self::Conflict,
            Err(Error::Cycle(_)) => Self::Cycle,
            Err(Error::Validation(_)) => Self::Validation,
            Err(_) => Self::Other,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct ShadowConcept {
    parents: BTreeSet<String>,
    labels: BTreeMap<String, usize>,
    comments: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Shadow {
    base: String,
    pub(crate) concepts: BTreeMap<String, ShadowConcept>,
}

impl Shadow {
    /// Reads concepts straight from the raw triples.
    pub(crate) fn from_kb(kb: &KnowledgeBase) -> Self {
        let mut concepts: BTreeMap<String, ShadowConcept> = BTreeMap::new();
        for t in kb.store().iter() {
            if t.predicate().value() == RDF_TYPE && t.object().value() == OWL_CLASS {
                concepts.entry(t.subject().value().to_string()).or_default();
            }
        }
        for t in kb.store().iter() {
            let Some(c) = concepts.get_mut(t.subject().value()) else { continue };
            let lang = t.object().lang().unwrap_or("").to_string();
            match t.predicate().value() {
                RDFS_SUBCLASS_OF => {
                    c.parents.insert(t.object().value().to_string());
                }
                RDFS_LABEL => *c.labels.entry(lang).or_insert(0) += 1,
                RDFS_COMMENT => *c.comments.entry(lang).or_insert(0) += 1,
                _ => {}
            }
        }
        Self { base: kb.ontology().base().to_string(), concepts }
    }

    fn is_root(&self, id: &str) -> bool {
        id.strip_prefix(&self.base).is_some_and(|l| ROOT_NAMES.contains(&l))
    }

    fn children(&self, id: &str) -> Vec<String> {
        self.concepts.iter().filter(|(_, c)| c.parents.contains(id)).map(|(k, _)| k.clone()).collect()
    }

    fn descendants(&self, id: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<String> = self.children(id).into();
        while let Some(n) = queue.pop_front() {
            if seen.insert(n.clone()) {
                queue.extend(self.children(&n));
            }
        }
        seen
    }

    fn expected_annotation_violations(&self) -> usize {
        let mut n = 0;
        for c in self.concepts.values() {
            for map in [&c.labels, &c.comments] {
                for lang in ["en", "pt"] {
                    n += usize::from(map.get(lang).copied().unwrap_or(0) != 1);
                }
                n += map.iter().filter(|(l, _)| *l != "en" && *l != "pt").map(|(_, k)| *k).sum::<usize>();
            }
        }
        n
    }

    fn totals(&self) -> (usize, usize, usize) {
        let sum = |f: fn(&ShadowConcept) -> &BTreeMap<String, usize>| {
            self.concepts.values().map(|c| f(c).values().sum::<usize>()).sum::<usize>()
        };
        (self.concepts.len(), sum(|c| &c.labels), sum(|c| &c.comments))
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Create(Concept),
    Rename(String, String),
    Annotate(String, AnnotationChange),
    Move(String, BTreeSet<String>),
    Delete(String, DeleteMode),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Create(_) => "create",
            Op::Rename(..) => "rename",
            Op::Annotate(..) => "annotate",
            Op::Move(..) => "move",
            Op::Delete(..) => "delete",
        }
    }
}

fn count_map(map: &BTreeMap<String, String>) -> BTreeMap<String, usize> {
    map.keys().map(|k| (k.clone(), 1)).collect()
}

/// Predicts the outcome and, on success, applies the operation to the shadow.
pub(crate) fn predict(shadow: &mut Shadow, op: &Op) -> Outcome {
    match op {
        Op::Create(c) => {
            if shadow.concepts.contains_key(&c.id) {
                return Outcome::Conflict;
            }
            if c.parents.contains(&c.id) {
                return Outcome::Cycle;
            }
            let root = shadow.is_root(&c.id);
            if root != c.parents.is_empty() {
                return Outcome::Validation;
            }
            if c.parents.iter().any(|p| !shadow.concepts.contains_key(p)) {
                return Outcome::NotFound;
            }
            shadow.concepts.insert(
                c.id.clone(),
                ShadowConcept {
                    parents: c.parents.clone(),
                    labels: count_map(&c.labels),
                    comments: count_map(&c.comments),
                },
            );
            Outcome::Ok
        }
        Op::Rename(from, to) => {
            if !shadow.concepts.contains_key(from) {
                return Outcome::NotFound;
            }
            if shadow.is_root(from) {
                return Outcome::Conflict;
            }
            if from == to {
                return Outcome::Validation;
            }
            if shadow.is_root(to) || shadow.concepts.contains_key(to) {
                return Outcome::Conflict;
            }
            let c = shadow.concepts.remove(from).unwrap();
            shadow.concepts.insert(to.clone(), c);
            for c in shadow.concepts.values_mut() {
                if c.parents.remove(from) {
                    c.parents.insert(to.clone());
                }
            }
            Outcome::Ok
        }
        Op::Annotate(id, change) => {
            let Some(c) = shadow.concepts.get_mut(id) else { return Outcome::NotFound };
            if change.is_empty() {
                return Outcome::Validation;
            }
            for (edits, counts) in [(&change.labels, &mut c.labels), (&change.comments, &mut c.comments)] {
                for (lang, text) in edits {
                    if text.is_some() {
                        counts.insert(lang.clone(), 1);
                    } else {
                        counts.remove(lang);
                    }
                }
            }
            Outcome::Ok
        }
        Op::Move(id, parents) => {
            if !shadow.concepts.contains_key(id) {
                return Outcome::NotFound;
            }
            if shadow.is_root(id) {
                return Outcome::Conflict;
            }
            if parents.is_empty() {
                return Outcome::Validation;
            }
            for p in parents {
                if p == id {
                    return Outcome::Cycle;
                }
                if !shadow.concepts.contains_key(p) {
                    return Outcome::NotFound;
                }
            }
            let below = shadow.descendants(id);
            if parents.iter().any(|p| below.contains(p)) {
                return Outcome::Cycle;
            }
            shadow.concepts.get_mut(id).unwrap().parents = parents.clone();
            Outcome::Ok
        }
        Op::Delete(id, mode) => {
            let Some(gone) = shadow.concepts.get(id).cloned() else { return Outcome::NotFound };
            if shadow.is_root(id) {
                return Outcome::Conflict;
            }
            let children = shadow.children(id);
            if *mode == DeleteMode::RefuseIfChildren && !children.is_empty() {
                return Outcome::Conflict;
            }
            shadow.concepts.remove(id);
            for child in children {
                let c = shadow.concepts.get_mut(&child).unwrap();
                c.parents.remove(id);
                c.parents.extend(gone.parents.iter().cloned());
            }
            Outcome::Ok
        }
    }
}

pub(crate) fn execute(kb: &mut KnowledgeBase, op: &Op) -> Outcome {
    match op {
        Op::Create(c) => Outcome::of(&kb.create_concept(c.clone())),
        Op::Rename(a, b) => Outcome::of(&kb.rename_concept(a, b)),
        Op::Annotate(id, change) => Outcome::of(&kb.annotate(id, change)),
        Op::Move(id, parents) => Outcome::of(&kb.move_concept(id, parents)),
        Op::Delete(id, mode) => Outcome::of(&kb.delete_concept(id, *mode)),
    }
}

pub(crate) struct OpGen {
    pub(crate) base: String,
    pub(crate) fresh: usize,
}

impl OpGen {
    fn fresh_id(&mut self) -> String {
        self.fresh += 1;
        format!("{}FZ-{:05}", self.base, self.fresh)
    }

    fn ghost(&self, rng: &mut ChaCha8Rng) -> String {
        format!("{}Ghost-{}", self.base, rng.gen_range(0..1000))
    }

    fn existing(&self, rng: &mut ChaCha8Rng, shadow: &Shadow) -> String {
        shadow.concepts.keys().choose(rng).cloned().unwrap_or_else(|| self.ghost(rng))
    }

    fn target(&self, rng: &mut ChaCha8Rng, shadow: &Shadow) -> String {
        if rng.gen_bool(0.05) {
            self.ghost(rng)
        } else {
            self.existing(rng, shadow)
        }
    }

    fn parents(&self, rng: &mut ChaCha8Rng, shadow: &Shadow, me: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let roll = rng.gen_range(0..100);
        if roll < 4 {
            return out;
        }
        for _ in 0..rng.gen_range(1..=2) {
            out.insert(self.existing(rng, shadow));
        }
        if (4..8).contains(&roll) {
            out.insert(self.ghost(rng));
        } else if (8..12).contains(&roll) {
            out.insert(me.to_string());
        }
        out
    }

    pub(crate) fn text(rng: &mut ChaCha8Rng, lang: &str) -> String {
        let words: [&str; 8] = ["focal", "crise", "síndrome", "onda", "spike", "ausência", "tónica", "ritmo"];
        let n = rng.gen_range(1..=3);
        let mut t: Vec<&str> = (0..n).map(|_| *words.choose(rng).unwrap()).collect();
        t.push(lang);
        t.join(" ")
    }

    fn annotations(rng: &mut ChaCha8Rng, inject: bool) -> (BTreeMap<String, String>, BTreeMap<String, String>) {
        let mut labels = BTreeMap::new();
        let mut comments = BTreeMap::new();
        for lang in ["en", "pt"] {
            labels.insert(lang.to_string(), Self::text(rng, lang));
            comments.insert(lang.to_string(), Self::text(rng, lang));
        }
        if inject {
            match rng.gen_range(0..3) {
                0 => {
                    labels.remove("pt");
                }
                1 => {
                    comments.insert("de".to_string(), Self::text(rng, "de"));
                }
                _ => {
                    comments.remove("en");
                }
            }
        }
        (labels, comments)
    }

    pub(crate) fn next(&mut self, rng: &mut ChaCha8Rng, shadow: &Shadow) -> Op {
        match rng.gen_range(0..100) {
            0..=24 => {
                let id = match rng.gen_range(0..100) {
                    0..=84 => self.fresh_id(),
                    85..=94 => self.existing(rng, shadow),
                    _ => format!("{}{}", self.base, ROOT_NAMES.choose(rng).unwrap()),
                };
                let parents = self.parents(rng, shadow, &id);
                let inject = rng.gen_bool(0.1);
                let (labels, comments) = Self::annotations(rng, inject);
                Op::Create(Concept { id, parents, labels, comments })
            }
            25..=39 => {
                let from = self.target(rng, shadow);
                let to = match rng.gen_range(0..100) {
                    0..=79 => self.fresh_id(),
                    80..=94 => self.existing(rng, shadow),
                    _ => from.clone(),
                };
                Op::Rename(from, to)
            }
            40..=64 => {
                let id = self.target(rng, shadow);
                let mut change = AnnotationChange::default();
                match rng.gen_range(0..100) {
                    0..=59 => {
                        let lang = ["en", "pt"].choose(rng).unwrap().to_string();
                        let text = Some(Self::text(rng, &lang));
                        if rng.gen_bool(0.5) {
                            change.labels.insert(lang, text);
                        } else {
                            change.comments.insert(lang, text);
                        }
                    }
                    60..=74 => {
                        // Repair: exactly one en and pt annotation, extras removed.
                        for lang in ["en", "pt"] {
                            change.labels.insert(lang.into(), Some(Self::text(rng, lang)));
                            change.comments.insert(lang.into(), Some(Self::text(rng, lang)));
                        }
                        for lang in ["de", "es"] {
                            change.labels.insert(lang.into(), None);
                            change.comments.insert(lang.into(), None);
                        }
                    }
                    75..=84 => {
                        let lang = ["en", "pt"].choose(rng).unwrap().to_string();
                        change.labels.insert(lang, None);
                    }
                    85..=94 => {
                        change.labels.insert("es".into(), Some(Self::text(rng, "es")));
                    }
                    _ => {}
                }
                Op::Annotate(id, change)
            }
            65..=84 => {
                let id = if rng.gen_bool(0.05) {
                    format!("{}{}", self.base, ROOT_NAMES.choose(rng).unwrap())
                } else {
                    self.target(rng, shadow)
                };
                let parents = self.parents(rng, shadow, &id);
                Op::Move(id, parents)
            }
            _ => {
                let id = self.target(rng, shadow);
                let mode = if rng.gen_bool(0.5) { DeleteMode::RefuseIfChildren } else { DeleteMode::ReparentChildren };
                Op::Delete(id, mode)
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FuzzSummary {
    pub steps: usize,
    pub successes: usize,
    /// (operation, outcome) → count
    pub outcomes: BTreeMap<(&'static str, Outcome), usize>,
    pub validations: usize,
    pub max_injected: usize,
    pub final_concepts: usize,
    pub log_records: usize,
}

fn compare_with_shadow(kb: &KnowledgeBase, shadow: &Shadow, step: usize) -> Result<usize, String> {
    let report = kb.ontology().validate();
    let (concepts, labels, comments) = shadow.totals();
    let expected_annotation = shadow.expected_annotation_violations();
    let got = (report.concepts, report.labels, report.comments, report.count(ViolationKind::Annotation));
    if got != (concepts, labels, comments, expected_annotation) {
        return Err(format!(
            "step {step}: report (concepts, labels, comments, annotation violations) = {got:?}, shadow expects {:?}",
            (concepts, labels, comments, expected_annotation)
        ));
    }
    let structural = report.violations.len() - expected_annotation;
    if structural != 0 {
        return Err(format!("step {step}: unexpected structural violations {:?}", report.violations));
    }
    let ids = kb.ontology().concepts();
    if ids.iter().ne(shadow.concepts.keys()) {
        return Err(format!("step {step}: concept sets differ"));
    }
    for (id, c) in &shadow.concepts {
        let parents: BTreeSet<String> = kb.ontology().parents(id).into_iter().collect();
        if parents != c.parents {
            return Err(format!("step {step}: parents of {id} are {parents:?}, shadow has {:?}", c.parents));
        }
    }
    Ok(expected_annotation)
}

/// Independent of the validator: every subClassOf target must be a class and
/// the subClassOf graph must have no cycle (three-colour depth-first search).
pub fn check_hierarchy(kb: &KnowledgeBase) -> Result<(), String> {
    let store = kb.store();
    let class = Term::iri(OWL_CLASS).expect("valid IRI");
    let classes: BTreeSet<&str> =
        store.subjects(&Term::iri(RDF_TYPE).expect("valid IRI"), &class).map(Term::value).collect();
    let mut graph: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in store.match_pattern(None, Some(&Term::iri(RDFS_SUBCLASS_OF).expect("valid IRI")), None) {
        graph.entry(t.subject().value().to_string()).or_default().push(t.object().value().to_string());
    }
    for (child, parents) in &graph {
        if let Some(p) = parents.iter().find(|p| !classes.contains(p.as_str())) {
            return Err(format!("{child} has dangling parent {p}"));
        }
    }
    // 1 = on the current path, 2 = finished.
    let mut colour: BTreeMap<&str, u8> = BTreeMap::new();
    for start in graph.keys() {
        if colour.contains_key(start.as_str()) {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        colour.insert(start, 1);
        while let Some((node, next)) = stack.pop() {
            let parents = graph.get(node).map_or(&[][..], Vec::as_slice);
            if let Some(p) = parents.get(next) {
                stack.push((node, next + 1));
                match colour.get(p.as_str()) {
                    Some(1) => return Err(format!("subClassOf cycle through {p}")),
                    Some(_) => {}
                    None => {
                        colour.insert(p, 1);
                        stack.push((p, 0));
                    }
                }
            } else {
                colour.insert(node, 2);
            }
        }
    }
    Ok(())
}

/// Runs `steps` random operations on a seeded knowledge base. Every outcome
/// must match the shadow's prediction; failed operations must leave store and
/// log untouched; the hierarchy is checked for cycles and dangling parents
/// after every step; the full validation report is compared every
/// `validate_every` steps and at the end; finally the change log is replayed into an empty base and must
/// reproduce the store exactly.
pub fn run_consistency_fuzz(seed: u64, steps: usize, validate_every: usize) -> Result<FuzzSummary, String> {
    let mut rng = gen::rng(seed);
    let mut kb = KnowledgeBase::seeded(DEFAULT_BASE);
    let mut shadow = Shadow::from_kb(&kb);
    let mut ops = OpGen { base: DEFAULT_BASE.to_string(), fresh: 0 };
    let mut summary = FuzzSummary::default();
    compare_with_shadow(&kb, &shadow, 0)?;

    for step in 1..=steps {
        let op = ops.next(&mut rng, &shadow);
        let generation = kb.store().generation();
        let log_len = kb.change_log(0).len();
        let expected = predict(&mut shadow, &op);
        let got = execute(&mut kb, &op);
        if got != expected {
            return Err(format!("step {step}: {op:?} gave {got:?}, shadow predicted {expected:?}"));
        }
        *summary.outcomes.entry((op.name(), got)).or_insert(0) += 1;
        let new_records = kb.change_log(0).len() - log_len;
        if got == Outcome::Ok {
            summary.successes += 1;
            if new_records != 1 {
                return Err(format!("step {step}: {op:?} appended {new_records} change records"));
            }
        } else if new_records != 0 || kb.store().generation() != generation {
            return Err(format!("step {step}: failed {op:?} changed the store or log"));
        }
        check_hierarchy(&kb).map_err(|e| format!("step {step}: {op:?}: {e}"))?;
        if step % validate_every == 0 || step == steps {
            let injected = compare_with_shadow(&kb, &shadow, step)?;
            summary.max_injected = summary.max_injected.max(injected);
            summary.validations += 1;
        }
        summary.steps = step;
    }

    let log = kb.change_log(0);
    if log.len() != summary.successes + 1 {
        return Err(format!("log has {} records for {} successes plus the seed", log.len(), summary.successes));
    }
    if log.iter().enumerate().any(|(i, r)| r.seq != i as u64 + 1) {
        return Err("change log sequence numbers are not 1..N".to_string());
    }
    let replayed = KnowledgeBase::replay(DEFAULT_BASE, log).map_err(|e| format!("replay failed: {e}"))?;
    if replayed.store().triple_set() != kb.store().triple_set() {
        return Err("replaying the change log did not reproduce the store".to_string());
    }
    if !kb.index_matches_rebuild() {
        return Err("text index drifted from a rebuild".to_string());
    }
    summary.final_concepts = shadow.concepts.len();
    summary.log_records = log.len();
    Ok(summary)
}
