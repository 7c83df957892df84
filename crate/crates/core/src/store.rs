//! In-memory triple store with SPO, POS and OSP indexes.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Term, TermError, Triple};

type Index = BTreeMap<Term, BTreeMap<Term, BTreeSet<Term>>>;

/// Which of the three permutation indexes to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexOrder {
    Spo,
    Pos,
    Osp,
}

/// A set of triples held in three sorted permutation indexes.
///
/// Mutation takes `&mut self`, so a store shared behind a reader/writer lock
/// gives readers a consistent revision and serializes writers.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    spo: Index,
    pos: Index,
    osp: Index,
    len: usize,
    generation: u64,
}

fn index_insert(index: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    index.entry(a.clone()).or_default().entry(b.clone()).or_default().insert(c.clone())
}

fn index_remove(index: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    let Some(level1) = index.get_mut(a) else { return false };
    let Some(level2) = level1.get_mut(b) else { return false };
    let removed = level2.remove(c);
    if level2.is_empty() {
        level1.remove(b);
    }
    if level1.is_empty() {
        index.remove(a);
    }
    removed
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Revision counter; bumped by every insert or remove that changes the set.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Adds a triple; returns `false` if it was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let (s, p, o) = (triple.subject(), triple.predicate(), triple.object());
        if !index_insert(&mut self.spo, s, p, o) {
            return false;
        }
        index_insert(&mut self.pos, p, o, s);
        index_insert(&mut self.osp, o, s, p);
        self.len += 1;
        self.generation += 1;
        true
    }

    /// Builds and inserts a triple, rejecting a non-IRI subject or predicate.
    pub fn insert_terms(&mut self, s: Term, p: Term, o: Term) -> Result<bool, TermError> {
        Ok(self.insert(Triple::new(s, p, o)?))
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        let (s, p, o) = (triple.subject(), triple.predicate(), triple.object());
        if !index_remove(&mut self.spo, s, p, o) {
            return false;
        }
        index_remove(&mut self.pos, p, o, s);
        index_remove(&mut self.osp, o, s, p);
        self.len -= 1;
        self.generation += 1;
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.spo
            .get(triple.subject())
            .and_then(|m| m.get(triple.predicate()))
            .is_some_and(|objects| objects.contains(triple.object()))
    }

    /// All triples matching the bound positions.
    ///
    /// The index is chosen by the first bound position in subject, predicate,
    /// object order (SPO when nothing is bound) and results come back in that
    /// index's order.
    pub fn match_pattern(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let mut out = Vec::new();
        let mut emit = |s: &Term, p: &Term, o: &Term| {
            out.push(Triple::new(s.clone(), p.clone(), o.clone()).expect("stored triples are valid"));
        };
        if let Some(s) = s {
            let Some(by_pred) = self.spo.get(s) else { return out };
            for (pred, objects) in by_pred {
                if p.is_some_and(|p| p != pred) {
                    continue;
                }
                match o {
                    Some(o) if objects.contains(o) => emit(s, pred, o),
                    Some(_) => {}
                    None => objects.iter().for_each(|obj| emit(s, pred, obj)),
                }
            }
        } else if let Some(p) = p {
            let Some(by_obj) = self.pos.get(p) else { return out };
            match o {
                Some(o) => {
                    if let Some(subjects) = by_obj.get(o) {
                        subjects.iter().for_each(|subj| emit(subj, p, o));
                    }
                }
                None => {
                    for (obj, subjects) in by_obj {
                        subjects.iter().for_each(|subj| emit(subj, p, obj));
                    }
                }
            }
        } else if let Some(o) = o {
            let Some(by_subj) = self.osp.get(o) else { return out };
            for (subj, preds) in by_subj {
                preds.iter().for_each(|pred| emit(subj, pred, o));
            }
        } else {
            return self.iter().collect();
        }
        out
    }

    /// Objects of `(s, p, ?)` in index order.
    pub fn objects<'a>(&'a self, s: &Term, p: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.spo.get(s).and_then(|m| m.get(p)).into_iter().flatten()
    }

    /// Subjects of `(?, p, o)` in index order.
    pub fn subjects<'a>(&'a self, p: &Term, o: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.pos.get(p).and_then(|m| m.get(o)).into_iter().flatten()
    }

    /// Every triple in SPO order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.iter_index(IndexOrder::Spo)
    }

    /// Full enumeration of one index, converted back to (s, p, o) triples.
    pub fn iter_index(&self, order: IndexOrder) -> impl Iterator<Item = Triple> + '_ {
        let index = match order {
            IndexOrder::Spo => &self.spo,
            IndexOrder::Pos => &self.pos,
            IndexOrder::Osp => &self.osp,
        };
        index.iter().flat_map(move |(a, rest)| {
            rest.iter().flat_map(move |(b, cs)| {
                cs.iter().map(move |c| {
                    let (s, p, o) = match order {
                        IndexOrder::Spo => (a, b, c),
                        IndexOrder::Pos => (c, a, b),
                        IndexOrder::Osp => (b, c, a),
                    };
                    Triple::new(s.clone(), p.clone(), o.clone()).expect("stored triples are valid")
                })
            })
        })
    }

    /// Sorted set of all triples.
    pub fn triple_set(&self) -> BTreeSet<Triple> {
        self.iter().collect()
    }

    pub fn clear(&mut self) {
        if self.len > 0 {
            self.spo.clear();
            self.pos.clear();
            self.osp.clear();
            self.len = 0;
            self.generation += 1;
        }
    }
}

impl PartialEq for TripleStore {
    /// Membership equality; the generation counter is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.spo == other.spo
    }
}

impl Eq for TripleStore {}

impl FromIterator<Triple> for TripleStore {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut store = Self::new();
        store.extend(iter);
        store
    }
}

impl Extend<Triple> for TripleStore {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}
