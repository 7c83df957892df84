use std::collections::{BTreeSet, HashSet};

use super::{Binding, PatternTerm, Query, TriplePattern};
use crate::model::Term;
use crate::store::TripleStore;

/// Join order for a basic graph pattern.
///
/// Greedy: repeatedly take the pattern with the most positions that are
/// constants or already-bound variables, ties broken by textual position.
pub fn plan_order(patterns: &[TriplePattern]) -> Vec<usize> {
    let mut bound: HashSet<&str> = HashSet::new();
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score =
            |i: usize| patterns[i].positions().iter().filter(|p| p.var().is_none_or(|v| bound.contains(v))).count();
        let (slot, &best) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| score(a).cmp(&score(b)).then(b.cmp(&a)))
            .expect("remaining is non-empty");
        remaining.remove(slot);
        bound.extend(patterns[best].vars());
        order.push(best);
    }
    order
}

fn resolve<'a>(pt: &'a PatternTerm, binding: &'a Binding) -> Option<&'a Term> {
    match pt {
        PatternTerm::Term(t) => Some(t),
        PatternTerm::Var(v) => binding.get(v),
    }
}

/// Extends `binding` with the variables of `pattern` matched against a triple,
/// or `None` when a variable repeated inside the pattern gets two values.
fn extend(binding: &Binding, pattern: &TriplePattern, values: [&Term; 3]) -> Option<Binding> {
    let mut out = binding.clone();
    for (pt, value) in pattern.positions().into_iter().zip(values) {
        if let PatternTerm::Var(v) = pt {
            match out.get(v) {
                Some(existing) if existing != value => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), value.clone());
                }
            }
        }
    }
    Some(out)
}

/// Evaluates a query against a store.
///
/// Pipeline: index-backed nested-loop join of the patterns (in [`plan_order`]),
/// filters, projection onto the selected variables, `DISTINCT`, a stable sort
/// by the canonical encoding of the selected terms, then `OFFSET`/`LIMIT`.
pub fn evaluate(store: &TripleStore, query: &Query) -> Vec<Binding> {
    let mut solutions = vec![Binding::new()];
    for idx in plan_order(&query.patterns) {
        let pattern = &query.patterns[idx];
        let mut next = Vec::new();
        for binding in &solutions {
            let s = resolve(&pattern.s, binding);
            let p = resolve(&pattern.p, binding);
            let o = resolve(&pattern.o, binding);
            // A bound literal in subject or predicate position can never match.
            if s.is_some_and(|t| !t.is_iri()) || p.is_some_and(|t| !t.is_iri()) {
                continue;
            }
            for triple in store.match_pattern(s, p, o) {
                let values = [triple.subject(), triple.predicate(), triple.object()];
                if let Some(b) = extend(binding, pattern, values) {
                    next.push(b);
                }
            }
        }
        solutions = next;
        if solutions.is_empty() {
            break;
        }
    }

    solutions.retain(|b| query.filters.iter().all(|f| b.get(f.var()).is_some_and(|t| f.accepts(t))));

    let projection = query.projection();
    let mut rows: Vec<Binding> = solutions
        .into_iter()
        .map(|b| projection.iter().filter_map(|v| b.get(v).map(|t| (v.clone(), t.clone()))).collect())
        .collect();

    let key = |b: &Binding| -> Vec<Option<Term>> { projection.iter().map(|v| b.get(v).cloned()).collect() };
    if query.distinct {
        let mut seen = BTreeSet::new();
        rows.retain(|b| seen.insert(key(b)));
    }
    rows.sort_by_cached_key(key);

    let start = query.offset.min(rows.len());
    let end = query.limit.map_or(rows.len(), |l| (start + l).min(rows.len()));
    rows.drain(start..end).collect()
}
