//! Exhaustive SPARQL oracle: every assignment of store terms to variables
//! is tried, so results are correct by construction.

use std::collections::{BTreeSet, HashSet};

use ontokms_core::sparql::{evaluate, parse_query};
use ontokms_core::{Term, TripleStore};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gen;

const VARS: [&str; 3] = ["x", "y", "z"];

/// N-Triples style encoding written independently of the library.
fn encode(t: &Term) -> String {
    if t.is_iri() {
        return format!("<{}>", t.value());
    }
    let mut out = String::from("\"");
    for c in t.value().chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    if let Some(l) = t.lang() {
        out.push('@');
        out.push_str(l);
    }
    out
}

#[derive(Debug, Clone)]
enum Slot {
    Var(usize),
    Const(usize),
}

#[derive(Debug, Clone)]
enum Filter {
    Regex { var: usize, pattern: &'static str, ci: bool },
    Lang { var: usize, tag: &'static str },
}

#[derive(Debug, Clone)]
struct Shape {
    patterns: Vec<[Slot; 3]>,
    select: Option<Vec<usize>>,
    distinct: bool,
    filters: Vec<Filter>,
    limit: Option<usize>,
    offset: usize,
}

struct World {
    terms: Vec<Term>,
    encoded: Vec<String>,
    triples: HashSet<(usize, usize, usize)>,
}

impl World {
    fn new(store: &TripleStore) -> Self {
        let mut set = BTreeSet::new();
        for t in store.iter() {
            set.insert(encode(t.subject()));
            set.insert(encode(t.predicate()));
            set.insert(encode(t.object()));
        }
        let encoded: Vec<String> = set.into_iter().collect();
        let mut terms: Vec<Option<Term>> = vec![None; encoded.len()];
        let pos = |t: &Term| encoded.binary_search(&encode(t)).unwrap();
        let mut triples = HashSet::new();
        for t in store.iter() {
            let (s, p, o) = (pos(t.subject()), pos(t.predicate()), pos(t.object()));
            terms[s] = Some(t.subject().clone());
            terms[p] = Some(t.predicate().clone());
            terms[o] = Some(t.object().clone());
            triples.insert((s, p, o));
        }
        Self { terms: terms.into_iter().map(Option::unwrap).collect(), encoded, triples }
    }
}

fn random_shape(rng: &mut ChaCha8Rng, world: &World) -> Option<Shape> {
    if world.terms.is_empty() {
        return None;
    }
    let iris: Vec<usize> = (0..world.terms.len()).filter(|&i| world.terms[i].is_iri()).collect();
    let existing: Vec<(usize, usize, usize)> = world.triples.iter().copied().collect();
    let n = rng.gen_range(1..=3);
    let mut patterns = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.7) {
            // Start from a stored triple so that joins are often non-empty.
            let (s, p, o) = existing[rng.gen_range(0..existing.len())];
            // Mostly keep ?z for predicates so variables rarely straddle roles.
            let mut slot = |c: usize, predicate: bool| {
                if !rng.gen_bool(0.5) {
                    Slot::Const(c)
                } else if rng.gen_bool(0.9) {
                    Slot::Var(if predicate { 2 } else { rng.gen_range(0..2) })
                } else {
                    Slot::Var(rng.gen_range(0..VARS.len()))
                }
            };
            patterns.push([slot(s, false), slot(p, true), slot(o, false)]);
            continue;
        }
        // Subjects and predicates are written as IRIs or variables only.
        let mut slot = |iri_only: bool| {
            if rng.gen_bool(0.55) {
                Slot::Var(rng.gen_range(0..VARS.len()))
            } else if iri_only {
                Slot::Const(*iris.choose(rng).unwrap())
            } else {
                Slot::Const(rng.gen_range(0..world.terms.len()))
            }
        };
        patterns.push([slot(true), slot(true), slot(false)]);
    }
    let used: BTreeSet<usize> =
        patterns.iter().flatten().filter_map(|s| if let Slot::Var(v) = s { Some(*v) } else { None }).collect();
    if used.is_empty() {
        return None;
    }
    let used: Vec<usize> = used.into_iter().collect();
    let select = if rng.gen_bool(0.4) {
        None
    } else {
        let k = rng.gen_range(1..=used.len());
        let mut chosen: Vec<usize> = used.choose_multiple(rng, k).copied().collect();
        chosen.shuffle(rng);
        Some(chosen)
    };
    let mut filters = Vec::new();
    for _ in 0..[0, 0, 1, 2][rng.gen_range(0..4)] {
        let var = *used.choose(rng).unwrap();
        filters.push(if rng.gen_bool(0.5) {
            Filter::Regex {
                var,
                pattern: ["plain", "^C", "a", "E", "\\\\", "^$", "\u{e9}"].choose(rng).copied().unwrap(),
                ci: rng.gen_bool(0.5),
            }
        } else {
            Filter::Lang { var, tag: ["", "en", "pt-br"].choose(rng).copied().unwrap() }
        });
    }
    Some(Shape {
        patterns,
        select,
        distinct: rng.gen_bool(0.5),
        filters,
        limit: rng.gen_bool(0.4).then(|| rng.gen_range(0..8)),
        offset: if rng.gen_bool(0.3) { rng.gen_range(0..4) } else { 0 },
    })
}

fn sparql_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn to_text(shape: &Shape, world: &World) -> String {
    let slot = |s: &Slot| match s {
        Slot::Var(v) => format!("?{}", VARS[*v]),
        Slot::Const(c) => world.encoded[*c].clone(),
    };
    let mut q = String::from("SELECT ");
    if shape.distinct {
        q.push_str("DISTINCT ");
    }
    match &shape.select {
        None => q.push('*'),
        Some(vars) => q.push_str(&vars.iter().map(|v| format!("?{}", VARS[*v])).collect::<Vec<_>>().join(" ")),
    }
    q.push_str(" WHERE {\n");
    for p in &shape.patterns {
        q.push_str(&format!("  {} {} {} .\n", slot(&p[0]), slot(&p[1]), slot(&p[2])));
    }
    for f in &shape.filters {
        match f {
            Filter::Regex { var, pattern, ci } => q.push_str(&format!(
                "  FILTER regex(?{}, {}{})\n",
                VARS[*var],
                sparql_string(pattern),
                if *ci { ", \"i\"" } else { "" }
            )),
            Filter::Lang { var, tag } => q.push_str(&format!("  FILTER(lang(?{}) = \"{tag}\")\n", VARS[*var])),
        }
    }
    q.push('}');
    if let Some(l) = shape.limit {
        q.push_str(&format!(" LIMIT {l}"));
    }
    if shape.offset > 0 {
        q.push_str(&format!(" OFFSET {}", shape.offset));
    }
    q
}

/// Exhaustive evaluation: try every assignment of store terms to variables.
fn oracle(shape: &Shape, world: &World) -> Vec<Vec<String>> {
    let mut used: Vec<usize> =
        shape.patterns.iter().flatten().filter_map(|s| if let Slot::Var(v) = s { Some(*v) } else { None }).collect();
    used.sort();
    used.dedup();
    let projection: Vec<usize> = shape.select.clone().unwrap_or_else(|| {
        let mut order = Vec::new();
        for s in shape.patterns.iter().flatten() {
            if let Slot::Var(v) = s {
                if !order.contains(v) {
                    order.push(*v);
                }
            }
        }
        order
    });
    let n = world.terms.len();
    let mut rows = Vec::new();
    let mut assignment = vec![0usize; VARS.len()];
    let total = n.pow(used.len() as u32);
    for mut code in 0..total {
        for &v in &used {
            assignment[v] = code % n;
            code /= n;
        }
        let value = |s: &Slot| match s {
            Slot::Var(v) => assignment[*v],
            Slot::Const(c) => *c,
        };
        if !shape.patterns.iter().all(|p| world.triples.contains(&(value(&p[0]), value(&p[1]), value(&p[2])))) {
            continue;
        }
        let passes = shape.filters.iter().all(|f| match f {
            Filter::Regex { var, pattern, ci } => {
                let t = &world.terms[assignment[*var]];
                let re = regex::RegexBuilder::new(pattern).case_insensitive(*ci).build().unwrap();
                t.is_literal() && re.is_match(t.value())
            }
            Filter::Lang { var, tag } => {
                let t = &world.terms[assignment[*var]];
                t.is_literal() && t.lang().unwrap_or("") == *tag
            }
        });
        if passes {
            rows.push(projection.iter().map(|v| world.encoded[assignment[*v]].clone()).collect::<Vec<_>>());
        }
    }
    if shape.distinct {
        let mut seen = BTreeSet::new();
        rows.retain(|r| seen.insert(r.clone()));
    }
    rows.sort();
    let start = shape.offset.min(rows.len());
    let end = shape.limit.map_or(rows.len(), |l| (start + l).min(rows.len()));
    rows[start..end].to_vec()
}

fn engine(text: &str, shape: &Shape, store: &TripleStore) -> Result<Vec<Vec<String>>, String> {
    let query = parse_query(text).map_err(|e| format!("{e}\n{text}"))?;
    let projection = query.projection();
    if let Some(select) = &shape.select {
        if select.len() != projection.len() {
            return Err(format!("projection {projection:?} does not match the select list\n{text}"));
        }
    }
    Ok(evaluate(store, &query).iter().map(|b| projection.iter().map(|v| encode(&b[v])).collect()).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub stores: usize,
    pub queries: usize,
    pub non_empty: usize,
}

/// Compares the engine with the oracle on `stores` random stores of up to
/// `max_triples` triples, `queries_per_store` random queries each.
pub fn check_random_queries(
    seed: u64,
    stores: usize,
    queries_per_store: usize,
    max_triples: usize,
) -> Result<OracleStats, String> {
    let mut rng = gen::rng(seed);
    let mut stats = OracleStats::default();
    for _ in 0..stores {
        let store = gen::random_store(&mut rng, max_triples, 5, 3);
        let world = World::new(&store);
        stats.stores += 1;
        for _ in 0..queries_per_store {
            let Some(shape) = random_shape(&mut rng, &world) else { continue };
            let text = to_text(&shape, &world);
            let expected = oracle(&shape, &world);
            let got = engine(&text, &shape, &store)?;
            if got != expected {
                return Err(format!("result mismatch for query:\n{text}\nexpected {expected:?}\ngot {got:?}"));
            }
            stats.queries += 1;
            stats.non_empty += usize::from(!expected.is_empty());
        }
    }
    Ok(stats)
}

/// Checks that shuffling the patterns of random queries never changes results.
pub fn check_pattern_permutations(seed: u64, stores: usize, max_triples: usize) -> Result<usize, String> {
    let mut rng = gen::rng(seed);
    let mut checked = 0;
    for _ in 0..stores {
        let store = gen::random_store(&mut rng, max_triples, 5, 3);
        let world = World::new(&store);
        let Some(mut shape) = random_shape(&mut rng, &world) else { continue };
        let text = to_text(&shape, &world);
        let baseline = engine(&text, &shape, &store)?;
        if shape.select.is_none() {
            // `*` projects in order of first appearance, so fix it before shuffling.
            let q = parse_query(&text).map_err(|e| e.to_string())?;
            shape.select = Some(q.projection().iter().map(|v| VARS.iter().position(|x| x == v).unwrap()).collect());
        }
        for _ in 0..3 {
            shape.patterns.shuffle(&mut rng);
            let shuffled = to_text(&shape, &world);
            if engine(&shuffled, &shape, &store)? != baseline {
                return Err(format!("pattern order changed results:\n{text}\nvs\n{shuffled}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
