//! Exhaustive check of the edit distance against its recursive definition.
//!
//! `lev(a, b)` is `|b|` or `|a|` when the other side is empty, `lev(a', b')`
//! when the heads agree and otherwise `1 + min(lev(a', b), lev(a, b'),
//! lev(a', b'))`, with `x'` the tail of `x`. Tails of strings in the set are in
//! the set, so the recursion is evaluated bottom-up over a table indexed by
//! string ids ordered by length.

use ontokms_core::text::{levenshtein, DocRef, InvertedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::gen;

/// All strings of length `0..=max_len` over `alphabet`, shortest first.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut level = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * alphabet.len());
        for s in &level {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Naive recursion without memoization, for spot checks on short strings.
pub fn naive(a: &[u8], b: &[u8]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ta)), Some((y, tb))) if x == y => naive(ta, tb),
        (Some((_, ta)), Some((_, tb))) => 1 + naive(ta, b).min(naive(a, tb)).min(naive(ta, tb)),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LevenshteinSummary {
    pub strings: usize,
    pub pairs: u64,
    pub naive_spot_checks: usize,
}

/// Compares `levenshtein` with the recursive definition on every ordered
/// pair of strings up to `max_len` over `alphabet`.
pub fn check_all_pairs(alphabet: &[char], max_len: usize) -> Result<LevenshteinSummary, String> {
    let strings = all_strings(alphabet, max_len);
    let n = strings.len();
    let index = |s: &str| strings.binary_search_by(|x| (x.len(), x.as_str()).cmp(&(s.len(), s))).unwrap();
    let tails: Vec<usize> = strings.iter().map(|s| if s.is_empty() { 0 } else { index(&s[1..]) }).collect();
    let bytes: Vec<&[u8]> = strings.iter().map(|s| s.as_bytes()).collect();

    let mut table = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (bytes[i], bytes[j]);
            let value = if a.is_empty() {
                b.len()
            } else if b.is_empty() {
                a.len()
            } else if a[0] == b[0] {
                table[tails[i] * n + tails[j]] as usize
            } else {
                let drop_a = table[tails[i] * n + j];
                let drop_b = table[i * n + tails[j]];
                let both = table[tails[i] * n + tails[j]];
                1 + drop_a.min(drop_b).min(both) as usize
            };
            table[i * n + j] = value as u8;
        }
    }

    for i in 0..n {
        for j in 0..n {
            let got = levenshtein(&strings[i], &strings[j]);
            if got != table[i * n + j] as usize {
                return Err(format!(
                    "levenshtein({:?}, {:?}) = {got}, recursive definition gives {}",
                    strings[i],
                    strings[j],
                    table[i * n + j]
                ));
            }
        }
    }

    // The table itself against the unmemoized recursion on short strings.
    let short: Vec<usize> = (0..n).filter(|&i| strings[i].len() <= 4).collect();
    let mut spot = 0;
    for &i in &short {
        for &j in &short {
            if naive(bytes[i], bytes[j]) != table[i * n + j] as usize {
                return Err(format!(
                    "memo table disagrees with naive recursion on {:?} / {:?}",
                    strings[i], strings[j]
                ));
            }
            spot += 1;
        }
    }
    Ok(LevenshteinSummary { strings: n, pairs: (n * n) as u64, naive_spot_checks: spot })
}

/// Random vocabularies and queries: every suggestion is within the bound,
/// carries its true distance, lists are sorted by (distance, token), capped
/// at `k`, and nothing within the bound is left out when under the cap.
pub fn check_suggestion_lists(seed: u64, rounds: usize) -> Result<usize, String> {
    let mut rng = gen::rng(seed);
    let mut checked = 0;
    for _ in 0..rounds {
        let words: Vec<String> = (0..rng.gen_range(1..40))
            .map(|_| (0..rng.gen_range(2..7)).map(|_| *['a', 'b', 'c', 'd'].choose(&mut rng).unwrap()).collect())
            .collect();
        let mut index = InvertedIndex::new();
        index.index_doc(DocRef::record("r"), &words.join(" "));
        let query: String =
            (0..rng.gen_range(2..8)).map(|_| *['a', 'b', 'c', 'd', 'e'].choose(&mut rng).unwrap()).collect();
        let max = rng.gen_range(0..4);
        let k = rng.gen_range(1..6);
        for entry in index.suggest(&query, max, k).tokens {
            let list = &entry.suggestions;
            if list.len() > k {
                return Err(format!("{} suggestions exceed k = {k}", list.len()));
            }
            for s in list {
                if s.distance > max || s.distance != levenshtein(&entry.token, &s.token) {
                    return Err(format!("bad suggestion {s:?} for {:?} (max {max})", entry.token));
                }
            }
            if list.windows(2).any(|w| (w[0].distance, &w[0].token) >= (w[1].distance, &w[1].token)) {
                return Err(format!("suggestions for {:?} are not sorted by (distance, token)", entry.token));
            }
            let eligible = index.vocabulary().filter(|v| levenshtein(&entry.token, v) <= max).count();
            if list.len() != eligible.min(k) {
                return Err(format!(
                    "{:?}: {} suggestions, {} eligible with k = {k}",
                    entry.token,
                    list.len(),
                    eligible
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
