//! Deterministic bundled ontology: the four real branches plus synthetic
//! descendants (local names prefixed `SYN-`) for a total of 145 concepts.

use crate::model::{Term, Triple};
use crate::ontology::ROOT_NAMES;
use crate::store::TripleStore;
use crate::vocab;

pub const SEED_CONCEPTS: usize = 145;

/// Direct children of each root; the remaining synthetic concepts hang below them.
const GROUPS_PER_BRANCH: usize = 5;

struct Branch {
    root: &'static str,
    en_label: &'static str,
    pt_label: &'static str,
    en_comment: &'static str,
    pt_comment: &'static str,
    en_noun: &'static str,
    pt_noun: &'static str,
    synthetic: usize,
}

const BRANCHES: [Branch; 4] = [
    Branch {
        root: ROOT_NAMES[0],
        en_label: "General concepts",
        pt_label: "Conceitos gerais",
        en_comment: "Top-level branch for general notions used across the ontology.",
        pt_comment: "Ramo de topo para noções gerais usadas em toda a ontologia.",
        en_noun: "general concept",
        pt_noun: "conceito geral",
        synthetic: 35,
    },
    Branch {
        root: ROOT_NAMES[1],
        en_label: "Seizure Types",
        pt_label: "Tipos de crises",
        en_comment: "Top-level branch grouping kinds of epileptic seizures.",
        pt_comment: "Ramo de topo que agrupa os tipos de crises epilépticas.",
        en_noun: "seizure type",
        pt_noun: "tipo de crise",
        synthetic: 36,
    },
    Branch {
        root: ROOT_NAMES[2],
        en_label: "Epileptic Syndromes",
        pt_label: "Síndromes epilépticas",
        en_comment: "Top-level branch grouping epileptic syndromes.",
        pt_comment: "Ramo de topo que agrupa as síndromes epilépticas.",
        en_noun: "epileptic syndrome",
        pt_noun: "síndrome epiléptica",
        synthetic: 35,
    },
    Branch {
        root: ROOT_NAMES[3],
        en_label: "Electroencephalography",
        pt_label: "Eletroencefalografia",
        en_comment: "Top-level branch for electroencephalography (EEG) concepts.",
        pt_comment: "Ramo de topo para conceitos de eletroencefalografia (EEG).",
        en_noun: "EEG concept",
        pt_noun: "conceito de eletroencefalografia",
        synthetic: 35,
    },
];

fn iri(base: &str, local: &str) -> Term {
    Term::iri(format!("{base}{local}")).expect("seed IRIs are valid")
}

fn lit(text: &str, lang: &str) -> Term {
    Term::lang_literal(text, lang).expect("seed tags are valid")
}

fn add(store: &mut TripleStore, s: &Term, p: &'static str, o: Term) {
    store.insert(Triple::new(s.clone(), Term::vocab(p), o).expect("IRI subject and predicate"));
}

/// Local name of the `n`-th (1-based) synthetic concept in a branch.
fn synthetic_name(root: &str, n: usize) -> String {
    format!("SYN-{root}-{n:03}")
}

/// Builds the seed ontology under `base`. Identical input gives identical output.
pub fn generate_seed(base: &str) -> TripleStore {
    let mut store = TripleStore::new();
    for branch in &BRANCHES {
        let root = iri(base, branch.root);
        add(&mut store, &root, vocab::RDF_TYPE, Term::vocab(vocab::OWL_CLASS));
        add(&mut store, &root, vocab::RDFS_LABEL, lit(branch.en_label, "en"));
        add(&mut store, &root, vocab::RDFS_LABEL, lit(branch.pt_label, "pt"));
        add(&mut store, &root, vocab::RDFS_COMMENT, lit(branch.en_comment, "en"));
        add(&mut store, &root, vocab::RDFS_COMMENT, lit(branch.pt_comment, "pt"));

        for n in 1..=branch.synthetic {
            let node = iri(base, &synthetic_name(branch.root, n));
            let parent = if n <= GROUPS_PER_BRANCH {
                root.clone()
            } else {
                iri(base, &synthetic_name(branch.root, (n - GROUPS_PER_BRANCH - 1) % GROUPS_PER_BRANCH + 1))
            };
            let (level_en, level_pt) = if n <= GROUPS_PER_BRANCH { ("group", "grupo") } else { ("item", "item") };
            add(&mut store, &node, vocab::RDF_TYPE, Term::vocab(vocab::OWL_CLASS));
            add(&mut store, &node, vocab::RDFS_SUBCLASS_OF, parent);
            add(
                &mut store,
                &node,
                vocab::RDFS_LABEL,
                lit(&format!("Synthetic {} {level_en} {n:03}", branch.en_noun), "en"),
            );
            add(
                &mut store,
                &node,
                vocab::RDFS_LABEL,
                lit(&format!("{} sintético {level_pt} {n:03}", capitalize(branch.pt_noun)), "pt"),
            );
            add(
                &mut store,
                &node,
                vocab::RDFS_COMMENT,
                lit(&format!("Synthetic placeholder {n:03} under {}; not clinical content.", branch.en_label), "en"),
            );
            add(
                &mut store,
                &node,
                vocab::RDFS_COMMENT,
                lit(&format!("Marcador sintético {n:03} em {}; sem conteúdo clínico.", branch.pt_label), "pt"),
            );
        }
    }
    // One cross-branch link so the hierarchy is a DAG rather than a forest.
    let shared = iri(base, &synthetic_name(ROOT_NAMES[3], BRANCHES[3].synthetic));
    add(&mut store, &shared, vocab::RDFS_SUBCLASS_OF, iri(base, &synthetic_name(ROOT_NAMES[0], 1)));
    store
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    chars.next().map(|c| c.to_uppercase().chain(chars).collect()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{validate_store, DEFAULT_BASE};
    use crate::turtle;

    #[test]
    fn seed_counts_and_validity() {
        let store = generate_seed(DEFAULT_BASE);
        let report = validate_store(&store, DEFAULT_BASE);
        assert_eq!(report.concepts, SEED_CONCEPTS);
        assert_eq!(report.labels, 290);
        assert_eq!(report.comments, 290);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn seed_is_deterministic() {
        let a = turtle::to_ntriples(&generate_seed(DEFAULT_BASE));
        let b = turtle::to_ntriples(&generate_seed(DEFAULT_BASE));
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_names_are_marked() {
        let store = generate_seed("http://x.example/o#");
        let report = validate_store(&store, "http://x.example/o#");
        assert!(report.violations.is_empty());
        let type_p = Term::vocab(vocab::RDF_TYPE);
        let class = Term::vocab(vocab::OWL_CLASS);
        for c in store.subjects(&type_p, &class) {
            let local = c.value().trim_start_matches("http://x.example/o#");
            assert!(ROOT_NAMES.contains(&local) || local.starts_with("SYN-"), "{local}");
        }
    }
}
