//! Graph views of the subClassOf hierarchy for exploration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ontology::Ontology;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphNode {
    pub id: String,
    pub label: String,
    pub is_root: bool,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GraphEdge {
    pub child: String,
    pub parent: String,
}

/// Nodes sorted by (depth, id); edges sorted by (child, parent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphView {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// Label in `lang`, else English, else any language, else the IRI local name.
pub fn display_label(ontology: &Ontology, iri: &str, lang: &str) -> String {
    let concept = ontology.concept(iri);
    let labels = concept.as_ref().map(|c| &c.labels);
    labels
        .and_then(|l| l.get(lang).or_else(|| l.get("en")).or_else(|| l.values().next()))
        .cloned()
        .unwrap_or_else(|| local_name(iri).to_string())
}

pub fn local_name(iri: &str) -> &str {
    iri.rfind(['#', '/']).map_or(iri, |i| &iri[i + 1..])
}

/// Everything within `depth` undirected steps of `center`, with the
/// subClassOf edges among those nodes reported child → parent.
pub fn neighborhood(ontology: &Ontology, center: &str, depth: usize, lang: &str) -> Result<GraphView> {
    if !ontology.is_concept(center) {
        return Err(Error::NotFound(format!("concept <{center}>")));
    }
    let mut dist: BTreeMap<String, usize> = BTreeMap::from([(center.to_string(), 0)]);
    let mut queue = VecDeque::from([center.to_string()]);
    while let Some(node) = queue.pop_front() {
        let d = dist[&node];
        if d == depth {
            continue;
        }
        for next in ontology.parents(&node).into_iter().chain(ontology.children(&node)) {
            if !dist.contains_key(&next) {
                dist.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    let mut edges = BTreeSet::new();
    for node in dist.keys() {
        for parent in ontology.parents(node) {
            if dist.contains_key(&parent) {
                edges.insert(GraphEdge { child: node.clone(), parent });
            }
        }
    }
    let mut nodes: Vec<GraphNode> = dist
        .into_iter()
        .map(|(id, depth)| GraphNode {
            label: display_label(ontology, &id, lang),
            is_root: ontology.is_root(&id),
            depth,
            id,
        })
        .collect();
    nodes.sort_by(|a, b| (a.depth, &a.id).cmp(&(b.depth, &b.id)));
    Ok(GraphView { nodes, edges: edges.into_iter().collect() })
}

/// Every simple parent chain from `iri` to a parentless node, sorted.
pub fn path_to_root(ontology: &Ontology, iri: &str) -> Result<Vec<Vec<String>>> {
    if !ontology.is_concept(iri) {
        return Err(Error::NotFound(format!("concept <{iri}>")));
    }
    let mut paths = Vec::new();
    let mut path = vec![iri.to_string()];
    extend_paths(ontology, &mut path, &mut paths);
    paths.sort();
    Ok(paths)
}

fn extend_paths(ontology: &Ontology, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    let last = path.last().expect("path is never empty");
    let parents = ontology.parents(last);
    if parents.is_empty() {
        out.push(path.clone());
        return;
    }
    for p in parents {
        if path.contains(&p) {
            continue;
        }
        path.push(p);
        extend_paths(ontology, path, out);
        path.pop();
    }
}
