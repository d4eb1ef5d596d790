//! Queries used after reading: entity ranking by propagated degree, the
//! hover neighborhood of a node, and the node under a text position.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph_model::{Document, EdgeId, NodeId, SentenceId, TextSpan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRank {
    pub node_id: NodeId,
    pub label: String,
    pub score: u64,
    pub spans: Vec<TextSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub node_id: NodeId,
    /// The node itself followed by the opposite endpoints of its edges.
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub spans: Vec<NodeSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeSpan {
    pub node_id: NodeId,
    pub span: TextSpan,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReviewError {
    #[error("unknown node: {0}")]
    UnknownNode(NodeId),
}

/// In- plus out-degree of every node that has an edge.
fn degrees(doc: &Document) -> BTreeMap<&NodeId, u64> {
    let mut out: BTreeMap<&NodeId, u64> = BTreeMap::new();
    for e in &doc.edges {
        *out.entry(&e.source).or_default() += 1;
        *out.entry(&e.target).or_default() += 1;
    }
    out
}

/// Atomic nodes scored by their own degree plus the degree of every
/// composite containing them, directly or not, each counted once. Highest
/// score first; ties go to the earlier first sentence, then the smaller id.
pub fn rank_entities(doc: &Document) -> Vec<EntityRank> {
    let degree = degrees(doc);
    let of = |id: &NodeId| degree.get(id).copied().unwrap_or(0);
    let mut ranked: Vec<(EntityRank, usize)> = doc
        .nodes
        .iter()
        .filter(|n| n.is_atomic())
        .map(|n| {
            let score = of(&n.id) + doc.ancestors(&n.id).iter().map(of).sum::<u64>();
            let rank = EntityRank {
                node_id: n.id.clone(),
                label: n.label.clone(),
                score,
                spans: n.spans.clone(),
            };
            (rank, n.first_sentence)
        })
        .collect();
    ranked.sort_by(|(a, fa), (b, fb)| b.score.cmp(&a.score).then(fa.cmp(fb)).then(a.node_id.cmp(&b.node_id)));
    ranked.into_iter().map(|(r, _)| r).collect()
}

/// The node, its incident edges, their other endpoints, and the text spans
/// of all of those nodes. For a composite only edges attached to the
/// composite itself count, not those of its members.
pub fn neighborhood(doc: &Document, id: &NodeId) -> Result<Neighborhood, ReviewError> {
    if doc.node(id).is_none() {
        return Err(ReviewError::UnknownNode(id.clone()));
    }
    let mut edges = Vec::new();
    let mut others = BTreeSet::new();
    for e in &doc.edges {
        if &e.source == id || &e.target == id {
            edges.push(e.id.clone());
            let other = if &e.source == id { &e.target } else { &e.source };
            if other != id {
                others.insert(other.clone());
            }
        }
    }
    edges.sort();
    let mut nodes = vec![id.clone()];
    nodes.extend(others);
    let mut spans: Vec<NodeSpan> = nodes
        .iter()
        .filter_map(|n| doc.node(n))
        .flat_map(|n| {
            n.spans.iter().map(|s| NodeSpan {
                node_id: n.id.clone(),
                span: s.clone(),
            })
        })
        .collect();
    spans.sort();
    Ok(Neighborhood {
        node_id: id.clone(),
        nodes,
        edges,
        spans,
    })
}

/// The node whose span in `sentence` covers the character `offset`
/// (start inclusive, end exclusive). Nested spans resolve to the shortest;
/// equal spans prefer atomic nodes, then the smaller id.
pub fn node_for_span(doc: &Document, sentence: &SentenceId, offset: usize) -> Option<NodeId> {
    doc.nodes
        .iter()
        .flat_map(|n| n.spans.iter().map(move |s| (n, s)))
        .filter(|(_, s)| &s.sentence_id == sentence && s.contains(offset))
        .min_by(|(na, sa), (nb, sb)| {
            sa.len()
                .cmp(&sb.len())
                .then(nb.is_atomic().cmp(&na.is_atomic()))
                .then(na.id.cmp(&nb.id))
        })
        .map(|(n, _)| n.id.clone())
}
