//! Entity matching and merging of one sentence's triples into a document.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::text::{canonical_key, find_case_insensitive, is_sub_concept};
use super::{DecompositionTarget, Refinement, TripleSet};
use crate::graph_model::{
    validate_document, Document, Edge, EdgeId, Membership, Node, NodeId, NodeKind, Sentence, SentenceId, TextSpan,
    ValidationReport, ViolationKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Exact,
    SubConcept,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityMatch {
    pub entity_key: String,
    pub node_id: NodeId,
    pub kind: MatchKind,
}

/// Pairs incoming entities with existing nodes.
///
/// An exact canonical-key match shadows any sub-concept matches for the same
/// entity; among several exact matches the smallest node id wins.
pub fn match_entities(doc: &Document, ts: &TripleSet) -> Vec<EntityMatch> {
    let keys: Vec<(NodeId, String)> = doc.nodes.iter().map(|n| (n.id.clone(), canonical_key(&n.label))).collect();
    let mut out = Vec::new();
    for e in &ts.entities {
        let key = canonical_key(&e.label);
        if key.is_empty() {
            continue;
        }
        let exact = keys.iter().filter(|(_, k)| *k == key).map(|(id, _)| id).min();
        if let Some(id) = exact {
            out.push(EntityMatch {
                entity_key: e.key.clone(),
                node_id: id.clone(),
                kind: MatchKind::Exact,
            });
            continue;
        }
        let mut subs: Vec<&NodeId> = keys.iter().filter(|(_, k)| is_sub_concept(&key, k)).map(|(id, _)| id).collect();
        subs.sort();
        out.extend(subs.into_iter().map(|id| EntityMatch {
            entity_key: e.key.clone(),
            node_id: id.clone(),
            kind: MatchKind::SubConcept,
        }));
    }
    out
}

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("triples belong to sentence {found}, expected {expected}")]
    SentenceMismatch { expected: SentenceId, found: SentenceId },
    #[error("relation references unknown entity key \"{0}\"")]
    UnknownEntityKey(String),
    #[error("merge would create a containment cycle through {}", join(.0))]
    ContainmentCycle(Vec<NodeId>),
    #[error("merged document is invalid:\n{0}")]
    Invalid(ValidationReport),
}

fn join(ids: &[NodeId]) -> String {
    ids.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(", ")
}

struct Builder {
    doc: Document,
    sentence_id: SentenceId,
}

impl Builder {
    fn exact(&self, key: &str, exclude: Option<&NodeId>) -> Option<NodeId> {
        self.doc
            .nodes
            .iter()
            .filter(|n| Some(&n.id) != exclude && canonical_key(&n.label) == key)
            .map(|n| n.id.clone())
            .min()
    }

    fn add_node(&mut self, label: &str, kind: NodeKind, spans: Vec<TextSpan>) -> NodeId {
        let id = NodeId::from_index(self.doc.nodes.len());
        self.doc.nodes.push(Node {
            id: id.clone(),
            label: label.to_string(),
            kind,
            spans,
            first_sentence: 0,
        });
        id
    }

    fn add_spans(&mut self, id: &NodeId, spans: &[TextSpan]) {
        if let Some(node) = self.doc.node_mut(id) {
            for span in spans {
                if !node.spans.contains(span) {
                    node.spans.push(span.clone());
                }
            }
        }
    }

    fn add_edge(&mut self, source: &NodeId, target: &NodeId, label: &str) {
        if source == target {
            return;
        }
        let duplicate = self
            .doc
            .edges
            .iter()
            .any(|e| &e.source == source && &e.target == target && e.label == label);
        if duplicate {
            return;
        }
        let id = EdgeId::from_index(self.doc.edges.len());
        self.doc.edges.push(Edge {
            id,
            source: source.clone(),
            target: target.clone(),
            label: label.to_string(),
            sentence_id: self.sentence_id.clone(),
        });
    }

    /// Turns `parent` into a composite holding the refinement's entities.
    ///
    /// Member spans are searched inside each of `regions` (spans of the
    /// parent). Returns false, leaving the document untouched, when fewer
    /// than two distinct members can be anchored.
    fn refine(&mut self, parent: &NodeId, regions: &[(TextSpan, String)], refinement: &Refinement) -> Result<bool, MergeError> {
        struct Member {
            existing: Option<NodeId>,
            label: String,
            spans: Vec<TextSpan>,
        }
        let mut members: BTreeMap<String, Member> = BTreeMap::new();
        let mut by_ref_key: BTreeMap<&str, String> = BTreeMap::new();
        for entity in &refinement.entities {
            let key = canonical_key(&entity.label);
            let spans: Vec<TextSpan> = regions
                .iter()
                .filter_map(|(region, text)| {
                    find_case_insensitive(text, &entity.label)
                        .map(|(s, e)| TextSpan::new(region.sentence_id.clone(), region.start + s, region.start + e))
                })
                .collect();
            let existing = self.exact(&key, Some(parent));
            if existing.is_none() && spans.is_empty() {
                continue;
            }
            let member = members.entry(key.clone()).or_insert(Member {
                existing,
                label: entity.label.clone(),
                spans: Vec::new(),
            });
            for span in spans {
                if !member.spans.contains(&span) {
                    member.spans.push(span);
                }
            }
            by_ref_key.insert(entity.key.as_str(), key);
        }
        if members.len() < 2 {
            return Ok(false);
        }
        let ancestors = self.doc.ancestors(parent);
        let mut cycle: Vec<NodeId> = members
            .values()
            .filter_map(|m| m.existing.clone())
            .filter(|id| ancestors.contains(id))
            .collect();
        if !cycle.is_empty() {
            cycle.push(parent.clone());
            cycle.sort();
            return Err(MergeError::ContainmentCycle(cycle));
        }
        let mut ids: BTreeMap<String, NodeId> = BTreeMap::new();
        for (key, member) in members {
            let id = match member.existing {
                Some(id) => {
                    self.add_spans(&id, &member.spans);
                    id
                }
                None => self.add_node(&member.label, NodeKind::Atomic, member.spans),
            };
            let row = Membership::new(parent.clone(), id.clone());
            if !self.doc.memberships.contains(&row) {
                self.doc.memberships.push(row);
            }
            ids.insert(key, id);
        }
        if let Some(node) = self.doc.node_mut(parent) {
            node.kind = NodeKind::Composite;
        }
        for r in &refinement.relations {
            let source = by_ref_key.get(r.source.as_str()).and_then(|k| ids.get(k)).cloned();
            let target = by_ref_key.get(r.target.as_str()).and_then(|k| ids.get(k)).cloned();
            if let (Some(s), Some(t)) = (source, target) {
                self.add_edge(&s, &t, &r.label);
            }
        }
        Ok(true)
    }

    fn regions(&self, id: &NodeId) -> Vec<(TextSpan, String)> {
        self.doc
            .node(id)
            .map(|n| {
                n.spans
                    .iter()
                    .filter_map(|s| self.doc.span_text(s).map(|t| (s.clone(), t.to_string())))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn refresh_first_sentences(&mut self) {
        let orders: BTreeMap<SentenceId, usize> = self.doc.sentences.iter().map(|s| (s.id.clone(), s.order)).collect();
        for node in &mut self.doc.nodes {
            if let Some(first) = node.spans.iter().filter_map(|s| orders.get(&s.sentence_id)).min() {
                node.first_sentence = *first;
            }
        }
    }
}

/// Merges one repaired sentence extraction and its refinements into `doc`.
///
/// Order of operations: refinements of earlier nodes first, then incoming
/// entities (reusing exact canonical matches, including members created a
/// moment ago), then relations. Self-loops and repeated
/// (source, target, label) triples are dropped.
pub fn merge_sentence(
    doc: &Document,
    sentence: &Sentence,
    ts: &TripleSet,
    refinements: &BTreeMap<DecompositionTarget, Refinement>,
) -> Result<Document, MergeError> {
    if ts.sentence_id != sentence.id {
        return Err(MergeError::SentenceMismatch {
            expected: sentence.id.clone(),
            found: ts.sentence_id.clone(),
        });
    }
    let mut b = Builder {
        doc: doc.clone(),
        sentence_id: sentence.id.clone(),
    };
    if b.doc.sentence(&sentence.id).is_none() {
        b.doc.sentences.push(sentence.clone());
    }

    for (target, refinement) in refinements {
        if let DecompositionTarget::Node(id) = target {
            if b.doc.node(id).is_some_and(Node::is_atomic) {
                let regions = b.regions(id);
                b.refine(id, &regions, refinement)?;
            }
        }
    }

    let mut entity_nodes: BTreeMap<&str, NodeId> = BTreeMap::new();
    for e in &ts.entities {
        let key = canonical_key(&e.label);
        let spans: Vec<TextSpan> = e.span.iter().cloned().collect();
        let refinement = refinements.get(&DecompositionTarget::Entity(e.key.clone()));
        let id = match b.exact(&key, None) {
            Some(id) => {
                b.add_spans(&id, &spans);
                id
            }
            None => b.add_node(&e.label, NodeKind::Atomic, spans),
        };
        if let Some(refinement) = refinement {
            if b.doc.node(&id).is_some_and(Node::is_atomic) {
                let regions = b.regions(&id);
                b.refine(&id, &regions, refinement)?;
            }
        }
        entity_nodes.insert(e.key.as_str(), id);
    }

    for r in &ts.relations {
        let source = entity_nodes
            .get(r.source.as_str())
            .ok_or_else(|| MergeError::UnknownEntityKey(r.source.clone()))?
            .clone();
        let target = entity_nodes
            .get(r.target.as_str())
            .ok_or_else(|| MergeError::UnknownEntityKey(r.target.clone()))?
            .clone();
        b.add_edge(&source, &target, &r.label);
    }

    b.refresh_first_sentences();
    let report = validate_document(&b.doc);
    if let Some(v) = report.of_kind(ViolationKind::ContainmentCycle).next() {
        let ids: BTreeSet<NodeId> = v.ids.iter().map(|s| NodeId::new(s.clone())).collect();
        return Err(MergeError::ContainmentCycle(ids.into_iter().collect()));
    }
    if report.has_errors() {
        return Err(MergeError::Invalid(report));
    }
    Ok(b.doc)
}
