//! Nested (compound) entity-relationship graph documents.
//!
//! A [`Document`] holds the source text, its sentence segmentation, and a
//! graph whose nodes are either atomic entities or composite containers.
//! Containment is a DAG: a node may sit inside several composites, but the
//! membership relation never cycles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(
    /// Identifier of a graph node.
    NodeId
);
string_id!(
    /// Identifier of a directed edge.
    EdgeId
);
string_id!(
    /// Identifier of a sentence.
    SentenceId
);

impl NodeId {
    pub fn from_index(index: usize) -> Self {
        Self(format!("n{index:05}"))
    }
}

impl EdgeId {
    pub fn from_index(index: usize) -> Self {
        Self(format!("e{index:05}"))
    }
}

impl SentenceId {
    pub fn from_order(order: usize) -> Self {
        Self(format!("s{order:04}"))
    }
}

/// Character range inside one sentence (`start` inclusive, `end` exclusive).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TextSpan {
    pub sentence_id: SentenceId,
    pub start: usize,
    pub end: usize,
}

impl TextSpan {
    pub fn new(sentence_id: SentenceId, start: usize, end: usize) -> Self {
        Self {
            sentence_id,
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: SentenceId,
    pub order: usize,
    /// Character offset into the document text.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Atomic,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    pub spans: Vec<TextSpan>,
    /// Reading order of the earliest sentence that mentions the node.
    pub first_sentence: usize,
}

impl Node {
    pub fn is_atomic(&self) -> bool {
        self.kind == NodeKind::Atomic
    }

    pub fn is_composite(&self) -> bool {
        self.kind == NodeKind::Composite
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub source: NodeId,
    pub target: NodeId,
    pub label: String,
    pub sentence_id: SentenceId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Membership {
    pub parent: NodeId,
    pub child: NodeId,
}

impl Membership {
    pub fn new(parent: impl Into<NodeId>, child: impl Into<NodeId>) -> Self {
        Self {
            parent: parent.into(),
            child: child.into(),
        }
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub memberships: Vec<Membership>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node: {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not a composite")]
    NotComposite(NodeId),
}

/// Slice `text` by character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let begin = indices.nth(start)?;
    let finish = if end == start {
        begin
    } else {
        indices.nth(end - start - 1)?
    };
    text.get(begin..finish)
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            ..Self::default()
        }
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn node_mut(&mut self, id: &NodeId) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| &n.id == id)
    }

    pub fn sentence(&self, id: &SentenceId) -> Option<&Sentence> {
        self.sentences.iter().find(|s| &s.id == id)
    }

    pub fn sentence_by_order(&self, order: usize) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.order == order)
    }

    pub fn sentence_text(&self, id: &SentenceId) -> Option<&str> {
        let s = self.sentence(id)?;
        char_slice(&self.text, s.start, s.end)
    }

    /// Text covered by a span, resolved through its sentence.
    pub fn span_text(&self, span: &TextSpan) -> Option<&str> {
        char_slice(self.sentence_text(&span.sentence_id)?, span.start, span.end)
    }

    pub fn children(&self, parent: &NodeId) -> Vec<&NodeId> {
        self.memberships
            .iter()
            .filter(|m| &m.parent == parent)
            .map(|m| &m.child)
            .collect()
    }

    pub fn parents(&self, child: &NodeId) -> Vec<&NodeId> {
        self.memberships
            .iter()
            .filter(|m| &m.child == child)
            .map(|m| &m.parent)
            .collect()
    }

    /// Every composite that contains `id`, directly or transitively.
    pub fn ancestors(&self, id: &NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(current) = stack.pop() {
            for parent in self.parents(&current) {
                if seen.insert(parent.clone()) {
                    stack.push(parent.clone());
                }
            }
        }
        seen.remove(id);
        seen
    }

    /// Every node inside `id`, directly or transitively (atomic or not).
    pub fn descendants(&self, id: &NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(current) = stack.pop() {
            for child in self.children(&current) {
                if seen.insert(child.clone()) {
                    stack.push(child.clone());
                }
            }
        }
        seen.remove(id);
        seen
    }

    /// Order of the sentence with the given id.
    pub fn sentence_order(&self, id: &SentenceId) -> Option<usize> {
        self.sentence(id).map(|s| s.order)
    }

    /// Sorts every array by id so serialization is byte-stable.
    pub fn canonicalize(&mut self) {
        self.sentences.sort_by(|a, b| a.id.cmp(&b.id));
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for node in &mut self.nodes {
            node.spans.sort();
            node.spans.dedup();
        }
        self.edges.sort_by(|a, b| a.id.cmp(&b.id));
        self.memberships.sort();
        self.memberships.dedup();
    }

    pub fn to_canonical_json(&self) -> String {
        let mut doc = self.clone();
        doc.canonicalize();
        serde_json::to_string_pretty(&doc).expect("document serialization cannot fail")
    }
}

// ── Validation ───────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    SentenceOrder,
    SentenceBounds,
    UnknownSentence,
    SpanOutOfBounds,
    UnknownNode,
    SelfLoop,
    AtomicWithMembers,
    CompositeTooFewMembers,
    MissingSpans,
    FirstSentenceMismatch,
    DuplicateMembership,
    ContainmentCycle,
    /// An edge joins a composite to one of its own descendants.
    EdgeIntoOwnMember,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub severity: Severity,
    pub ids: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.violations.iter().any(|v| v.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }

    fn error(&mut self, kind: ViolationKind, ids: Vec<String>, message: String) {
        self.violations.push(Violation {
            kind,
            severity: Severity::Error,
            ids,
            message,
        });
    }

    fn warning(&mut self, kind: ViolationKind, ids: Vec<String>, message: String) {
        self.violations.push(Violation {
            kind,
            severity: Severity::Warning,
            ids,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{:?} {:?}: {}", v.severity, v.kind, v.message)?;
        }
        Ok(())
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dups.insert(id.to_string());
        }
    }
    dups.into_iter().collect()
}

/// Enumerates every structural invariant violation of `doc`.
///
/// Violations are data: a valid document yields an empty report. Edges
/// joining a composite to one of its own descendants are reported as
/// warnings only.
pub fn validate_document(doc: &Document) -> ValidationReport {
    let mut report = ValidationReport::default();

    for id in duplicates(doc.sentences.iter().map(|s| s.id.as_str())) {
        report.error(ViolationKind::DuplicateId, vec![id.clone()], format!("duplicate sentence id {id}"));
    }
    for id in duplicates(doc.nodes.iter().map(|n| n.id.as_str())) {
        report.error(ViolationKind::DuplicateId, vec![id.clone()], format!("duplicate node id {id}"));
    }
    for id in duplicates(doc.edges.iter().map(|e| e.id.as_str())) {
        report.error(ViolationKind::DuplicateId, vec![id.clone()], format!("duplicate edge id {id}"));
    }

    // Sentences: consecutive orders, ascending non-overlapping spans.
    let text_len = doc.text.chars().count();
    let mut by_order: Vec<&Sentence> = doc.sentences.iter().collect();
    by_order.sort_by_key(|s| (s.order, s.id.clone()));
    for (expected, s) in by_order.iter().enumerate() {
        if s.order != expected {
            report.error(
                ViolationKind::SentenceOrder,
                vec![s.id.0.clone()],
                format!("sentence {} has order {} where {} was expected", s.id, s.order, expected),
            );
            break;
        }
    }
    let mut previous_end = 0;
    for s in &by_order {
        if s.start >= s.end || s.end > text_len || s.start < previous_end {
            report.error(
                ViolationKind::SentenceBounds,
                vec![s.id.0.clone()],
                format!("sentence {} spans [{}, {}) which is empty, out of the text, or overlaps its predecessor", s.id, s.start, s.end),
            );
        }
        previous_end = previous_end.max(s.end);
    }

    let sentence_len: BTreeMap<&SentenceId, (usize, usize)> = doc
        .sentences
        .iter()
        .map(|s| (&s.id, (s.order, s.end.saturating_sub(s.start))))
        .collect();
    let node_kinds: BTreeMap<&NodeId, NodeKind> = doc.nodes.iter().map(|n| (&n.id, n.kind)).collect();

    for node in &doc.nodes {
        if node.spans.is_empty() {
            report.error(ViolationKind::MissingSpans, vec![node.id.0.clone()], format!("node {} has no text span", node.id));
        }
        let mut earliest: Option<usize> = None;
        for span in &node.spans {
            match sentence_len.get(&span.sentence_id) {
                None => report.error(
                    ViolationKind::UnknownSentence,
                    vec![node.id.0.clone(), span.sentence_id.0.clone()],
                    format!("node {} references unknown sentence {}", node.id, span.sentence_id),
                ),
                Some(&(order, len)) => {
                    earliest = Some(earliest.map_or(order, |e| e.min(order)));
                    if span.start >= span.end || span.end > len {
                        report.error(
                            ViolationKind::SpanOutOfBounds,
                            vec![node.id.0.clone(), span.sentence_id.0.clone()],
                            format!("span [{}, {}) of node {} is outside sentence {} (length {})", span.start, span.end, node.id, span.sentence_id, len),
                        );
                    }
                }
            }
        }
        if let Some(earliest) = earliest {
            if earliest != node.first_sentence {
                report.error(
                    ViolationKind::FirstSentenceMismatch,
                    vec![node.id.0.clone()],
                    format!("node {} records first sentence {} but its earliest span is in {}", node.id, node.first_sentence, earliest),
                );
            }
        }
    }

    for edge in &doc.edges {
        for endpoint in [&edge.source, &edge.target] {
            if !node_kinds.contains_key(endpoint) {
                report.error(
                    ViolationKind::UnknownNode,
                    vec![edge.id.0.clone(), endpoint.0.clone()],
                    format!("edge {} references unknown node {}", edge.id, endpoint),
                );
            }
        }
        if edge.source == edge.target {
            report.error(ViolationKind::SelfLoop, vec![edge.id.0.clone()], format!("edge {} is a self-loop", edge.id));
        }
        if !sentence_len.contains_key(&edge.sentence_id) {
            report.error(
                ViolationKind::UnknownSentence,
                vec![edge.id.0.clone(), edge.sentence_id.0.clone()],
                format!("edge {} references unknown sentence {}", edge.id, edge.sentence_id),
            );
        }
    }

    let mut member_count: BTreeMap<&NodeId, usize> = BTreeMap::new();
    let mut seen_pairs = BTreeSet::new();
    for m in &doc.memberships {
        if !seen_pairs.insert((&m.parent, &m.child)) {
            report.error(
                ViolationKind::DuplicateMembership,
                vec![m.parent.0.clone(), m.child.0.clone()],
                format!("membership {} -> {} is listed twice", m.parent, m.child),
            );
            continue;
        }
        for id in [&m.parent, &m.child] {
            if !node_kinds.contains_key(id) {
                report.error(
                    ViolationKind::UnknownNode,
                    vec![m.parent.0.clone(), m.child.0.clone()],
                    format!("membership {} -> {} references unknown node {}", m.parent, m.child, id),
                );
            }
        }
        *member_count.entry(&m.parent).or_default() += 1;
    }
    for node in &doc.nodes {
        let count = member_count.get(&node.id).copied().unwrap_or(0);
        match node.kind {
            NodeKind::Atomic if count > 0 => report.error(
                ViolationKind::AtomicWithMembers,
                vec![node.id.0.clone()],
                format!("atomic node {} has {} members", node.id, count),
            ),
            NodeKind::Composite if count < 2 => report.error(
                ViolationKind::CompositeTooFewMembers,
                vec![node.id.0.clone()],
                format!("composite node {} has {} members, at least 2 required", node.id, count),
            ),
            _ => {}
        }
    }

    let cycles = containment_cycles(doc);
    let cyclic: BTreeSet<&NodeId> = cycles.iter().flatten().collect();
    for cycle in &cycles {
        let ids: Vec<String> = cycle.iter().map(|n| n.0.clone()).collect();
        report.error(
            ViolationKind::ContainmentCycle,
            ids.clone(),
            format!("membership cycle among {{{}}}", ids.join(", ")),
        );
    }

    // Warnings: edges from a composite into its own contents. Skipped when
    // the containment relation is cyclic since descendants are ill-defined.
    if cyclic.is_empty() {
        for edge in &doc.edges {
            let pairs = [(&edge.source, &edge.target), (&edge.target, &edge.source)];
            for (outer, inner) in pairs {
                if node_kinds.get(outer) == Some(&NodeKind::Composite) && doc.descendants(outer).contains(inner) {
                    report.warning(
                        ViolationKind::EdgeIntoOwnMember,
                        vec![edge.id.0.clone(), outer.0.clone(), inner.0.clone()],
                        format!("edge {} joins composite {} to its member {}", edge.id, outer, inner),
                    );
                }
            }
        }
    }

    report
}

/// Strongly connected groups of the membership digraph that form cycles.
fn containment_cycles(doc: &Document) -> Vec<Vec<NodeId>> {
    let mut graph = DiGraph::<NodeId, ()>::new();
    let mut index = BTreeMap::new();
    let mut self_loops = BTreeSet::new();
    for m in &doc.memberships {
        for id in [&m.parent, &m.child] {
            if !index.contains_key(id) {
                index.insert(id.clone(), graph.add_node(id.clone()));
            }
        }
        if m.parent == m.child {
            self_loops.insert(m.parent.clone());
        }
        graph.add_edge(index[&m.parent], index[&m.child], ());
    }
    let mut cycles: Vec<Vec<NodeId>> = tarjan_scc(&graph)
        .into_iter()
        .filter_map(|component| {
            let mut ids: Vec<NodeId> = component.iter().map(|&i| graph[i].clone()).collect();
            ids.sort();
            if ids.len() > 1 || self_loops.contains(&ids[0]) {
                Some(ids)
            } else {
                None
            }
        })
        .collect();
    cycles.sort();
    cycles
}

// ── Structural queries ───────────────────────────────────────────────

/// All atomic nodes reachable from `id` through membership, or `{id}` when
/// `id` is itself atomic.
pub fn descendant_atoms(doc: &Document, id: &NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
    let node = doc.node(id).ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
    if node.is_atomic() {
        return Ok(BTreeSet::from([id.clone()]));
    }
    let kinds: BTreeMap<&NodeId, NodeKind> = doc.nodes.iter().map(|n| (&n.id, n.kind)).collect();
    Ok(doc
        .descendants(id)
        .into_iter()
        .filter(|d| kinds.get(d) == Some(&NodeKind::Atomic))
        .collect())
}

/// Which nesting level to extract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelParent {
    /// Nodes without any parent.
    Root,
    Composite(NodeId),
}

/// Direct members of one nesting level and the edges among them.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSubgraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl LevelSubgraph {
    pub fn node_ids(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }
}

pub fn level_subgraph(doc: &Document, parent: &LevelParent) -> Result<LevelSubgraph, GraphError> {
    let members: BTreeSet<NodeId> = match parent {
        LevelParent::Root => {
            let children: BTreeSet<&NodeId> = doc.memberships.iter().map(|m| &m.child).collect();
            doc.nodes
                .iter()
                .filter(|n| !children.contains(&n.id))
                .map(|n| n.id.clone())
                .collect()
        }
        LevelParent::Composite(id) => {
            let node = doc.node(id).ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
            if !node.is_composite() {
                return Err(GraphError::NotComposite(id.clone()));
            }
            doc.children(id).into_iter().cloned().collect()
        }
    };
    let mut nodes: Vec<Node> = doc.nodes.iter().filter(|n| members.contains(&n.id)).cloned().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges: Vec<Edge> = doc
        .edges
        .iter()
        .filter(|e| members.contains(&e.source) && members.contains(&e.target))
        .cloned()
        .collect();
    edges.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(LevelSubgraph { nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn atom(id: &str, sentence: &str, start: usize, end: usize) -> Node {
        Node {
            id: id.into(),
            label: id.to_string(),
            kind: NodeKind::Atomic,
            spans: vec![TextSpan::new(sentence.into(), start, end)],
            first_sentence: 0,
        }
    }

    fn composite(id: &str, sentence: &str, start: usize, end: usize) -> Node {
        Node {
            kind: NodeKind::Composite,
            ..atom(id, sentence, start, end)
        }
    }

    fn edge(id: &str, s: &str, t: &str) -> Edge {
        Edge {
            id: id.into(),
            source: s.into(),
            target: t.into(),
            label: "r".into(),
            sentence_id: "s0".into(),
        }
    }

    fn one_sentence(text: &str) -> Document {
        let mut doc = Document::new("d", text);
        doc.sentences.push(Sentence {
            id: "s0".into(),
            order: 0,
            start: 0,
            end: text.chars().count(),
        });
        doc
    }

    /// "buildup" -(of)-> "carbon dioxide" -(in)-> "air" inside one container.
    fn buildup_fixture() -> Document {
        let text = "the buildup of carbon dioxide in the air";
        let mut doc = one_sentence(text);
        doc.nodes = vec![
            composite("c", "s0", 0, 40),
            atom("buildup", "s0", 4, 11),
            atom("co2", "s0", 15, 29),
            atom("air", "s0", 37, 40),
        ];
        doc.edges = vec![
            Edge { label: "of".into(), ..edge("e1", "buildup", "co2") },
            Edge { label: "in".into(), ..edge("e2", "co2", "air") },
        ];
        doc.memberships = vec![Membership::new("c", "buildup"), Membership::new("c", "co2"), Membership::new("c", "air")];
        doc
    }

    #[test]
    fn empty_document_is_valid() {
        assert!(validate_document(&Document::default()).is_empty());
    }

    #[test]
    fn buildup_fixture_is_valid() {
        let doc = buildup_fixture();
        assert_eq!(doc.span_text(&doc.nodes[2].spans[0]), Some("carbon dioxide"));
        let report = validate_document(&doc);
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn membership_cycle_is_reported_once() {
        let mut doc = one_sentence("c1 c2");
        doc.nodes = vec![composite("C1", "s0", 0, 2), composite("C2", "s0", 3, 5)];
        doc.memberships = vec![Membership::new("C1", "C2"), Membership::new("C2", "C1")];
        let report = validate_document(&doc);
        let cycles: Vec<_> = report.of_kind(ViolationKind::ContainmentCycle).collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].ids, vec!["C1".to_string(), "C2".to_string()]);
    }

    #[test]
    fn each_violation_class_is_detected() {
        let base = buildup_fixture();

        let mut doc = base.clone();
        doc.nodes.push(atom("buildup", "s0", 0, 3));
        assert!(validate_document(&doc).of_kind(ViolationKind::DuplicateId).count() == 1);

        let mut doc = base.clone();
        doc.nodes[1].spans[0].end = 99;
        assert!(validate_document(&doc).of_kind(ViolationKind::SpanOutOfBounds).count() == 1);

        let mut doc = base.clone();
        doc.nodes[1].spans.clear();
        assert!(validate_document(&doc).of_kind(ViolationKind::MissingSpans).count() == 1);

        let mut doc = base.clone();
        doc.edges.push(edge("e3", "buildup", "buildup"));
        assert!(validate_document(&doc).of_kind(ViolationKind::SelfLoop).count() == 1);

        let mut doc = base.clone();
        doc.edges.push(edge("e3", "buildup", "ghost"));
        assert!(validate_document(&doc).of_kind(ViolationKind::UnknownNode).count() == 1);

        let mut doc = base.clone();
        doc.memberships.push(Membership::new("buildup", "air"));
        assert!(validate_document(&doc).of_kind(ViolationKind::AtomicWithMembers).count() == 1);

        let mut doc = base.clone();
        doc.memberships.truncate(1);
        assert!(validate_document(&doc).of_kind(ViolationKind::CompositeTooFewMembers).count() == 1);

        let mut doc = base.clone();
        doc.memberships.push(Membership::new("c", "buildup"));
        assert!(validate_document(&doc).of_kind(ViolationKind::DuplicateMembership).count() == 1);

        let mut doc = base.clone();
        doc.sentences[0].order = 1;
        assert!(validate_document(&doc).of_kind(ViolationKind::SentenceOrder).count() == 1);

        let mut doc = base.clone();
        doc.nodes[1].first_sentence = 3;
        assert!(validate_document(&doc).of_kind(ViolationKind::FirstSentenceMismatch).count() == 1);

        let mut doc = base.clone();
        doc.edges[0].sentence_id = "s9".into();
        assert!(validate_document(&doc).of_kind(ViolationKind::UnknownSentence).count() == 1);
    }

    #[test]
    fn edge_into_own_member_is_only_a_warning() {
        let mut doc = buildup_fixture();
        doc.edges.push(edge("e3", "c", "buildup"));
        let report = validate_document(&doc);
        assert!(!report.has_errors());
        assert_eq!(report.of_kind(ViolationKind::EdgeIntoOwnMember).count(), 1);
    }

    #[test]
    fn descendant_atoms_cases() {
        let mut doc = one_sentence("a b c d e");
        doc.nodes = vec![
            atom("a", "s0", 0, 1),
            atom("b", "s0", 2, 3),
            atom("c", "s0", 4, 5),
            composite("C1", "s0", 0, 9),
            composite("C2", "s0", 2, 5),
        ];
        doc.memberships = vec![
            Membership::new("C1", "a"),
            Membership::new("C1", "C2"),
            Membership::new("C2", "b"),
            Membership::new("C2", "c"),
        ];
        let ids = |v: &[&str]| v.iter().map(|s| NodeId::from(*s)).collect::<BTreeSet<_>>();
        assert_eq!(descendant_atoms(&doc, &"a".into()).unwrap(), ids(&["a"]));
        assert_eq!(descendant_atoms(&doc, &"C2".into()).unwrap(), ids(&["b", "c"]));
        assert_eq!(descendant_atoms(&doc, &"C1".into()).unwrap(), ids(&["a", "b", "c"]));
        assert_eq!(
            descendant_atoms(&doc, &"zz".into()),
            Err(GraphError::UnknownNode("zz".into()))
        );
    }

    #[test]
    fn level_subgraph_cases() {
        let mut doc = one_sentence("a b c");
        doc.nodes = vec![atom("a", "s0", 0, 1), atom("b", "s0", 2, 3), atom("c", "s0", 4, 5)];
        doc.edges = vec![edge("e1", "a", "b"), edge("e2", "b", "c")];
        let root = level_subgraph(&doc, &LevelParent::Root).unwrap();
        assert_eq!((root.nodes.len(), root.edges.len()), (3, 2));

        // C1 = {a, C2}, C2 = {b, c}, edge a -> C2 and an edge into C2's inside.
        doc.nodes.push(composite("C1", "s0", 0, 5));
        doc.nodes.push(composite("C2", "s0", 2, 5));
        doc.memberships = vec![
            Membership::new("C1", "a"),
            Membership::new("C1", "C2"),
            Membership::new("C2", "b"),
            Membership::new("C2", "c"),
        ];
        doc.edges = vec![edge("e1", "a", "C2"), edge("e2", "a", "b")];
        let level = level_subgraph(&doc, &LevelParent::Composite("C1".into())).unwrap();
        assert_eq!(level.node_ids(), ["C2", "a"].iter().map(|s| NodeId::from(*s)).collect());
        assert_eq!(level.edges.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), vec!["e1"]);

        assert_eq!(
            level_subgraph(&doc, &LevelParent::Composite("nope".into())),
            Err(GraphError::UnknownNode("nope".into()))
        );
    }

    #[test]
    fn shared_child_appears_in_both_levels() {
        let mut doc = one_sentence("a b c");
        doc.nodes = vec![
            atom("a", "s0", 0, 1),
            atom("b", "s0", 2, 3),
            atom("s", "s0", 4, 5),
            composite("P", "s0", 0, 5),
            composite("Q", "s0", 2, 5),
        ];
        doc.memberships = vec![
            Membership::new("P", "a"),
            Membership::new("P", "s"),
            Membership::new("Q", "b"),
            Membership::new("Q", "s"),
        ];
        for parent in ["P", "Q"] {
            let level = level_subgraph(&doc, &LevelParent::Composite(parent.into())).unwrap();
            assert!(level.node_ids().contains(&NodeId::from("s")));
        }
        assert!(validate_document(&doc).is_empty());
    }

    #[test]
    fn char_slice_handles_multibyte_text() {
        assert_eq!(char_slice("größer ist", 0, 6), Some("größer"));
        assert_eq!(char_slice("abc", 1, 3), Some("bc"));
        assert_eq!(char_slice("abc", 3, 3), Some(""));
        assert_eq!(char_slice("abc", 2, 5), None);
    }
}
