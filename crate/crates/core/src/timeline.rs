//! Per-sentence animation scripts for progressive reading.
//!
//! Each sentence gets one block of events: dim what is already on screen,
//! split atoms the sentence refines, move existing elements to their new
//! positions, then reveal the new elements outer to inner and left to
//! right. Replaying every block in order reproduces the final layout.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph_model::{Document, EdgeId, NodeId, SentenceId};
use crate::layout::{sentence_bands, snap, split_member_placement, Band, LabelMetrics, LayoutConfig, LayoutState, Rect};

/// Opacity of existing elements while a new sentence is presented.
pub const DIM_OPACITY: f64 = 0.35;
pub const DIM_MS: u32 = 300;
pub const MOVE_MS: u32 = 600;
pub const REVEAL_MS: u32 = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SentenceBegin,
    DimExisting,
    NodeSplit,
    NodeMove,
    RevealNode,
    RevealEdge,
    SentenceEnd,
}

impl EventKind {
    /// Position of the kind in the fixed order of a block. Node and edge
    /// reveals share a rank since they interleave.
    pub fn rank(self) -> u8 {
        match self {
            EventKind::SentenceBegin => 0,
            EventKind::DimExisting => 1,
            EventKind::NodeSplit => 2,
            EventKind::NodeMove => 3,
            EventKind::RevealNode | EventKind::RevealEdge => 4,
            EventKind::SentenceEnd => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitAction {
    /// The atom takes the color of a composite.
    Recolor,
    /// The atom's rectangle grows into the container.
    Morph,
    /// A new member appears inside the container.
    Place,
    /// An edge between new members appears.
    RevealEdge,
}

/// Positions and presentation values carried by an event. Only the fields
/// meaningful for the event kind are present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub before: Option<Rect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub after: Option<Rect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pinned: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opacity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoints: Option<(NodeId, NodeId)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<SplitStep>,
}

/// One stage of a node split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStep {
    pub action: SplitAction,
    pub subjects: Vec<String>,
    pub geometry: Geometry,
    pub duration_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub kind: EventKind,
    pub subjects: Vec<String>,
    pub geometry: Geometry,
    pub duration_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub sentence_order: usize,
    pub events: Vec<TimelineEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub document_id: String,
    pub columns: BTreeMap<usize, usize>,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TimelineError {
    #[error("no layout snapshot for the prefix ending at sentence {0}")]
    MissingSnapshot(usize),
    #[error("node {0} is not split by this sentence")]
    NotRefined(NodeId),
    #[error("node {0} has no position in the previous snapshot")]
    MissingPosition(NodeId),
}

/// Column per sentence order. Sentences that share an entity, directly or
/// through other sentences, share a column; columns are numbered in the
/// order their first sentence appears.
pub fn assign_columns(doc: &Document) -> BTreeMap<usize, usize> {
    let mut orders: Vec<usize> = doc.sentences.iter().map(|s| s.order).collect();
    orders.sort_unstable();
    let index: BTreeMap<usize, usize> = orders.iter().enumerate().map(|(i, o)| (*o, i)).collect();
    let mut parent: Vec<usize> = (0..orders.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for node in &doc.nodes {
        let mentioned: BTreeSet<usize> = node
            .spans
            .iter()
            .filter_map(|s| doc.sentence_order(&s.sentence_id))
            .filter_map(|o| index.get(&o).copied())
            .collect();
        let mut it = mentioned.into_iter();
        if let Some(first) = it.next() {
            for other in it {
                let (a, b) = (find(&mut parent, first), find(&mut parent, other));
                // Keep the earlier sentence as the root.
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut numbering: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (i, order) in orders.iter().enumerate() {
        let root = find(&mut parent, i);
        let next = numbering.len();
        let column = *numbering.entry(root).or_insert(next);
        out.insert(*order, column);
    }
    out
}

fn was_split(prev: &Document, doc: &Document, id: &NodeId) -> bool {
    prev.node(id).is_some_and(|n| n.is_atomic()) && doc.node(id).is_some_and(|n| n.is_composite())
}

/// New descendants of a split node, in id order.
fn new_descendants(prev: &Document, doc: &Document, id: &NodeId) -> Vec<NodeId> {
    doc.descendants(id).into_iter().filter(|d| prev.node(d).is_none()).collect()
}

/// Stages of turning atom `node` of `prev` into the composite it is in
/// `doc`: recolor, morph from the old rectangle to the container, place each
/// new member, then reveal the edges among new members.
pub fn split_plan(
    prev: &Document,
    doc: &Document,
    node: &NodeId,
    prior: &LayoutState,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> Result<Vec<SplitStep>, TimelineError> {
    if !was_split(prev, doc, node) {
        return Err(TimelineError::NotRefined(node.clone()));
    }
    let old = *prior.atoms.get(node).ok_or_else(|| TimelineError::MissingPosition(node.clone()))?;
    let placement = split_member_placement(doc, node, (old.x, old.y), config, metrics);
    let mut scratch = LayoutState {
        atoms: prior.atoms.clone(),
        ..LayoutState::default()
    };
    scratch.atoms.remove(node);
    for (id, r) in &placement {
        scratch.atoms.entry(id.clone()).or_insert(*r);
    }
    scratch.derive_bounds(doc, config.composite_padding);
    let container = scratch.composites.get(node).copied().unwrap_or(old);

    let subject = vec![node.to_string()];
    let mut steps = vec![
        SplitStep {
            action: SplitAction::Recolor,
            subjects: subject.clone(),
            geometry: Geometry {
                composite: Some(true),
                ..Geometry::default()
            },
            duration_ms: DIM_MS,
        },
        SplitStep {
            action: SplitAction::Morph,
            subjects: subject,
            geometry: Geometry {
                before: Some(old),
                after: Some(container),
                ..Geometry::default()
            },
            duration_ms: MOVE_MS,
        },
    ];
    let members = new_descendants(prev, doc, node);
    for id in &members {
        let composite = doc.node(id).is_some_and(|n| n.is_composite());
        let Some(r) = scratch.rect(id).copied() else { continue };
        steps.push(SplitStep {
            action: SplitAction::Place,
            subjects: vec![id.to_string()],
            geometry: Geometry {
                after: Some(r),
                pinned: Some(false),
                composite: Some(composite),
                ..Geometry::default()
            },
            duration_ms: REVEAL_MS,
        });
    }
    let inside: BTreeSet<&NodeId> = members.iter().collect();
    for e in internal_edges(prev, doc, &inside) {
        steps.push(SplitStep {
            action: SplitAction::RevealEdge,
            subjects: vec![e.0.to_string()],
            geometry: Geometry {
                endpoints: Some((e.1, e.2)),
                ..Geometry::default()
            },
            duration_ms: REVEAL_MS,
        });
    }
    Ok(steps)
}

/// New edges of `doc` with both endpoints in `inside`.
fn internal_edges(prev: &Document, doc: &Document, inside: &BTreeSet<&NodeId>) -> Vec<(EdgeId, NodeId, NodeId)> {
    let old: BTreeSet<&EdgeId> = prev.edges.iter().map(|e| &e.id).collect();
    let mut out: Vec<_> = doc
        .edges
        .iter()
        .filter(|e| !old.contains(&e.id) && inside.contains(&e.source) && inside.contains(&e.target))
        .map(|e| (e.id.clone(), e.source.clone(), e.target.clone()))
        .collect();
    out.sort();
    out
}

/// Nesting depth: 0 for top-level nodes, otherwise one more than the
/// deepest parent.
fn depths(doc: &Document) -> BTreeMap<NodeId, usize> {
    fn visit(id: &NodeId, doc: &Document, memo: &mut BTreeMap<NodeId, usize>, active: &mut BTreeSet<NodeId>) -> usize {
        if let Some(d) = memo.get(id) {
            return *d;
        }
        if !active.insert(id.clone()) {
            return 0;
        }
        let parents: Vec<NodeId> = doc.parents(id).into_iter().cloned().collect();
        let d = parents.iter().map(|p| visit(p, doc, memo, active) + 1).max().unwrap_or(0);
        active.remove(id);
        memo.insert(id.clone(), d);
        d
    }
    let mut memo = BTreeMap::new();
    let mut active = BTreeSet::new();
    for n in &doc.nodes {
        visit(&n.id, doc, &mut memo, &mut active);
    }
    memo
}

/// What a client shows after replaying some events.
#[derive(Debug, Clone, Default, PartialEq)]
struct Canvas {
    state: LayoutState,
}

impl Canvas {
    fn rect(&self, id: &NodeId) -> Option<Rect> {
        self.state.rect(id).copied()
    }

    fn put(&mut self, id: &NodeId, r: Rect, composite: bool, pinned: Option<bool>) {
        if composite {
            self.state.atoms.remove(id);
            self.state.pinned.remove(id);
            self.state.composites.insert(id.clone(), r);
        } else {
            self.state.composites.remove(id);
            self.state.atoms.insert(id.clone(), r);
        }
        match pinned {
            Some(true) => {
                self.state.pinned.insert(id.clone());
            }
            Some(false) => {
                self.state.pinned.remove(id);
            }
            None => {}
        }
    }

    fn apply(&mut self, event: &TimelineEvent) {
        let g = &event.geometry;
        match event.kind {
            EventKind::NodeSplit => {
                for step in &g.steps {
                    let id = NodeId::new(step.subjects[0].clone());
                    let sg = &step.geometry;
                    match step.action {
                        SplitAction::Morph => {
                            if let Some(r) = sg.after {
                                self.put(&id, r, true, Some(false));
                            }
                        }
                        SplitAction::Place => {
                            if let Some(r) = sg.after {
                                self.put(&id, r, sg.composite == Some(true), sg.pinned);
                            }
                        }
                        SplitAction::Recolor | SplitAction::RevealEdge => {}
                    }
                }
            }
            EventKind::NodeMove | EventKind::RevealNode => {
                if let (Some(id), Some(r)) = (event.subjects.first(), g.after) {
                    self.put(&NodeId::new(id.clone()), r, g.composite == Some(true), g.pinned);
                }
            }
            _ => {}
        }
    }
}

/// Layout obtained by applying every event of `timeline` in order.
pub fn replay(timeline: &Timeline) -> LayoutState {
    let mut canvas = Canvas::default();
    for block in &timeline.blocks {
        for event in &block.events {
            canvas.apply(event);
        }
    }
    canvas.state
}

/// Builds the timeline of an ingestion from its document prefixes (the
/// document after each sentence) and the settled layout of each prefix.
pub fn compile_timeline(
    prefixes: &[Document],
    snapshots: &[LayoutState],
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> Result<Timeline, TimelineError> {
    let Some(last) = prefixes.last() else {
        return Ok(Timeline {
            document_id: String::new(),
            columns: BTreeMap::new(),
            blocks: Vec::new(),
        });
    };
    let columns = assign_columns(last);
    let bands = sentence_bands(last, &columns, config);
    let empty = Document::new(last.id.clone(), last.text.clone());
    let empty_state = LayoutState::default();
    let mut canvas = Canvas::default();
    let mut blocks = Vec::with_capacity(prefixes.len());

    for (k, doc) in prefixes.iter().enumerate() {
        let order = doc.sentences.iter().map(|s| s.order).max().unwrap_or(k);
        let snapshot = snapshots.get(k).ok_or(TimelineError::MissingSnapshot(order))?;
        let (prev, prior) = if k == 0 {
            (&empty, &empty_state)
        } else {
            (&prefixes[k - 1], &snapshots[k - 1])
        };
        let sentence_id = doc
            .sentence_by_order(order)
            .map(|s| s.id.clone())
            .unwrap_or_else(|| SentenceId::from_order(order));
        let mut events = Vec::new();
        let mark = |kind: EventKind, subjects: Vec<String>, geometry: Geometry, duration_ms: u32| TimelineEvent {
            kind,
            subjects,
            geometry,
            duration_ms,
        };

        events.push(mark(
            EventKind::SentenceBegin,
            vec![sentence_id.to_string()],
            Geometry {
                band: bands.get(&order).copied(),
                ..Geometry::default()
            },
            0,
        ));

        if !prev.nodes.is_empty() {
            let mut visible: Vec<String> = prev.nodes.iter().map(|n| n.id.to_string()).collect();
            visible.extend(prev.edges.iter().map(|e| e.id.to_string()));
            visible.sort();
            events.push(mark(
                EventKind::DimExisting,
                visible,
                Geometry {
                    opacity: Some(DIM_OPACITY),
                    ..Geometry::default()
                },
                DIM_MS,
            ));
        }

        // Splits cover their new descendants and the edges among them.
        let mut covered_nodes: BTreeSet<NodeId> = BTreeSet::new();
        let mut covered_edges: BTreeSet<EdgeId> = BTreeSet::new();
        let split: Vec<NodeId> = doc
            .nodes
            .iter()
            .filter(|n| was_split(prev, doc, &n.id))
            .map(|n| n.id.clone())
            .collect();
        // New members that also sit in a composite revealed normally wait
        // for that composite, so a container always appears first.
        let split_new: BTreeSet<NodeId> = split.iter().flat_map(|id| new_descendants(prev, doc, id)).collect();
        let deferred: BTreeSet<NodeId> = split_new
            .iter()
            .filter(|m| {
                doc.ancestors(m)
                    .iter()
                    .any(|p| prev.node(p).is_none() && !split_new.contains(p))
            })
            .cloned()
            .collect();
        for id in &split {
            let mut steps = split_plan(prev, doc, id, prior, config, metrics)?;
            // A member shared by two splits belongs to the first one.
            steps.retain(|s| {
                let subject = &s.subjects[0];
                match s.action {
                    SplitAction::Place => {
                        let m = NodeId::new(subject.clone());
                        !covered_nodes.contains(&m) && !deferred.contains(&m)
                    }
                    SplitAction::RevealEdge => {
                        let touches_deferred = s
                            .geometry
                            .endpoints
                            .as_ref()
                            .is_some_and(|(a, b)| deferred.contains(a) || deferred.contains(b));
                        !covered_edges.contains(&EdgeId::new(subject.clone())) && !touches_deferred
                    }
                    _ => true,
                }
            });
            let mut subjects = vec![id.to_string()];
            for s in &steps {
                match s.action {
                    SplitAction::Place => {
                        covered_nodes.insert(NodeId::new(s.subjects[0].clone()));
                        subjects.push(s.subjects[0].clone());
                    }
                    SplitAction::RevealEdge => {
                        covered_edges.insert(EdgeId::new(s.subjects[0].clone()));
                    }
                    _ => {}
                }
            }
            let before = steps.iter().find(|s| s.action == SplitAction::Morph).and_then(|s| s.geometry.before);
            let after = steps.iter().find(|s| s.action == SplitAction::Morph).and_then(|s| s.geometry.after);
            let duration = steps.iter().map(|s| s.duration_ms).sum();
            let event = mark(
                EventKind::NodeSplit,
                subjects,
                Geometry {
                    before,
                    after,
                    composite: Some(true),
                    steps,
                    ..Geometry::default()
                },
                duration,
            );
            canvas.apply(&event);
            events.push(event);
        }

        // Everything already on the canvas that the new snapshot puts
        // elsewhere, or pins differently.
        let mut moves = Vec::new();
        let shown: Vec<(NodeId, bool)> = canvas
            .state
            .atoms
            .keys()
            .map(|id| (id.clone(), false))
            .chain(canvas.state.composites.keys().map(|id| (id.clone(), true)))
            .collect();
        for (id, composite) in shown {
            let target = if composite {
                snapshot.composites.get(&id)
            } else {
                snapshot.atoms.get(&id)
            };
            let Some(after) = target.copied() else { continue };
            let before = canvas.rect(&id);
            let pinned = !composite && snapshot.pinned.contains(&id);
            let was_pinned = canvas.state.pinned.contains(&id);
            if before == Some(after) && pinned == was_pinned {
                continue;
            }
            moves.push(mark(
                EventKind::NodeMove,
                vec![id.to_string()],
                Geometry {
                    before,
                    after: Some(after),
                    pinned: (!composite).then_some(pinned),
                    composite: Some(composite),
                    ..Geometry::default()
                },
                MOVE_MS,
            ));
        }
        moves.sort_by(|a, b| a.subjects.cmp(&b.subjects));
        for event in moves {
            canvas.apply(&event);
            events.push(event);
        }

        // Reveals: new nodes outer to inner, then by snapped x, then id;
        // each new edge right after its later endpoint appears.
        let depth = depths(doc);
        let mut fresh: Vec<(usize, f64, NodeId)> = doc
            .nodes
            .iter()
            .filter(|n| prev.node(&n.id).is_none() && !covered_nodes.contains(&n.id))
            .map(|n| {
                let x = snapshot.rect(&n.id).map_or(0.0, |r| snap(r.x, config.grid_interval));
                (depth.get(&n.id).copied().unwrap_or(0), x, n.id.clone())
            })
            .collect();
        fresh.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let old_edges: BTreeSet<&EdgeId> = prev.edges.iter().map(|e| &e.id).collect();
        let mut pending: Vec<(EdgeId, NodeId, NodeId)> = doc
            .edges
            .iter()
            .filter(|e| !old_edges.contains(&e.id) && !covered_edges.contains(&e.id))
            .map(|e| (e.id.clone(), e.source.clone(), e.target.clone()))
            .collect();
        pending.sort();
        let mut visible: BTreeSet<NodeId> = prev.nodes.iter().map(|n| n.id.clone()).collect();
        visible.extend(covered_nodes.iter().cloned());

        let mut release = |visible: &BTreeSet<NodeId>, events: &mut Vec<TimelineEvent>| {
            pending.retain(|(id, s, t)| {
                if visible.contains(s) && visible.contains(t) {
                    events.push(mark(
                        EventKind::RevealEdge,
                        vec![id.to_string()],
                        Geometry {
                            endpoints: Some((s.clone(), t.clone())),
                            ..Geometry::default()
                        },
                        REVEAL_MS,
                    ));
                    false
                } else {
                    true
                }
            });
        };
        release(&visible, &mut events);
        for (_, _, id) in fresh {
            let composite = doc.node(&id).is_some_and(|n| n.is_composite());
            let rect = if composite {
                snapshot.composites.get(&id)
            } else {
                snapshot.atoms.get(&id)
            };
            let event = mark(
                EventKind::RevealNode,
                vec![id.to_string()],
                Geometry {
                    after: rect.copied(),
                    pinned: (!composite).then(|| snapshot.pinned.contains(&id)),
                    composite: Some(composite),
                    ..Geometry::default()
                },
                REVEAL_MS,
            );
            canvas.apply(&event);
            events.push(event);
            visible.insert(id);
            release(&visible, &mut events);
        }

        events.push(mark(
            EventKind::SentenceEnd,
            vec![sentence_id.to_string()],
            Geometry {
                opacity: Some(1.0),
                ..Geometry::default()
            },
            if prev.nodes.is_empty() { 0 } else { DIM_MS },
        ));
        blocks.push(Block {
            sentence_order: order,
            events,
        });
    }

    Ok(Timeline {
        document_id: last.id.clone(),
        columns,
        blocks,
    })
}
