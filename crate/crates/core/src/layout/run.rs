use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::forces::ForceModel;
use super::initial::nested_layout;
use super::{discretize, home_sentence, sentence_bands, snap, Band, DefaultMetrics, LabelMetrics, LayoutConfig, LayoutState, Rect};
use crate::graph_model::{level_subgraph, Document, LevelParent, Membership, NodeId, SentenceId};

/// Result of one layout run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRun {
    pub state: LayoutState,
    pub converged: bool,
    pub iterations: usize,
}

/// Lays out `doc` with every sentence in one column and default label
/// metrics. See [`run_layout_with`].
pub fn run_layout(doc: &Document, prior: Option<&LayoutState>, pinned: &BTreeSet<NodeId>, config: &LayoutConfig) -> LayoutRun {
    let bands = sentence_bands(doc, &BTreeMap::new(), config);
    run_layout_with(doc, prior, pinned, &bands, config, &DefaultMetrics)
}

/// Iterates the force simulation until the largest per-atom move drops below
/// `stabilize_epsilon` or `max_iterations` is reached, then snaps to the grid.
///
/// Atoms found in `prior` start there; the others start from the nested
/// initial layout, shifted onto the band of their latest sentence. Atoms in
/// `pinned` never move.
pub fn run_layout_with(
    doc: &Document,
    prior: Option<&LayoutState>,
    pinned: &BTreeSet<NodeId>,
    bands: &BTreeMap<usize, Band>,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> LayoutRun {
    let state = starting_state(doc, prior, pinned, bands, config, metrics);
    let run = settle(doc, state, bands, config);
    LayoutRun {
        state: discretize(&run.state, doc, config),
        ..run
    }
}

/// Positions before any force is applied: prior positions where known,
/// otherwise the nested initial layout shifted onto the band of each atom's
/// latest sentence.
pub fn starting_state(
    doc: &Document,
    prior: Option<&LayoutState>,
    pinned: &BTreeSet<NodeId>,
    bands: &BTreeMap<usize, Band>,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> LayoutState {
    let mut state = LayoutState::default();
    let mut unseen = BTreeSet::new();
    for node in doc.nodes.iter().filter(|n| n.is_atomic()) {
        let (w, h) = metrics.size(&node.label);
        match prior.and_then(|p| p.atoms.get(&node.id)) {
            Some(r) => {
                state.atoms.insert(node.id.clone(), Rect::new(r.x, r.y, w, h));
            }
            None => {
                unseen.insert(node.id.clone());
            }
        }
    }
    if !unseen.is_empty() {
        for (id, r) in place_unseen(doc, &unseen, bands, config, metrics) {
            state.atoms.insert(id, r);
        }
    }
    state.pinned = pinned.iter().filter(|id| state.atoms.contains_key(*id)).cloned().collect();
    state.derive_bounds(doc, config.composite_padding);
    state
}

/// The force iteration alone: runs from `start` until the largest per-atom
/// move drops below `stabilize_epsilon` or `max_iterations` is reached,
/// without snapping to the grid.
pub fn settle(doc: &Document, start: LayoutState, bands: &BTreeMap<usize, Band>, config: &LayoutConfig) -> LayoutRun {
    let mut state = start;
    let model = ForceModel::new(doc, bands);
    let (mut rects, pin_mask) = model.unpack(&state);
    let mut converged = rects.is_empty();
    let mut iterations = 0;
    while !converged && iterations < config.max_iterations {
        let largest = model.advance(&mut rects, &pin_mask, config);
        iterations += 1;
        converged = largest < config.stabilize_epsilon;
    }
    for (id, r) in model.atom_ids().iter().zip(rects) {
        state.atoms.insert(id.clone(), r);
    }
    state.derive_bounds(doc, config.composite_padding);
    LayoutRun {
        state,
        converged,
        iterations,
    }
}

/// Positions for atoms without a prior position. Top-level nodes are
/// grouped by home sentence; each group, with everything nested inside it,
/// gets its own nested initial layout centered on that sentence's band.
/// Nodes without a band go one row below the last band.
fn place_unseen(
    doc: &Document,
    unseen: &BTreeSet<NodeId>,
    bands: &BTreeMap<usize, Band>,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> BTreeMap<NodeId, Rect> {
    let Ok(root) = level_subgraph(doc, &LevelParent::Root) else {
        return BTreeMap::new();
    };
    let below = bands.values().map(|b| b.y).fold(f64::NEG_INFINITY, f64::max);
    let fallback = Band {
        column: 0,
        x: 0.0,
        y: if below.is_finite() { below + config.row_height() } else { 0.0 },
    };
    let mut groups: BTreeMap<Option<usize>, BTreeSet<NodeId>> = BTreeMap::new();
    for node in &root.nodes {
        let home = home_sentence(doc, &node.id).filter(|k| bands.contains_key(k));
        groups.entry(home).or_default().insert(node.id.clone());
    }
    let mut out = BTreeMap::new();
    for (home, tops) in groups {
        let band = home.map_or(fallback, |k| bands[&k]);
        let mut keep = tops.clone();
        for id in &tops {
            keep.extend(doc.descendants(id));
        }
        let block = nested_layout(&sub_document(doc, &keep), &LevelParent::Root, config, metrics).centered_at(band.x, band.y);
        for (id, r) in block.atoms {
            if unseen.contains(&id) && !out.contains_key(&id) {
                let r = Rect::new(snap(r.x, config.grid_interval), snap(r.y, config.grid_interval), r.w, r.h);
                out.insert(id, r);
            }
        }
    }
    out
}

/// The nodes in `keep` with the memberships and edges among them.
fn sub_document(doc: &Document, keep: &BTreeSet<NodeId>) -> Document {
    let mut block = Document::new(doc.id.clone(), doc.text.clone());
    block.sentences = doc.sentences.clone();
    block.nodes = doc.nodes.iter().filter(|n| keep.contains(&n.id)).cloned().collect();
    block.memberships = doc
        .memberships
        .iter()
        .filter(|m| keep.contains(&m.parent) && keep.contains(&m.child))
        .cloned()
        .collect::<Vec<Membership>>();
    block.edges = doc
        .edges
        .iter()
        .filter(|e| keep.contains(&e.source) && keep.contains(&e.target))
        .cloned()
        .collect();
    block
}

/// Grid-snapped positions for the contents of a freshly split node, laid
/// out like any composite and centered on the node's former position.
pub fn split_member_placement(
    doc: &Document,
    node: &NodeId,
    center: (f64, f64),
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> BTreeMap<NodeId, Rect> {
    nested_layout(doc, &LevelParent::Composite(node.clone()), config, metrics)
        .centered_at(center.0, center.1)
        .atoms
        .into_iter()
        .map(|(id, r)| {
            let x = snap(r.x, config.grid_interval);
            let y = snap(r.y, config.grid_interval);
            (id, Rect::new(x, y, r.w, r.h))
        })
        .collect()
}

/// Starting state for laying out the prefix ending at one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePrep {
    pub state: LayoutState,
    /// Nodes that were atomic before this sentence and are composite now.
    pub split: BTreeSet<NodeId>,
    /// Previously placed atoms moved into this sentence's band and pinned.
    pub relocated: BTreeSet<NodeId>,
}

/// Builds the starting state for sentence `order` from the previous
/// snapshot.
///
/// Existing atoms keep their positions and pins. Contents of nodes split by
/// this sentence appear around the node's old position. The atoms this
/// sentence mentions (together with composites it introduces) are laid out
/// as one block centered on the sentence band; atoms that were already
/// placed move into that block and are pinned there.
pub fn prepare_sentence(
    prev_doc: &Document,
    doc: &Document,
    prior: &LayoutState,
    order: usize,
    bands: &BTreeMap<usize, Band>,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> SentencePrep {
    let mut state = prior.clone();
    state.restrict_to(doc, config.composite_padding);

    let split: BTreeSet<NodeId> = doc
        .nodes
        .iter()
        .filter(|n| n.is_composite() && prev_doc.node(&n.id).is_some_and(|p| p.is_atomic()))
        .map(|n| n.id.clone())
        .collect();
    for id in &split {
        let Some(old) = prior.atoms.get(id) else { continue };
        for (atom, r) in split_member_placement(doc, id, (old.x, old.y), config, metrics) {
            state.atoms.entry(atom).or_insert(r);
        }
    }

    let mut relocated = BTreeSet::new();
    if let (Some(sentence), Some(band)) = (doc.sentence_by_order(order), bands.get(&order)) {
        let block_doc = sentence_block(prev_doc, doc, &sentence.id);
        if !block_doc.nodes.is_empty() {
            let block = nested_layout(&block_doc, &LevelParent::Root, config, metrics).centered_at(band.x, band.y);
            for (id, r) in block.atoms {
                let r = Rect::new(snap(r.x, config.grid_interval), snap(r.y, config.grid_interval), r.w, r.h);
                if state.atoms.contains_key(&id) {
                    state.pinned.insert(id.clone());
                    relocated.insert(id.clone());
                }
                state.atoms.insert(id, r);
            }
        }
    }
    let missing: BTreeSet<NodeId> = doc
        .nodes
        .iter()
        .filter(|n| n.is_atomic() && !state.atoms.contains_key(&n.id))
        .map(|n| n.id.clone())
        .collect();
    if !missing.is_empty() {
        for (id, r) in place_unseen(doc, &missing, bands, config, metrics) {
            state.atoms.entry(id).or_insert(r);
        }
    }
    state.derive_bounds(doc, config.composite_padding);
    SentencePrep { state, split, relocated }
}

/// Lays out every prefix of an ingestion in turn: prefix `k` starts from
/// the settled layout of prefix `k - 1` (see [`prepare_sentence`]), settles
/// with all pins held, and is snapped to the grid. Bands come from the last
/// prefix and `columns`.
pub fn progressive_layout(
    prefixes: &[Document],
    columns: &BTreeMap<usize, usize>,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
) -> Vec<LayoutRun> {
    let Some(last) = prefixes.last() else {
        return Vec::new();
    };
    let bands = sentence_bands(last, columns, config);
    let empty = Document::new(last.id.clone(), last.text.clone());
    let mut prior = LayoutState::default();
    let mut out = Vec::with_capacity(prefixes.len());
    for (k, doc) in prefixes.iter().enumerate() {
        let prev = if k == 0 { &empty } else { &prefixes[k - 1] };
        let order = doc.sentences.iter().map(|s| s.order).max().unwrap_or(k);
        let prep = prepare_sentence(prev, doc, &prior, order, &bands, config, metrics);
        let run = settle(doc, prep.state, &bands, config);
        let run = LayoutRun {
            state: discretize(&run.state, doc, config),
            ..run
        };
        prior = run.state.clone();
        out.push(run);
    }
    out
}

/// Atoms mentioned in the sentence and composites first introduced by it,
/// widened to the whole top-level group around each of them, with the
/// memberships and edges among them.
fn sentence_block(prev_doc: &Document, doc: &Document, sentence: &SentenceId) -> Document {
    let seeds: BTreeSet<NodeId> = doc
        .nodes
        .iter()
        .filter(|n| {
            if n.is_atomic() {
                n.spans.iter().any(|s| &s.sentence_id == sentence)
            } else {
                prev_doc.node(&n.id).is_none()
            }
        })
        .map(|n| n.id.clone())
        .collect();
    let mut keep = BTreeSet::new();
    for id in &seeds {
        for top in doc.ancestors(id).into_iter().chain([id.clone()]) {
            keep.extend(doc.descendants(&top));
            keep.insert(top);
        }
    }
    sub_document(doc, &keep)
}
