use std::collections::{BTreeMap, BTreeSet};

use nestgraph_core::graph_model::{Document, NodeId};
use nestgraph_core::layout::{snap, LayoutConfig, LayoutState};
use nestgraph_core::timeline::{replay, EventKind, SplitAction, Timeline};

/// Every geometric invariant a settled layout must satisfy, as readable
/// messages. `prior` supplies the positions pinned atoms must keep.
pub fn layout_violations(doc: &Document, state: &LayoutState, config: &LayoutConfig, prior: Option<&LayoutState>) -> Vec<String> {
    let mut out = Vec::new();
    for node in doc.nodes.iter().filter(|n| n.is_atomic()) {
        if !state.atoms.contains_key(&node.id) {
            out.push(format!("atom {} has no position", node.id));
        }
    }
    let atoms: Vec<_> = state.atoms.iter().collect();
    for (i, (a, ra)) in atoms.iter().enumerate() {
        for (b, rb) in &atoms[i + 1..] {
            let area = ra.intersection_area(rb);
            if area > 0.0 {
                out.push(format!("atoms {a} and {b} overlap by {area} px²"));
            }
        }
    }
    for (c, bounds) in &state.composites {
        let inside = doc.descendants(c);
        for (a, r) in &state.atoms {
            if !inside.contains(a) && bounds.strictly_contains(r.x, r.y) {
                out.push(format!("non-member {a} has its center inside composite {c}"));
            }
        }
        for member in doc.children(c) {
            if let Some(r) = state.rect(member) {
                if !bounds.contains_rect(r) {
                    out.push(format!("member {member} sticks out of composite {c}"));
                }
            }
        }
    }
    for (a, r) in &state.atoms {
        if state.pinned.contains(a) {
            continue;
        }
        let g = config.grid_interval;
        if (r.x / g).fract() != 0.0 || (r.y / g).fract() != 0.0 {
            out.push(format!("unpinned {a} at ({}, {}) is off the grid", r.x, r.y));
        }
    }
    if let Some(prior) = prior {
        for id in &state.pinned {
            match (prior.atoms.get(id), state.atoms.get(id)) {
                (Some(p), Some(s)) if p.x.to_bits() == s.x.to_bits() && p.y.to_bits() == s.y.to_bits() => {}
                (p, s) => out.push(format!("pinned {id} moved from {p:?} to {s:?}")),
            }
        }
    }
    out
}

/// Every ordering, coverage and replay property of a compiled timeline, as
/// readable messages. `snapshots` are the layouts the timeline was compiled
/// from, one per prefix.
pub fn timeline_violations(prefixes: &[Document], snapshots: &[LayoutState], timeline: &Timeline, config: &LayoutConfig) -> Vec<String> {
    let mut out = Vec::new();
    if timeline.blocks.len() != prefixes.len() {
        out.push(format!("{} blocks for {} prefixes", timeline.blocks.len(), prefixes.len()));
        return out;
    }
    if timeline.blocks.windows(2).any(|w| w[0].sentence_order >= w[1].sentence_order) {
        out.push("blocks are not in reading order".to_string());
    }

    let mut node_cover: BTreeMap<String, usize> = BTreeMap::new();
    let mut edge_cover: BTreeMap<String, usize> = BTreeMap::new();
    let mut visible: BTreeSet<String> = BTreeSet::new();
    for (k, (block, doc)) in timeline.blocks.iter().zip(prefixes).enumerate() {
        let at = |msg: String| format!("block {k}: {msg}");
        let kinds: Vec<EventKind> = block.events.iter().map(|e| e.kind).collect();
        if kinds.first() != Some(&EventKind::SentenceBegin) || kinds.last() != Some(&EventKind::SentenceEnd) {
            out.push(at("does not start with sentence_begin and end with sentence_end".into()));
        }
        for w in kinds.windows(2) {
            if w[0].rank() > w[1].rank() {
                out.push(at(format!("{:?} comes before {:?}", w[0], w[1])));
            }
        }
        for single in [EventKind::SentenceBegin, EventKind::SentenceEnd, EventKind::DimExisting] {
            if kinds.iter().filter(|x| **x == single).count() > 1 {
                out.push(at(format!("more than one {single:?}")));
            }
        }
        let has_dim = kinds.contains(&EventKind::DimExisting);
        if has_dim != (k > 0 && !prefixes[k - 1].nodes.is_empty()) {
            out.push(at("dim_existing present without prior elements, or missing with them".into()));
        }

        // Index at which each node became visible in this block.
        let mut shown_at: BTreeMap<String, usize> = BTreeMap::new();
        let depth = |id: &str| -> usize {
            fn d(doc: &Document, id: &NodeId, seen: usize) -> usize {
                if seen > doc.nodes.len() {
                    return 0;
                }
                doc.parents(id).into_iter().map(|p| d(doc, p, seen + 1) + 1).max().unwrap_or(0)
            }
            d(doc, &NodeId::new(id), 0)
        };
        let mut last_x: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, e) in block.events.iter().enumerate() {
            match e.kind {
                EventKind::NodeSplit => {
                    for s in &e.geometry.steps {
                        match s.action {
                            SplitAction::Place => {
                                *node_cover.entry(s.subjects[0].clone()).or_default() += 1;
                                visible.insert(s.subjects[0].clone());
                                shown_at.insert(s.subjects[0].clone(), i);
                            }
                            SplitAction::RevealEdge => {
                                *edge_cover.entry(s.subjects[0].clone()).or_default() += 1;
                                if let Some((a, b)) = &s.geometry.endpoints {
                                    if !visible.contains(a.as_str()) || !visible.contains(b.as_str()) {
                                        out.push(at(format!("split edge {} before its endpoints", s.subjects[0])));
                                    }
                                }
                            }
                            _ => {}
                        }
                    }
                }
                EventKind::RevealNode => {
                    let id = e.subjects[0].clone();
                    *node_cover.entry(id.clone()).or_default() += 1;
                    let dd = depth(&id);
                    let x = e.geometry.after.map_or(0.0, |r| snap(r.x, config.grid_interval));
                    if let Some(prev) = last_x.get(&dd) {
                        if x < *prev {
                            out.push(at(format!("{id} at depth {dd} revealed right of its predecessor")));
                        }
                    }
                    last_x.insert(dd, x);
                    visible.insert(id.clone());
                    shown_at.insert(id, i);
                }
                EventKind::RevealEdge => {
                    *edge_cover.entry(e.subjects[0].clone()).or_default() += 1;
                    match &e.geometry.endpoints {
                        Some((a, b)) if visible.contains(a.as_str()) && visible.contains(b.as_str()) => {}
                        _ => out.push(at(format!("edge {} revealed before its endpoints", e.subjects[0]))),
                    }
                }
                _ => {}
            }
        }
        for m in &doc.memberships {
            if let (Some(p), Some(c)) = (shown_at.get(m.parent.as_str()), shown_at.get(m.child.as_str())) {
                if p >= c {
                    out.push(at(format!("member {} revealed before composite {}", m.child, m.parent)));
                }
            }
        }
    }

    if let Some(last) = prefixes.last() {
        for n in &last.nodes {
            let c = node_cover.remove(n.id.as_str()).unwrap_or(0);
            if c != 1 {
                out.push(format!("node {} covered {c} times", n.id));
            }
        }
        for e in &last.edges {
            let c = edge_cover.remove(e.id.as_str()).unwrap_or(0);
            if c != 1 {
                out.push(format!("edge {} covered {c} times", e.id));
            }
        }
        for id in node_cover.keys().chain(edge_cover.keys()) {
            out.push(format!("{id} is revealed but not in the document"));
        }
    }
    if let Some(last) = snapshots.last() {
        if &replay(timeline) != last {
            out.push("replay does not reproduce the final layout".to_string());
        }
    }
    out
}
