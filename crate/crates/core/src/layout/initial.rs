use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;

use super::cycle::longest_cycle;
use super::{LabelMetrics, LayoutConfig, Rect};
use crate::graph_model::{level_subgraph, Document, LevelParent, LevelSubgraph, NodeId};

/// Centers for the nodes of one nesting level, given their extents.
///
/// Acyclic levels get a longest-path layering, one column per layer from
/// left to right with `ideal_link_length` between neighboring columns, and
/// nodes stacked top to bottom by id. Levels with a cycle put their longest
/// cycle on a regular polygon of circumradius `ideal_link_length`, starting
/// at the left; other nodes attached to the cycle go to columns on either
/// side by hop distance, and unattached ones are layered below.
pub fn initial_layout(
    subgraph: &LevelSubgraph,
    sizes: &BTreeMap<NodeId, (f64, f64)>,
    config: &LayoutConfig,
) -> BTreeMap<NodeId, (f64, f64)> {
    let ids: Vec<NodeId> = subgraph.node_ids().into_iter().collect();
    let edges: Vec<(NodeId, NodeId)> = subgraph
        .edges
        .iter()
        .map(|e| (e.source.clone(), e.target.clone()))
        .collect();
    let size = |id: &NodeId| sizes.get(id).copied().unwrap_or((0.0, 0.0));
    let cycle = longest_cycle(&ids, &edges);
    if cycle.is_empty() {
        return layered(&ids, &edges, &size, config);
    }
    polygon(&ids, &edges, &cycle, &size, config)
}

fn stack(column: &[NodeId], x: f64, size: &dyn Fn(&NodeId) -> (f64, f64), gap: f64, out: &mut BTreeMap<NodeId, (f64, f64)>) {
    let total: f64 = column.iter().map(|id| size(id).1).sum::<f64>() + gap * column.len().saturating_sub(1) as f64;
    let mut y = -total / 2.0;
    for id in column {
        let h = size(id).1;
        out.insert(id.clone(), (x, y + h / 2.0));
        y += h + gap;
    }
}

fn vertical_gap(config: &LayoutConfig) -> f64 {
    config.ideal_link_length / 4.0
}

/// Longest-path layers after dropping DFS back edges (visited in id order).
fn layers(ids: &[NodeId], edges: &[(NodeId, NodeId)]) -> BTreeMap<NodeId, usize> {
    let set: BTreeSet<&NodeId> = ids.iter().collect();
    let mut adj: BTreeMap<&NodeId, BTreeSet<&NodeId>> = ids.iter().map(|id| (id, BTreeSet::new())).collect();
    for (s, t) in edges {
        if s != t && set.contains(s) && set.contains(t) {
            adj.get_mut(s).unwrap().insert(t);
        }
    }
    // Iterative DFS; state 1 = on stack, 2 = finished.
    let mut state: BTreeMap<&NodeId, u8> = BTreeMap::new();
    let mut dag: BTreeMap<&NodeId, Vec<&NodeId>> = ids.iter().map(|id| (id, Vec::new())).collect();
    for root in ids {
        if state.contains_key(root) {
            continue;
        }
        let mut stack: Vec<(&NodeId, Vec<&NodeId>)> = vec![(root, adj[root].iter().rev().copied().collect())];
        state.insert(root, 1);
        while let Some((node, pending)) = stack.last_mut() {
            let node = *node;
            match pending.pop() {
                Some(next) => match state.get(next) {
                    Some(1) => {}
                    Some(_) => dag.get_mut(node).unwrap().push(next),
                    None => {
                        dag.get_mut(node).unwrap().push(next);
                        state.insert(next, 1);
                        stack.push((next, adj[next].iter().rev().copied().collect()));
                    }
                },
                None => {
                    state.insert(node, 2);
                    stack.pop();
                }
            }
        }
    }
    let mut indegree: BTreeMap<&NodeId, usize> = ids.iter().map(|id| (id, 0)).collect();
    for targets in dag.values() {
        for t in targets {
            *indegree.get_mut(t).unwrap() += 1;
        }
    }
    let mut ready: BTreeSet<&NodeId> = indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    let mut layer: BTreeMap<NodeId, usize> = BTreeMap::new();
    while let Some(node) = ready.pop_first() {
        let l = *layer.entry(node.clone()).or_insert(0);
        for t in &dag[node] {
            let entry = layer.entry((*t).clone()).or_insert(0);
            *entry = (*entry).max(l + 1);
            let d = indegree.get_mut(t).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(t);
            }
        }
    }
    layer
}

/// Weakly connected components, each listed in id order, ordered by their
/// smallest id.
fn components(ids: &[NodeId], edges: &[(NodeId, NodeId)]) -> Vec<Vec<NodeId>> {
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut root: Vec<usize> = (0..ids.len()).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for (s, t) in edges {
        if let (Some(&a), Some(&b)) = (index.get(s), index.get(t)) {
            let (ra, rb) = (find(&mut root, a), find(&mut root, b));
            root[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for i in 0..ids.len() {
        let r = find(&mut root, i);
        groups.entry(r).or_default().push(ids[i].clone());
    }
    groups.into_values().collect()
}

const SHELF_ASPECT: f64 = 3.0;

/// Layered layout per weakly connected component. Components are packed
/// into shelves read left to right, top to bottom, with shelves about three
/// times as wide as the block is tall; the block is centered on the origin.
fn layered(
    ids: &[NodeId],
    edges: &[(NodeId, NodeId)],
    size: &dyn Fn(&NodeId) -> (f64, f64),
    config: &LayoutConfig,
) -> BTreeMap<NodeId, (f64, f64)> {
    let mut sorted = ids.to_vec();
    sorted.sort();
    let gap = vertical_gap(config);
    let parts: Vec<(BTreeMap<NodeId, (f64, f64)>, Rect)> = components(&sorted, edges)
        .into_iter()
        .map(|component| {
            let part = layered_component(&component, edges, size, config);
            let bounds = part
                .iter()
                .map(|(id, p)| {
                    let (w, h) = size(id);
                    Rect::new(p.0, p.1, w, h)
                })
                .reduce(|a, b| a.union(&b))
                .unwrap_or_default();
            (part, bounds)
        })
        .collect();
    let area: f64 = parts.iter().map(|(_, b)| (b.w + gap) * (b.h + gap)).sum();
    let widest = parts.iter().map(|(_, b)| b.w).fold(0.0, f64::max);
    let shelf_width = widest.max((SHELF_ASPECT * area).sqrt());

    let mut out = BTreeMap::new();
    let (mut x, mut y, mut shelf_height) = (0.0, 0.0, 0.0_f64);
    for (part, bounds) in parts {
        if x > 0.0 && x + bounds.w > shelf_width {
            x = 0.0;
            y += shelf_height + gap;
            shelf_height = 0.0;
        }
        let (dx, dy) = (x - bounds.min_x(), y - bounds.min_y());
        for (id, (px, py)) in part {
            out.insert(id, (px + dx, py + dy));
        }
        x += bounds.w + gap;
        shelf_height = shelf_height.max(bounds.h);
    }
    let block = out
        .iter()
        .map(|(id, p)| {
            let (w, h) = size(id);
            Rect::new(p.0, p.1, w, h)
        })
        .reduce(|a, b| a.union(&b));
    if let Some(b) = block {
        for p in out.values_mut() {
            p.0 -= b.x;
            p.1 -= b.y;
        }
    }
    out
}

fn layered_component(
    ids: &[NodeId],
    edges: &[(NodeId, NodeId)],
    size: &dyn Fn(&NodeId) -> (f64, f64),
    config: &LayoutConfig,
) -> BTreeMap<NodeId, (f64, f64)> {
    let layer = layers(ids, edges);
    let mut columns: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for id in ids {
        columns.entry(layer[id]).or_default().push(id.clone());
    }
    let mut out = BTreeMap::new();
    let mut x = 0.0;
    let mut previous_half: Option<f64> = None;
    for column in columns.values() {
        let half = column.iter().map(|id| size(id).0).fold(0.0, f64::max) / 2.0;
        if let Some(p) = previous_half {
            x += p + config.ideal_link_length + half;
        }
        stack(column, x, size, vertical_gap(config), &mut out);
        previous_half = Some(half);
    }
    out
}

fn polygon(
    ids: &[NodeId],
    edges: &[(NodeId, NodeId)],
    cycle: &[NodeId],
    size: &dyn Fn(&NodeId) -> (f64, f64),
    config: &LayoutConfig,
) -> BTreeMap<NodeId, (f64, f64)> {
    let r = config.ideal_link_length;
    let k = cycle.len() as f64;
    let mut out = BTreeMap::new();
    for (i, id) in cycle.iter().enumerate() {
        let angle = PI + 2.0 * PI * i as f64 / k;
        out.insert(id.clone(), (r * angle.cos(), r * angle.sin()));
    }

    // Breadth-first from the cycle over undirected adjacency; the side is
    // right when reached along an outgoing edge, left otherwise.
    let mut neighbors: BTreeMap<&NodeId, BTreeSet<(&NodeId, i8)>> = BTreeMap::new();
    for (s, t) in edges {
        if s != t {
            neighbors.entry(s).or_default().insert((t, 1));
            neighbors.entry(t).or_default().insert((s, -1));
        }
    }
    let mut placed: BTreeMap<&NodeId, (usize, i8)> = cycle.iter().map(|id| (id, (0, 0))).collect();
    let mut queue: VecDeque<&NodeId> = cycle.iter().collect();
    while let Some(node) = queue.pop_front() {
        let (hop, side) = placed[node];
        for (next, dir) in neighbors.get(node).into_iter().flatten() {
            if placed.contains_key(next) {
                continue;
            }
            let next_side = if side == 0 { *dir } else { side };
            placed.insert(next, (hop + 1, next_side));
            queue.push_back(next);
        }
    }
    let widest = ids.iter().map(|id| size(id).0).fold(0.0, f64::max);
    let mut columns: BTreeMap<(i8, usize), Vec<NodeId>> = BTreeMap::new();
    for (id, (hop, side)) in &placed {
        if *hop > 0 {
            columns.entry((*side, *hop)).or_default().push((*id).clone());
        }
    }
    for ((side, hop), column) in &columns {
        let x = f64::from(*side) * (r + *hop as f64 * (config.ideal_link_length + widest));
        stack(column, x, size, vertical_gap(config), &mut out);
    }

    let rest: Vec<NodeId> = ids.iter().filter(|id| !placed.contains_key(id)).cloned().collect();
    if !rest.is_empty() {
        let block = layered(&rest, edges, size, config);
        let tallest = ids.iter().map(|id| size(id).1).fold(0.0, f64::max);
        let top = block.iter().map(|(id, p)| p.1 - size(id).1 / 2.0).fold(f64::INFINITY, f64::min);
        let left = block.iter().map(|(id, p)| p.0 - size(id).0 / 2.0).fold(f64::INFINITY, f64::min);
        let dy = r + tallest + vertical_gap(config) - top;
        let dx = -r - left;
        for (id, (x, y)) in block {
            out.insert(id, (x + dx, y + dy));
        }
    }
    out
}

/// Atom rectangles from laying out one level and, recursively, every
/// composite inside it. `bounds` covers the level's top members.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NestedPlacement {
    pub atoms: BTreeMap<NodeId, Rect>,
    pub bounds: Option<Rect>,
}

impl NestedPlacement {
    /// Moves everything so that the bounds are centered on (x, y).
    pub fn centered_at(mut self, x: f64, y: f64) -> Self {
        if let Some(b) = self.bounds {
            let (dx, dy) = (x - b.x, y - b.y);
            for r in self.atoms.values_mut() {
                r.x += dx;
                r.y += dy;
            }
            self.bounds = Some(Rect::new(x, y, b.w, b.h));
        }
        self
    }
}

/// Recursive initial layout of `parent`'s level.
///
/// A composite is sized by its laid-out contents plus padding. An atom
/// shared by several composites keeps the first position it receives
/// (composites visited in id order).
pub fn nested_layout(doc: &Document, parent: &LevelParent, config: &LayoutConfig, metrics: &dyn LabelMetrics) -> NestedPlacement {
    let mut memo = BTreeMap::new();
    let mut placed = BTreeMap::new();
    let bounds = level(doc, parent, config, metrics, &mut memo, (0.0, 0.0), &mut placed);
    NestedPlacement { atoms: placed, bounds }
}

/// Relative content of a composite: atom centers and the unpadded bounds.
type Contents = (BTreeMap<NodeId, (f64, f64)>, Option<Rect>);

fn contents(
    doc: &Document,
    id: &NodeId,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
    memo: &mut BTreeMap<NodeId, Contents>,
) -> Contents {
    if let Some(c) = memo.get(id) {
        return c.clone();
    }
    let mut inner = BTreeMap::new();
    let bounds = level(doc, &LevelParent::Composite(id.clone()), config, metrics, memo, (0.0, 0.0), &mut inner);
    let relative = inner.into_iter().map(|(k, r)| (k, (r.x, r.y))).collect();
    memo.insert(id.clone(), (relative, bounds));
    memo[id].clone()
}

fn level(
    doc: &Document,
    parent: &LevelParent,
    config: &LayoutConfig,
    metrics: &dyn LabelMetrics,
    memo: &mut BTreeMap<NodeId, Contents>,
    origin: (f64, f64),
    placed: &mut BTreeMap<NodeId, Rect>,
) -> Option<Rect> {
    let Ok(sub) = level_subgraph(doc, parent) else {
        return None;
    };
    if sub.nodes.is_empty() {
        return None;
    }
    let mut sizes = BTreeMap::new();
    let mut inner: BTreeMap<NodeId, Contents> = BTreeMap::new();
    for node in &sub.nodes {
        if node.is_atomic() {
            sizes.insert(node.id.clone(), metrics.size(&node.label));
        } else {
            let c = contents(doc, &node.id, config, metrics, memo);
            let (w, h) = c.1.map_or((0.0, 0.0), |b| (b.w, b.h));
            sizes.insert(
                node.id.clone(),
                (w + 2.0 * config.composite_padding, h + 2.0 * config.composite_padding),
            );
            inner.insert(node.id.clone(), c);
        }
    }
    let positions = initial_layout(&sub, &sizes, config);
    let mut bounds: Option<Rect> = None;
    for node in &sub.nodes {
        let (x, y) = positions[&node.id];
        let (x, y) = (x + origin.0, y + origin.1);
        let (w, h) = sizes[&node.id];
        let rect = Rect::new(x, y, w, h);
        bounds = Some(bounds.map_or(rect, |b| b.union(&rect)));
        if node.is_atomic() {
            placed.entry(node.id.clone()).or_insert(rect);
        } else if let Some((atoms, Some(b))) = inner.get(&node.id) {
            for (atom, (ax, ay)) in atoms {
                let (w, h) = doc.node(atom).map_or((0.0, 0.0), |n| metrics.size(&n.label));
                placed
                    .entry(atom.clone())
                    .or_insert(Rect::new(x + ax - b.x, y + ay - b.y, w, h));
            }
        }
    }
    bounds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{Edge, Membership, Node, NodeKind};
    use crate::layout::DefaultMetrics;

    fn node(id: &str, kind: NodeKind) -> Node {
        Node {
            id: id.into(),
            label: id.to_string(),
            kind,
            spans: vec![],
            first_sentence: 0,
        }
    }

    fn edge(i: usize, s: &str, t: &str) -> Edge {
        Edge {
            id: crate::graph_model::EdgeId::from_index(i),
            source: s.into(),
            target: t.into(),
            label: "r".into(),
            sentence_id: "s0000".into(),
        }
    }

    fn level_of(ids: &[&str], pairs: &[(&str, &str)]) -> LevelSubgraph {
        LevelSubgraph {
            nodes: ids.iter().map(|id| node(id, NodeKind::Atomic)).collect(),
            edges: pairs.iter().enumerate().map(|(i, (s, t))| edge(i, s, t)).collect(),
        }
    }

    fn uniform(ids: &[&str]) -> BTreeMap<NodeId, (f64, f64)> {
        ids.iter().map(|id| (NodeId::from(*id), (40.0, 28.0))).collect()
    }

    #[test]
    fn single_node_at_origin() {
        let p = initial_layout(&level_of(&["a"], &[]), &uniform(&["a"]), &LayoutConfig::default());
        assert_eq!(p[&NodeId::from("a")], (0.0, 0.0));
    }

    #[test]
    fn chain_is_left_to_right_with_equal_spacing() {
        let ids = ["a", "b", "c"];
        let p = initial_layout(&level_of(&ids, &[("a", "b"), ("b", "c")]), &uniform(&ids), &LayoutConfig::default());
        let xs: Vec<f64> = ids.iter().map(|id| p[&NodeId::from(*id)].0).collect();
        assert!(xs[0] < xs[1] && xs[1] < xs[2]);
        assert_eq!(xs[1] - xs[0], xs[2] - xs[1]);
        // Gap between neighboring rectangles is the ideal length.
        assert_eq!(xs[1] - xs[0] - 40.0, 120.0);
        assert!(ids.iter().all(|id| p[&NodeId::from(*id)].1 == 0.0));
    }

    #[test]
    fn layer_members_stack_by_id() {
        let ids = ["a", "b", "c"];
        let p = initial_layout(&level_of(&ids, &[("a", "c"), ("a", "b")]), &uniform(&ids), &LayoutConfig::default());
        let (b, c) = (p[&NodeId::from("b")], p[&NodeId::from("c")]);
        assert_eq!(b.0, c.0);
        assert!(b.1 < c.1);
        assert_eq!(b.1, -c.1);
    }

    #[test]
    fn triangle_is_equilateral() {
        let ids = ["a", "b", "c"];
        let p = initial_layout(&level_of(&ids, &[("a", "b"), ("b", "c"), ("c", "a")]), &uniform(&ids), &LayoutConfig::default());
        let d = |u: &str, v: &str| {
            let (a, b) = (p[&NodeId::from(u)], p[&NodeId::from(v)]);
            (a.0 - b.0).hypot(a.1 - b.1)
        };
        assert!((d("a", "b") - d("b", "c")).abs() < 1e-6);
        assert!((d("b", "c") - d("c", "a")).abs() < 1e-6);
        assert!((p[&NodeId::from("a")].0 + 120.0).abs() < 1e-9);
    }

    #[test]
    fn cycle_attachments_and_detached_block() {
        let ids = ["a", "b", "c", "d", "e", "f"];
        let p = initial_layout(
            &level_of(&ids, &[("a", "b"), ("b", "a"), ("b", "c"), ("d", "a"), ("e", "f")]),
            &uniform(&ids),
            &LayoutConfig::default(),
        );
        let at = |id: &str| p[&NodeId::from(id)];
        assert!(at("c").0 > at("b").0);
        assert!(at("d").0 < at("a").0);
        assert!(at("e").1 > 120.0 && at("f").1 > 120.0);
        assert!(at("e").0 < at("f").0);
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn nested_layout_contains_members() {
        let mut doc = Document::new("d", "");
        doc.nodes = vec![
            node("a", NodeKind::Atomic),
            node("b", NodeKind::Atomic),
            node("c", NodeKind::Composite),
            node("x", NodeKind::Atomic),
        ];
        doc.memberships = vec![Membership::new("c", "a"), Membership::new("c", "b")];
        doc.edges = vec![edge(0, "a", "b"), edge(1, "x", "c")];
        let config = LayoutConfig::default();
        let placement = nested_layout(&doc, &LevelParent::Root, &config, &DefaultMetrics);
        assert_eq!(placement.atoms.len(), 3);
        let (a, b, x) = (
            placement.atoms[&NodeId::from("a")],
            placement.atoms[&NodeId::from("b")],
            placement.atoms[&NodeId::from("x")],
        );
        assert!(a.x < b.x);
        assert!(x.max_x() < a.min_x());
        let centered = nested_layout(&doc, &LevelParent::Composite("c".into()), &config, &DefaultMetrics).centered_at(100.0, 50.0);
        let bounds = centered.bounds.unwrap();
        assert_eq!((bounds.x, bounds.y), (100.0, 50.0));
        assert!(centered.atoms.values().all(|r| bounds.contains_rect(r)));
    }
}
