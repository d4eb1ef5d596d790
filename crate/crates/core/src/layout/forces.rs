use std::collections::{BTreeMap, BTreeSet};

use super::{home_sentence, Band, LayoutConfig, LayoutState, Rect};
use crate::graph_model::{Document, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Elem {
    Atom(usize),
    Comp(usize),
}

/// Index structures for repeated force evaluation over one document.
#[derive(Debug, Clone)]
pub struct ForceModel {
    atoms: Vec<NodeId>,
    composites: Vec<NodeId>,
    /// Composite indices, members before the composites holding them.
    comp_order: Vec<usize>,
    children: Vec<Vec<Elem>>,
    atom_ancestors: Vec<Vec<usize>>,
    /// Descendant atoms of every composite.
    comp_atoms: Vec<BTreeSet<usize>>,
    edges: Vec<(Elem, Elem)>,
    centerline: Vec<Option<f64>>,
}

impl ForceModel {
    /// Builds the model for the atoms of `doc`; sentence centerlines come
    /// from `bands` keyed by sentence order.
    pub fn new(doc: &Document, bands: &BTreeMap<usize, Band>) -> Self {
        let mut atoms: Vec<NodeId> = doc.nodes.iter().filter(|n| n.is_atomic()).map(|n| n.id.clone()).collect();
        atoms.sort();
        let mut composites: Vec<NodeId> = doc.nodes.iter().filter(|n| n.is_composite()).map(|n| n.id.clone()).collect();
        composites.sort();
        let atom_ix: BTreeMap<&NodeId, usize> = atoms.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let comp_ix: BTreeMap<&NodeId, usize> = composites.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let elem = |id: &NodeId| {
            atom_ix
                .get(id)
                .map(|&i| Elem::Atom(i))
                .or_else(|| comp_ix.get(id).map(|&i| Elem::Comp(i)))
        };

        let mut children = vec![Vec::new(); composites.len()];
        let mut seen = BTreeSet::new();
        for m in &doc.memberships {
            let (Some(&p), Some(c)) = (comp_ix.get(&m.parent), elem(&m.child)) else {
                continue;
            };
            if !seen.insert((p, c)) {
                continue;
            }
            children[p].push(c);
        }
        for list in &mut children {
            list.sort();
        }

        // Post-order over the containment DAG puts members first.
        let mut comp_order = Vec::new();
        let mut state = vec![0u8; composites.len()];
        fn visit(c: usize, children: &[Vec<Elem>], state: &mut [u8], order: &mut Vec<usize>) {
            if state[c] != 0 {
                return;
            }
            state[c] = 1;
            for child in &children[c] {
                if let Elem::Comp(q) = child {
                    visit(*q, children, state, order);
                }
            }
            state[c] = 2;
            order.push(c);
        }
        for c in 0..composites.len() {
            visit(c, &children, &mut state, &mut comp_order);
        }

        let mut comp_atoms: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); composites.len()];
        for &c in &comp_order {
            let mut set = BTreeSet::new();
            for child in &children[c] {
                match child {
                    Elem::Atom(a) => {
                        set.insert(*a);
                    }
                    Elem::Comp(q) => set.extend(comp_atoms[*q].iter().copied()),
                }
            }
            comp_atoms[c] = set;
        }
        let mut atom_ancestors = vec![Vec::new(); atoms.len()];
        for (c, set) in comp_atoms.iter().enumerate() {
            for &a in set {
                atom_ancestors[a].push(c);
            }
        }

        // Springs between a composite and its own contents are meaningless.
        let contains = |outer: Elem, inner: Elem| match (outer, inner) {
            (Elem::Comp(c), Elem::Atom(a)) => comp_atoms[c].contains(&a),
            (Elem::Comp(c), Elem::Comp(q)) => {
                let mut stack = children[c].clone();
                while let Some(e) = stack.pop() {
                    if e == Elem::Comp(q) {
                        return true;
                    }
                    if let Elem::Comp(x) = e {
                        stack.extend(children[x].iter().copied());
                    }
                }
                false
            }
            _ => false,
        };
        let mut edges = Vec::new();
        for e in &doc.edges {
            let (Some(s), Some(t)) = (elem(&e.source), elem(&e.target)) else {
                continue;
            };
            if s == t || contains(s, t) || contains(t, s) {
                continue;
            }
            edges.push((s, t));
        }

        let centerline = atoms
            .iter()
            .map(|id| home_sentence(doc, id).and_then(|k| bands.get(&k)).map(|b| b.y))
            .collect();

        Self {
            atoms,
            composites,
            comp_order,
            children,
            atom_ancestors,
            comp_atoms,
            edges,
            centerline,
        }
    }

    pub fn atom_ids(&self) -> &[NodeId] {
        &self.atoms
    }

    fn bounds(&self, rects: &[Rect], padding: f64) -> Vec<Option<Rect>> {
        let mut out: Vec<Option<Rect>> = vec![None; self.composites.len()];
        for &c in &self.comp_order {
            let mut acc: Option<Rect> = None;
            for child in &self.children[c] {
                let r = match child {
                    Elem::Atom(a) => Some(rects[*a]),
                    Elem::Comp(q) => out[*q],
                };
                if let Some(r) = r {
                    acc = Some(acc.map_or(r, |x| x.union(&r)));
                }
            }
            out[c] = acc.map(|r| r.expand(padding));
        }
        out
    }

    /// Own force per atom and total force per composite, the latter being
    /// the mean force of its direct members. Forces acting on a composite as
    /// a whole (springs, the reaction to exclusion) are shared equally among
    /// its descendant atoms. Pinned atoms get zero.
    fn forces(&self, rects: &[Rect], pinned: &[bool], config: &LayoutConfig) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let bounds = self.bounds(rects, config.composite_padding);
        let mut fa = vec![(0.0, 0.0); self.atoms.len()];
        let rect_of = |e: Elem| match e {
            Elem::Atom(a) => Some(rects[a]),
            Elem::Comp(c) => bounds[c],
        };
        let add = |fa: &mut [(f64, f64)], e: Elem, fx: f64, fy: f64| match e {
            Elem::Atom(a) => {
                fa[a].0 += fx;
                fa[a].1 += fy;
            }
            Elem::Comp(c) => {
                let n = self.comp_atoms[c].len() as f64;
                for &a in &self.comp_atoms[c] {
                    fa[a].0 += fx / n;
                    fa[a].1 += fy / n;
                }
            }
        };

        // Link springs on the gap between rectangle boundaries.
        for &(s, t) in &self.edges {
            let (Some(rs), Some(rt)) = (rect_of(s), rect_of(t)) else {
                continue;
            };
            let (dx, dy) = (rt.x - rs.x, rt.y - rs.y);
            let dist = dx.hypot(dy);
            if dist < 1e-9 {
                continue;
            }
            let (ux, uy) = (dx / dist, dy / dist);
            let gap = dist - rs.boundary_distance(ux, uy) - rt.boundary_distance(ux, uy);
            let cap = config.link_stiffness * config.ideal_link_length;
            let f = (config.link_stiffness * (gap - config.ideal_link_length)).clamp(-cap, cap);
            add(&mut fa, s, f * ux, f * uy);
            add(&mut fa, t, -f * ux, -f * uy);
        }

        // Inclusion toward the parent's center, easing off within one grid
        // step, minus its mean over the members so the composite as a whole
        // is not dragged along.
        let grid = config.grid_interval;
        for (p, members) in self.children.iter().enumerate() {
            let Some(pb) = bounds[p] else { continue };
            let pulls: Vec<(Elem, f64, f64)> = members
                .iter()
                .filter_map(|&m| {
                    let r = rect_of(m)?;
                    let (dx, dy) = (pb.x - r.x, pb.y - r.y);
                    let dist = dx.hypot(dy);
                    if dist < 1e-9 {
                        return Some((m, 0.0, 0.0));
                    }
                    let mag = config.inclusion_strength * (dist / grid).min(1.0);
                    Some((m, mag * dx / dist, mag * dy / dist))
                })
                .collect();
            let n = pulls.len().max(1) as f64;
            let mx = pulls.iter().map(|p| p.1).sum::<f64>() / n;
            let my = pulls.iter().map(|p| p.2).sum::<f64>() / n;
            for (m, fx, fy) in pulls {
                add(&mut fa, m, fx - mx, fy - my);
            }
        }

        // Exclusion of non-member atoms from the bounds grown by a margin of
        // three grid steps: proportional to how far the center reaches into
        // that zone, reaching exclusion_strength two grid steps in and capped
        // at twice that, then growing steeply once the center is within one
        // grid step of the bounds. The composite takes the reaction.
        let margin = 3.0 * grid;
        let stiffness = config.exclusion_strength / (2.0 * grid);
        let cap = 2.0 * config.exclusion_strength;
        for (p, pb) in bounds.iter().enumerate() {
            let Some(pb) = pb else { continue };
            let zone = pb.expand(margin);
            for (a, r) in rects.iter().enumerate() {
                if self.comp_atoms[p].contains(&a) || !zone.strictly_contains(r.x, r.y) {
                    continue;
                }
                let ((ux, uy), depth) = exit_direction(&zone, r.x, r.y);
                let inside = (depth - margin + grid).max(0.0) / grid;
                let mag = (stiffness * depth).min(cap) + 4.0 * config.exclusion_strength * inside;
                add(&mut fa, Elem::Atom(a), mag * ux, mag * uy);
                add(&mut fa, Elem::Comp(p), -mag * ux, -mag * uy);
            }
        }

        // Overlap repulsion between atoms whose rectangles, grown by the
        // clearance, intersect. Proportional to the penetration, steeper once
        // the real gap is under one grid step, and directed along the center
        // offset measured in units of the combined extents.
        let clearance = config.overlap_clearance;
        for i in 0..rects.len() {
            for j in i + 1..rects.len() {
                let (a, b) = (rects[i], rects[j]);
                let (dx, dy) = (b.x - a.x, b.y - a.y);
                let px = (a.w + b.w) / 2.0 + clearance - dx.abs();
                let py = (a.h + b.h) / 2.0 + clearance - dy.abs();
                if px <= 0.0 || py <= 0.0 {
                    continue;
                }
                let pen = px.min(py);
                let close = (pen - clearance + grid).max(0.0) / grid;
                let mag = config.overlap_strength * (pen / clearance + close);
                let (nx, ny) = (dx / (a.w + b.w), dy / (a.h + b.h));
                let norm = nx.hypot(ny);
                let (ux, uy) = if norm < 1e-12 { (1.0, 0.0) } else { (nx / norm, ny / norm) };
                let (fx, fy) = (mag * ux, mag * uy);
                fa[i].0 -= fx;
                fa[i].1 -= fy;
                fa[j].0 += fx;
                fa[j].1 += fy;
            }
        }

        // Sentence pull toward the centerline, linear within one grid step.
        for (a, r) in rects.iter().enumerate() {
            if let Some(y) = self.centerline[a] {
                fa[a].1 += config.sentence_strength * ((y - r.y) / grid).clamp(-1.0, 1.0);
            }
        }

        for (a, p) in pinned.iter().enumerate() {
            if *p {
                fa[a] = (0.0, 0.0);
            }
        }
        let mut fc = vec![(0.0, 0.0); self.composites.len()];
        for &c in &self.comp_order {
            let members = &self.children[c];
            if members.is_empty() {
                continue;
            }
            let (mut sx, mut sy) = (0.0, 0.0);
            for m in members {
                let f = match m {
                    Elem::Atom(a) => fa[*a],
                    Elem::Comp(q) => fc[*q],
                };
                sx += f.0;
                sy += f.1;
            }
            let n = members.len() as f64;
            fc[c] = (sx / n, sy / n);
        }
        (fa, fc)
    }

    /// Per-atom displacement: damping times its own force plus the force of
    /// every composite containing it. Zero for pinned atoms.
    fn displacements(&self, fa: &[(f64, f64)], fc: &[(f64, f64)], pinned: &[bool], damping: f64) -> Vec<(f64, f64)> {
        (0..self.atoms.len())
            .map(|a| {
                if pinned[a] {
                    return (0.0, 0.0);
                }
                let (mut x, mut y) = fa[a];
                for &c in &self.atom_ancestors[a] {
                    x += fc[c].0;
                    y += fc[c].1;
                }
                (damping * x, damping * y)
            })
            .collect()
    }

    pub(crate) fn unpack(&self, state: &LayoutState) -> (Vec<Rect>, Vec<bool>) {
        let rects = self
            .atoms
            .iter()
            .map(|id| state.atoms.get(id).copied().unwrap_or(Rect::new(0.0, 0.0, 0.0, 0.0)))
            .collect();
        let pinned = self.atoms.iter().map(|id| state.pinned.contains(id)).collect();
        (rects, pinned)
    }

    /// One simulation step on packed rectangles; returns the largest move.
    pub(crate) fn advance(&self, rects: &mut [Rect], pinned: &[bool], config: &LayoutConfig) -> f64 {
        let (fa, fc) = self.forces(rects, pinned, config);
        let moves = self.displacements(&fa, &fc, pinned, config.damping);
        let mut largest: f64 = 0.0;
        for (r, (dx, dy)) in rects.iter_mut().zip(moves) {
            r.x += dx;
            r.y += dy;
            largest = largest.max(dx.hypot(dy));
        }
        largest
    }
}

/// Outward normal of the side of `bounds` nearest to an interior point, and
/// the distance to it. Ties go right, left, bottom, top, so the exact center
/// of a square exits along +x.
fn exit_direction(bounds: &Rect, x: f64, y: f64) -> ((f64, f64), f64) {
    let sides = [
        (bounds.max_x() - x, (1.0, 0.0)),
        (x - bounds.min_x(), (-1.0, 0.0)),
        (bounds.max_y() - y, (0.0, 1.0)),
        (y - bounds.min_y(), (0.0, -1.0)),
    ];
    let mut best = sides[0];
    for side in &sides[1..] {
        if side.0 < best.0 {
            best = *side;
        }
    }
    (best.1, best.0)
}

/// Net force per node: the five contributions for every atom (zero when
/// pinned) and, for every composite, the mean of its direct members' forces.
pub fn compute_forces(
    state: &LayoutState,
    doc: &Document,
    bands: &BTreeMap<usize, Band>,
    config: &LayoutConfig,
) -> BTreeMap<NodeId, (f64, f64)> {
    let model = ForceModel::new(doc, bands);
    let (rects, pinned) = model.unpack(state);
    let (fa, fc) = model.forces(&rects, &pinned, config);
    let mut out = BTreeMap::new();
    for (id, f) in model.atoms.iter().zip(fa) {
        out.insert(id.clone(), f);
    }
    for (id, f) in model.composites.iter().zip(fc) {
        out.insert(id.clone(), f);
    }
    out
}

/// Moves every unpinned atom by damping times its own force plus the forces
/// of all composites containing it.
pub fn step(state: &LayoutState, forces: &BTreeMap<NodeId, (f64, f64)>, doc: &Document, config: &LayoutConfig) -> LayoutState {
    let mut out = state.clone();
    for (id, r) in out.atoms.iter_mut() {
        if state.pinned.contains(id) {
            continue;
        }
        let (mut fx, mut fy) = forces.get(id).copied().unwrap_or((0.0, 0.0));
        for ancestor in doc.ancestors(id) {
            if let Some(f) = forces.get(&ancestor) {
                fx += f.0;
                fy += f.1;
            }
        }
        r.x += config.damping * fx;
        r.y += config.damping * fy;
    }
    out.derive_bounds(doc, config.composite_padding);
    out
}
