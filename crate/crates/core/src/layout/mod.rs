//! Geometry for nested graph documents.
//!
//! A level-by-level initial placement (layered, or polygon around the
//! longest cycle) seeds a force simulation with five forces: link springs,
//! inclusion toward the parent container, exclusion of non-members from
//! containers, pairwise overlap repulsion and a vertical pull toward the
//! sentence centerline. Composites move their contents along with them.
//! Results are snapped to a grid once the simulation settles.

mod cycle;
mod forces;
mod initial;
mod run;

use std::collections::{BTreeMap, BTreeSet};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph_model::{Document, NodeId};

pub use cycle::find_longest_cycle;
pub use forces::{compute_forces, step, ForceModel};
pub use initial::{initial_layout, nested_layout};
pub use run::{prepare_sentence, progressive_layout, run_layout, run_layout_with, settle, split_member_placement, starting_state, LayoutRun, SentencePrep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub ideal_link_length: f64,
    pub link_stiffness: f64,
    pub inclusion_strength: f64,
    pub exclusion_strength: f64,
    pub sentence_strength: f64,
    pub overlap_strength: f64,
    /// Distance at which the overlap force starts acting before rectangles
    /// actually touch.
    pub overlap_clearance: f64,
    pub grid_interval: f64,
    pub damping: f64,
    pub stabilize_epsilon: f64,
    pub max_iterations: usize,
    pub composite_padding: f64,
    /// Horizontal distance between sentence columns.
    pub column_width: f64,
    /// Reserved; the simulation itself is deterministic and draws no
    /// random numbers.
    pub seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            ideal_link_length: 120.0,
            link_stiffness: 0.05,
            inclusion_strength: 2.0,
            exclusion_strength: 4.0,
            sentence_strength: 1.5,
            overlap_strength: 6.0,
            overlap_clearance: 24.0,
            grid_interval: 8.0,
            damping: 0.85,
            stabilize_epsilon: 0.5,
            max_iterations: 2000,
            composite_padding: 12.0,
            column_width: 960.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("damping must lie strictly between 0 and 1")]
    Damping,
    #[error("max_iterations must be at least 1")]
    Iterations,
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let non_negative = [
            ("ideal_link_length", self.ideal_link_length),
            ("link_stiffness", self.link_stiffness),
            ("inclusion_strength", self.inclusion_strength),
            ("exclusion_strength", self.exclusion_strength),
            ("sentence_strength", self.sentence_strength),
            ("overlap_strength", self.overlap_strength),
            ("stabilize_epsilon", self.stabilize_epsilon),
            ("composite_padding", self.composite_padding),
            ("column_width", self.column_width),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(ConfigError::Negative(name));
            }
        }
        for (name, v) in [("grid_interval", self.grid_interval), ("overlap_clearance", self.overlap_clearance)] {
            if !(v > 0.0) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(ConfigError::Damping);
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::Iterations);
        }
        Ok(())
    }

    /// Vertical distance between consecutive sentence centerlines.
    pub fn row_height(&self) -> f64 {
        3.0 * self.ideal_link_length
    }
}

// ── Geometry ─────────────────────────────────────────────────────────

/// Axis-aligned rectangle given by its center and extent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_corners(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            x: (min_x + max_x) / 2.0,
            y: (min_y + max_y) / 2.0,
            w: max_x - min_x,
            h: max_y - min_y,
        }
    }

    pub fn min_x(&self) -> f64 {
        self.x - self.w / 2.0
    }

    pub fn max_x(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn min_y(&self) -> f64 {
        self.y - self.h / 2.0
    }

    pub fn max_y(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect::from_corners(
            self.min_x().min(other.min_x()),
            self.min_y().min(other.min_y()),
            self.max_x().max(other.max_x()),
            self.max_y().max(other.max_y()),
        )
    }

    pub fn expand(&self, by: f64) -> Rect {
        Rect::new(self.x, self.y, self.w + 2.0 * by, self.h + 2.0 * by)
    }

    /// Whether the point lies in the open interior.
    pub fn strictly_contains(&self, x: f64, y: f64) -> bool {
        x > self.min_x() && x < self.max_x() && y > self.min_y() && y < self.max_y()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.min_x() >= self.min_x()
            && other.max_x() <= self.max_x()
            && other.min_y() >= self.min_y()
            && other.max_y() <= self.max_y()
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.max_x().min(other.max_x()) - self.min_x().max(other.min_x());
        let h = self.max_y().min(other.max_y()) - self.min_y().max(other.min_y());
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Distance from the center to the boundary along unit direction (ux, uy).
    pub fn boundary_distance(&self, ux: f64, uy: f64) -> f64 {
        let tx = if ux.abs() > 1e-12 { self.w / 2.0 / ux.abs() } else { f64::INFINITY };
        let ty = if uy.abs() > 1e-12 { self.h / 2.0 / uy.abs() } else { f64::INFINITY };
        tx.min(ty)
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.min_x() - x).max(x - self.max_x()).max(0.0);
        let dy = (self.min_y() - y).max(y - self.max_y()).max(0.0);
        dx.hypot(dy)
    }
}

/// Supplies the rectangle size of an atomic label.
pub trait LabelMetrics {
    fn size(&self, label: &str) -> (f64, f64);
}

/// Fixed-advance estimate: 14 px per character plus 16 px, 28 px tall.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultMetrics;

impl LabelMetrics for DefaultMetrics {
    fn size(&self, label: &str) -> (f64, f64) {
        (14.0 * label.chars().count() as f64 + 16.0, 28.0)
    }
}

// ── State ────────────────────────────────────────────────────────────

/// Positions of atomic nodes, the pin set, and derived composite bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayoutState {
    pub atoms: BTreeMap<NodeId, Rect>,
    pub pinned: BTreeSet<NodeId>,
    pub composites: BTreeMap<NodeId, Rect>,
}

impl LayoutState {
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Rectangle of an atom or composite.
    pub fn rect(&self, id: &NodeId) -> Option<&Rect> {
        self.atoms.get(id).or_else(|| self.composites.get(id))
    }

    /// Recomputes every composite's bounds from its members.
    ///
    /// Composites with no placed descendant get no entry.
    pub fn derive_bounds(&mut self, doc: &Document, padding: f64) {
        self.composites = composite_bounds(doc, &self.atoms, padding);
    }

    /// Keeps only atoms that are atomic nodes of `doc` and rederives bounds.
    pub fn restrict_to(&mut self, doc: &Document, padding: f64) {
        let atomic: BTreeSet<&NodeId> = doc.nodes.iter().filter(|n| n.is_atomic()).map(|n| &n.id).collect();
        self.atoms.retain(|id, _| atomic.contains(id));
        self.pinned.retain(|id| atomic.contains(id));
        self.derive_bounds(doc, padding);
    }
}

pub(crate) fn composite_bounds(doc: &Document, atoms: &BTreeMap<NodeId, Rect>, padding: f64) -> BTreeMap<NodeId, Rect> {
    fn visit(
        id: &NodeId,
        doc: &Document,
        atoms: &BTreeMap<NodeId, Rect>,
        padding: f64,
        memo: &mut BTreeMap<NodeId, Option<Rect>>,
        active: &mut BTreeSet<NodeId>,
    ) -> Option<Rect> {
        if let Some(r) = atoms.get(id) {
            return Some(*r);
        }
        if let Some(r) = memo.get(id) {
            return *r;
        }
        if !active.insert(id.clone()) {
            return None;
        }
        let mut acc: Option<Rect> = None;
        for child in doc.children(id) {
            if let Some(r) = visit(child, doc, atoms, padding, memo, active) {
                acc = Some(match acc {
                    Some(a) => a.union(&r),
                    None => r,
                });
            }
        }
        active.remove(id);
        let out = acc.map(|r| r.expand(padding));
        memo.insert(id.clone(), out);
        out
    }
    let mut memo = BTreeMap::new();
    let mut active = BTreeSet::new();
    let mut out = BTreeMap::new();
    for node in doc.nodes.iter().filter(|n| n.is_composite()) {
        if let Some(r) = visit(&node.id, doc, atoms, padding, &mut memo, &mut active) {
            out.insert(node.id.clone(), r);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct Entry {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    pinned: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    composite: bool,
}

impl Serialize for LayoutState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map: BTreeMap<&NodeId, Entry> = BTreeMap::new();
        for (id, r) in &self.atoms {
            map.insert(
                id,
                Entry {
                    x: r.x,
                    y: r.y,
                    w: r.w,
                    h: r.h,
                    pinned: self.pinned.contains(id),
                    composite: false,
                },
            );
        }
        for (id, r) in &self.composites {
            map.insert(
                id,
                Entry {
                    x: r.x,
                    y: r.y,
                    w: r.w,
                    h: r.h,
                    pinned: false,
                    composite: true,
                },
            );
        }
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LayoutState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map: BTreeMap<NodeId, Entry> = BTreeMap::deserialize(deserializer)?;
        let mut state = LayoutState::default();
        for (id, e) in map {
            let r = Rect::new(e.x, e.y, e.w, e.h);
            if e.composite {
                if e.pinned {
                    return Err(D::Error::custom(format!("composite {id} cannot be pinned")));
                }
                state.composites.insert(id, r);
            } else {
                if e.pinned {
                    state.pinned.insert(id.clone());
                }
                state.atoms.insert(id, r);
            }
        }
        Ok(state)
    }
}

/// Snaps `v` to the nearest multiple of `grid`, ties toward negative infinity.
pub fn snap(v: f64, grid: f64) -> f64 {
    grid * (v / grid - 0.5).ceil() + 0.0
}

/// Snaps every unpinned atomic center to the grid and rederives bounds.
pub fn discretize(state: &LayoutState, doc: &Document, config: &LayoutConfig) -> LayoutState {
    let mut out = state.clone();
    for (id, r) in out.atoms.iter_mut() {
        if !state.pinned.contains(id) {
            r.x = snap(r.x, config.grid_interval);
            r.y = snap(r.y, config.grid_interval);
        }
    }
    out.derive_bounds(doc, config.composite_padding);
    out
}

/// Vertical centerline and column offset of one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub column: usize,
    pub x: f64,
    pub y: f64,
}

/// Places sentence `k` at column `columns[k]`, one row below the previous
/// sentence of the same column. Sentences missing from `columns` use
/// column 0.
pub fn sentence_bands(doc: &Document, columns: &BTreeMap<usize, usize>, config: &LayoutConfig) -> BTreeMap<usize, Band> {
    let mut orders: Vec<usize> = doc.sentences.iter().map(|s| s.order).collect();
    orders.sort_unstable();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for order in orders {
        let column = columns.get(&order).copied().unwrap_or(0);
        let row = rows.entry(column).or_insert(0);
        out.insert(
            order,
            Band {
                column,
                x: column as f64 * config.column_width,
                y: *row as f64 * config.row_height(),
            },
        );
        *row += 1;
    }
    out
}

/// Sentence whose band an atom belongs to: its latest mention.
pub fn home_sentence(doc: &Document, id: &NodeId) -> Option<usize> {
    let node = doc.node(id)?;
    node.spans.iter().filter_map(|s| doc.sentence_order(&s.sentence_id)).max()
}
