//! Static SVG snapshot of a bundle after its first `k` sentences.
//!
//! Every drawn graph element carries a `data-id`: one `<g class="atom">` per
//! atomic node, a `<rect class="container">` plus a
//! `<text class="container-label">` per composite, and one
//! `<g class="edge">` per edge. The only other elements at the top level are
//! the two marked `class="chrome"`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use nestgraph_core::graph_model::{Document, NodeId};
use nestgraph_core::layout::Rect;

use crate::bundle::DocumentBundle;

const EMPTY_WIDTH: f64 = 320.0;
const EMPTY_HEIGHT: f64 = 200.0;
const MARGIN: f64 = 48.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SvgError {
    #[error("prefix {k} out of range: the document has {sentences} sentences")]
    PrefixOutOfRange { k: usize, sentences: usize },
}

/// Number with at most two decimals and no trailing zeros.
fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn header(out: &mut String, x: f64, y: f64, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="{x} {y} {w} {h}" font-family="sans-serif" font-size="14">"#,
        w = num(w),
        h = num(h),
        x = num(x),
        y = num(y),
    );
    out.push_str(r##"<defs class="chrome"><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="#555555"/></marker></defs>"##);
    out.push('\n');
    let _ = writeln!(
        out,
        r##"<rect class="chrome" x="{}" y="{}" width="{}" height="{}" fill="#ffffff"/>"##,
        num(x),
        num(y),
        num(w),
        num(h)
    );
}

/// Point where the ray from the center of `r` toward `(tx, ty)` leaves `r`.
fn exit_point(r: &Rect, tx: f64, ty: f64) -> (f64, f64) {
    let (dx, dy) = (tx - r.x, ty - r.y);
    let sx = if dx == 0.0 { f64::INFINITY } else { r.w / 2.0 / dx.abs() };
    let sy = if dy == 0.0 { f64::INFINITY } else { r.h / 2.0 / dy.abs() };
    let s = sx.min(sy);
    if !s.is_finite() || s >= 1.0 {
        return (r.x, r.y);
    }
    (r.x + dx * s, r.y + dy * s)
}

fn depth(doc: &Document, id: &NodeId, memo: &mut BTreeMap<NodeId, usize>) -> usize {
    if let Some(d) = memo.get(id) {
        return *d;
    }
    let parents: Vec<NodeId> = doc.parents(id).into_iter().cloned().collect();
    let d = parents.iter().map(|p| depth(doc, p, memo) + 1).max().unwrap_or(0);
    memo.insert(id.clone(), d);
    d
}

/// Renders the graph as it stands after `k` sentences. `k = 0` gives an
/// empty canvas of fixed size.
pub fn export_svg(bundle: &DocumentBundle, k: usize) -> Result<String, SvgError> {
    let sentences = bundle.sentence_count();
    if k > sentences {
        return Err(SvgError::PrefixOutOfRange { k, sentences });
    }
    let mut out = String::new();
    let Some(state) = bundle.prefix_layout(k) else {
        header(&mut out, 0.0, 0.0, EMPTY_WIDTH, EMPTY_HEIGHT);
        out.push_str("</svg>\n");
        return Ok(out);
    };
    let doc = &bundle.document;
    let label = |id: &NodeId| doc.node(id).map(|n| n.label.as_str()).unwrap_or_default();

    let bounds = state
        .atoms
        .values()
        .chain(state.composites.values())
        .copied()
        .reduce(|a, b| a.union(&b))
        .unwrap_or(Rect::new(0.0, 0.0, 0.0, 0.0))
        .expand(MARGIN);
    header(&mut out, bounds.min_x(), bounds.min_y(), bounds.w, bounds.h);

    // Outer containers first so nested ones are painted on top.
    let mut memo = BTreeMap::new();
    let mut containers: Vec<(usize, &NodeId, &Rect)> =
        state.composites.iter().map(|(id, r)| (depth(doc, id, &mut memo), id, r)).collect();
    containers.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for (_, id, r) in containers {
        let _ = writeln!(
            out,
            r##"<rect class="container" data-id="{id}" x="{}" y="{}" width="{}" height="{}" rx="6" fill="#e6e6e6" stroke="#9a9a9a"/>"##,
            num(r.min_x()),
            num(r.min_y()),
            num(r.w),
            num(r.h),
            id = id.as_str(),
        );
        let _ = writeln!(
            out,
            r##"<text class="container-label" data-id="{id}" x="{}" y="{}" fill="#6b6b6b">{}</text>"##,
            num(r.min_x() + 4.0),
            num(r.min_y() - 4.0),
            escape(label(id)),
            id = id.as_str(),
        );
    }

    for e in &doc.edges {
        if doc.sentence_order(&e.sentence_id).is_none_or(|o| o >= k) {
            continue;
        }
        let (Some(s), Some(t)) = (state.rect(&e.source), state.rect(&e.target)) else {
            continue;
        };
        let (x1, y1) = exit_point(s, t.x, t.y);
        let (x2, y2) = exit_point(t, s.x, s.y);
        let _ = writeln!(
            out,
            r##"<g class="edge" data-id="{id}"><path d="M{} {} L{} {}" stroke="#555555" fill="none" marker-end="url(#arrow)"/><text x="{}" y="{}" text-anchor="middle" font-size="12" fill="#333333">{}</text></g>"##,
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num((x1 + x2) / 2.0),
            num((y1 + y2) / 2.0 - 4.0),
            escape(&e.label),
            id = e.id.as_str(),
        );
    }

    for (id, r) in &state.atoms {
        let _ = writeln!(
            out,
            r##"<g class="atom" data-id="{id}"><rect x="{}" y="{}" width="{}" height="{}" rx="4" fill="#ffffff" stroke="#333333"/><text x="{}" y="{}" text-anchor="middle" dominant-baseline="central">{}</text></g>"##,
            num(r.min_x()),
            num(r.min_y()),
            num(r.w),
            num(r.h),
            num(r.x),
            num(r.y),
            escape(label(id)),
            id = id.as_str(),
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
