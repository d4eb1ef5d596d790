use std::collections::{BTreeMap, BTreeSet};

use nestgraph_core::graph_model::{Document, Edge, EdgeId, Membership, Node, NodeId, NodeKind, Sentence, SentenceId, TextSpan};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "carbon", "dioxide", "forest", "soil", "heat", "ocean", "policy", "energy", "farming", "ice", "rain", "cloud",
    "river", "coal", "solar", "wind", "methane", "crop", "reef", "city", "growth", "trade", "emission", "sea",
    "drought", "plankton", "glacier", "tax", "grid", "storm",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random digraph with `2..=max_nodes` nodes named `v0..`, without
/// self-loops or parallel edges.
pub fn random_digraph(seed: u64, max_nodes: usize) -> (Vec<NodeId>, Vec<(NodeId, NodeId)>) {
    let mut rng = rng(seed);
    let n = rng.gen_range(2..=max_nodes.max(2));
    let ids: Vec<NodeId> = (0..n).map(|i| NodeId::new(format!("v{i}"))).collect();
    let density: f64 = rng.gen_range(0.1..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(density) {
                edges.push((ids[a].clone(), ids[b].clone()));
            }
        }
    }
    edges.shuffle(&mut rng);
    (ids, edges)
}

#[derive(Debug, Clone)]
pub struct NestedDocParams {
    pub max_nodes: usize,
    /// Largest number of composites stacked around one atom.
    pub max_depth: usize,
    /// Range of atoms introduced per sentence.
    pub atoms_per_sentence: (usize, usize),
    /// Chance that a composite may take a member that already has a parent.
    pub overlap_probability: f64,
}

impl Default for NestedDocParams {
    fn default() -> Self {
        Self {
            max_nodes: 40,
            max_depth: 3,
            atoms_per_sentence: (3, 8),
            overlap_probability: 0.3,
        }
    }
}

fn label(rng: &mut ChaCha8Rng) -> String {
    let words = rng.gen_range(1..=2);
    (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Builds sentence records and text from per-sentence token lists, returning
/// the character offset of every token inside its sentence.
fn assemble(tokens: &[Vec<String>]) -> (String, Vec<Sentence>, Vec<Vec<(usize, usize)>>) {
    let mut text = String::new();
    let mut sentences = Vec::new();
    let mut offsets = Vec::new();
    for (order, toks) in tokens.iter().enumerate() {
        if order > 0 {
            text.push(' ');
        }
        let start = text.chars().count();
        let mut local = Vec::new();
        let mut pos = 0;
        let mut body = String::new();
        for (i, t) in toks.iter().enumerate() {
            if i > 0 {
                body.push(' ');
                pos += 1;
            }
            local.push((pos, pos + t.chars().count()));
            body.push_str(t);
            pos += t.chars().count();
        }
        body.push('.');
        text.push_str(&body);
        sentences.push(Sentence {
            id: SentenceId::from_order(order),
            order,
            start,
            end: start + body.chars().count(),
        });
        offsets.push(local);
    }
    (text, sentences, offsets)
}

/// A valid random nested document: up to `max_nodes` nodes, composites
/// nested at most `max_depth` deep, some atoms shared between composites,
/// and edges that may cross nesting levels.
pub fn random_nested_doc(seed: u64, params: &NestedDocParams) -> Document {
    let mut rng = rng(seed);
    let total = rng.gen_range(2..=params.max_nodes.max(2));
    let composites = rng.gen_range(0..=total / 4);
    let atoms = total - composites;
    let (lo, hi) = params.atoms_per_sentence;
    let sentences = rng.gen_range(atoms.div_ceil(hi.max(1))..=atoms.div_ceil(lo.max(1))).max(1);

    // One token per atom mention; each atom lives in one or two sentences.
    let mut tokens: Vec<Vec<String>> = vec![Vec::new(); sentences];
    let mut mentions: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..atoms {
        let l = label(&mut rng);
        let home = rng.gen_range(0..sentences);
        let mut m = vec![(home, tokens[home].len())];
        tokens[home].push(l.clone());
        if home > 0 && rng.gen_bool(0.2) {
            let earlier = rng.gen_range(0..home);
            m.push((earlier, tokens[earlier].len()));
            tokens[earlier].push(l.clone());
        }
        mentions.push(m);
        labels.push(l);
    }
    for t in tokens.iter_mut().filter(|t| t.is_empty()) {
        t.push("nothing".to_string());
    }
    let (text, sentence_list, offsets) = assemble(&tokens);
    let mut doc = Document::new(format!("random-{seed}"), text);
    doc.sentences = sentence_list;

    for (i, (l, m)) in labels.iter().zip(&mentions).enumerate() {
        let spans: Vec<TextSpan> = m
            .iter()
            .map(|&(s, t)| TextSpan::new(SentenceId::from_order(s), offsets[s][t].0, offsets[s][t].1))
            .collect();
        doc.nodes.push(Node {
            id: NodeId::from_index(i),
            label: l.clone(),
            kind: NodeKind::Atomic,
            spans,
            first_sentence: m.iter().map(|x| x.0).min().unwrap(),
        });
    }

    // Composites, each decomposing a mention in one sentence into things
    // that sentence mentions, so shared atoms give overlapping containment.
    // depth(c) = 1 + max depth of members.
    let mentioned = |doc: &Document, i: usize, k: usize| {
        let sid = SentenceId::from_order(k);
        doc.nodes[i].spans.iter().any(|s| s.sentence_id == sid)
    };
    let mut depth: BTreeMap<usize, usize> = (0..atoms).map(|i| (i, 0)).collect();
    let mut has_parent: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..composites {
        let id = doc.nodes.len();
        let k = rng.gen_range(0..sentences);
        let target_depth = rng.gen_range(1..=params.max_depth.max(1));
        let mut pool: Vec<usize> = depth
            .iter()
            .filter(|(i, d)| **d < target_depth && mentioned(&doc, **i, k))
            .map(|(i, _)| *i)
            .collect();
        if rng.gen_bool(1.0 - params.overlap_probability) {
            let free: Vec<usize> = pool.iter().copied().filter(|i| !has_parent.contains(i)).collect();
            if free.len() >= 2 {
                pool = free;
            }
        }
        if pool.len() < 2 {
            continue;
        }
        let count = rng.gen_range(2..=4.min(pool.len()));
        let members: Vec<usize> = pool.choose_multiple(&mut rng, count).copied().collect();
        let d = 1 + members.iter().map(|m| depth[m]).max().unwrap();
        let sid = SentenceId::from_order(k);
        let span = members
            .iter()
            .flat_map(|m| doc.nodes[*m].spans.iter())
            .filter(|s| s.sentence_id == sid)
            .min()
            .cloned()
            .unwrap();
        doc.nodes.push(Node {
            id: NodeId::from_index(id),
            label: label(&mut rng),
            kind: NodeKind::Composite,
            spans: vec![span],
            first_sentence: k,
        });
        for m in &members {
            doc.memberships.push(Membership::new(NodeId::from_index(id), NodeId::from_index(*m)));
            has_parent.insert(*m);
        }
        depth.insert(id, d);
    }

    // Relations between things mentioned in the same sentence, possibly
    // across nesting levels.
    let n = doc.nodes.len();
    let edge_count = rng.gen_range(0..=n);
    let mut seen = BTreeSet::new();
    for _ in 0..edge_count {
        let k = rng.gen_range(0..sentences);
        let here: Vec<usize> = (0..n).filter(|i| mentioned(&doc, *i, k)).collect();
        if here.len() < 2 {
            continue;
        }
        let (a, b) = (*here.choose(&mut rng).unwrap(), *here.choose(&mut rng).unwrap());
        let (sa, sb) = (doc.nodes[a].id.clone(), doc.nodes[b].id.clone());
        if a == b || doc.ancestors(&sa).contains(&sb) || doc.ancestors(&sb).contains(&sa) || !seen.insert((a, b)) {
            continue;
        }
        doc.edges.push(Edge {
            id: EdgeId::from_index(doc.edges.len()),
            source: sa,
            target: sb,
            label: "relates to".into(),
            sentence_id: SentenceId::from_order(k),
        });
    }
    doc
}

/// A chain of document prefixes shaped like incremental ingestion: each
/// step adds a sentence with new atoms, repeated mentions of earlier atoms,
/// sometimes a new composite, sometimes the split of an earlier atom into
/// members, and new edges.
pub fn random_prefix_chain(seed: u64, max_sentences: usize) -> Vec<Document> {
    let mut rng = rng(seed);
    let sentences = rng.gen_range(1..=max_sentences.max(1));
    // Pre-draw all tokens so text offsets are fixed up front.
    let tokens: Vec<Vec<String>> = (0..sentences)
        .map(|_| {
            let n = rng.gen_range(8..=14);
            (0..n).map(|_| WORDS.choose(&mut rng).unwrap().to_string()).collect()
        })
        .collect();
    let (text, sentence_list, offsets) = assemble(&tokens);
    let mut doc = Document::new(format!("chain-{seed}"), text);
    let mut out = Vec::new();

    let span_of = |s: usize, from: usize, to: usize| {
        TextSpan::new(SentenceId::from_order(s), offsets[s][from].0, offsets[s][to - 1].1)
    };
    let label_of = |s: usize, from: usize, to: usize| tokens[s][from..to].join(" ");

    for k in 0..sentences {
        doc.sentences.push(sentence_list[k].clone());
        let sid = SentenceId::from_order(k);
        let len = tokens[k].len();
        let mut cursor = 0;
        let mut fresh: Vec<NodeId> = Vec::new();

        // Split an earlier multi-token atom into its tokens.
        if k > 0 && rng.gen_bool(0.5) {
            let candidates: Vec<NodeId> = doc
                .nodes
                .iter()
                .filter(|n| n.is_atomic() && n.spans.iter().any(|s| s.len() > 8) && n.first_sentence < k)
                .map(|n| n.id.clone())
                .collect();
            if let Some(target) = candidates.choose(&mut rng).cloned() {
                let span = doc.node(&target).unwrap().spans[0].clone();
                let s = doc.sentence_order(&span.sentence_id).unwrap();
                let toks: Vec<usize> = (0..tokens[s].len())
                    .filter(|&t| offsets[s][t].0 >= span.start && offsets[s][t].1 <= span.end)
                    .collect();
                if toks.len() >= 2 {
                    for &t in &toks {
                        let id = NodeId::from_index(doc.nodes.len());
                        doc.nodes.push(Node {
                            id: id.clone(),
                            label: tokens[s][t].clone(),
                            kind: NodeKind::Atomic,
                            spans: vec![span_of(s, t, t + 1)],
                            first_sentence: s,
                        });
                        doc.memberships.push(Membership::new(target.clone(), id));
                    }
                    doc.node_mut(&target).unwrap().kind = NodeKind::Composite;
                    let members: Vec<NodeId> = doc.children(&target).into_iter().cloned().collect();
                    for pair in members.windows(2) {
                        doc.edges.push(Edge {
                            id: EdgeId::from_index(doc.edges.len()),
                            source: pair[0].clone(),
                            target: pair[1].clone(),
                            label: "of".into(),
                            sentence_id: sid.clone(),
                        });
                    }
                    // This sentence mentions one of the new members again.
                    if cursor < len {
                        let m = members[0].clone();
                        let s2 = span_of(k, cursor, cursor + 1);
                        doc.node_mut(&m).unwrap().spans.push(s2);
                        cursor += 1;
                    }
                }
            }
        }

        // Mention some earlier atoms again.
        let earlier: Vec<NodeId> = doc
            .nodes
            .iter()
            .filter(|n| n.is_atomic() && n.first_sentence < k)
            .map(|n| n.id.clone())
            .collect();
        let repeats = rng.gen_range(0..=2.min(earlier.len()));
        for id in earlier.choose_multiple(&mut rng, repeats).cloned().collect::<Vec<_>>() {
            if cursor >= len {
                break;
            }
            let span = span_of(k, cursor, cursor + 1);
            let node = doc.node_mut(&id).unwrap();
            if !node.spans.contains(&span) {
                node.spans.push(span);
            }
            cursor += 1;
            fresh.push(id);
        }

        // New atoms of one to three tokens.
        let new_atoms = rng.gen_range(1..=4);
        for _ in 0..new_atoms {
            if cursor >= len {
                break;
            }
            let width = rng.gen_range(1..=3).min(len - cursor);
            let id = NodeId::from_index(doc.nodes.len());
            doc.nodes.push(Node {
                id: id.clone(),
                label: label_of(k, cursor, cursor + width),
                kind: NodeKind::Atomic,
                spans: vec![span_of(k, cursor, cursor + width)],
                first_sentence: k,
            });
            cursor += width;
            fresh.push(id);
        }

        // Sometimes wrap two or three of this sentence's atoms in a new composite.
        if fresh.len() >= 2 && rng.gen_bool(0.4) {
            let size = rng.gen_range(2..=3.min(fresh.len()));
            let members: Vec<NodeId> = fresh.choose_multiple(&mut rng, size).cloned().collect();
            let spans: Vec<TextSpan> = members
                .iter()
                .flat_map(|m| doc.node(m).unwrap().spans.iter().filter(|s| s.sentence_id == sid).cloned())
                .collect();
            let (start, end) = (
                spans.iter().map(|s| s.start).min().unwrap(),
                spans.iter().map(|s| s.end).max().unwrap(),
            );
            let id = NodeId::from_index(doc.nodes.len());
            doc.nodes.push(Node {
                id: id.clone(),
                label: format!("group {}", doc.nodes.len()),
                kind: NodeKind::Composite,
                spans: vec![TextSpan::new(sid.clone(), start, end)],
                first_sentence: k,
            });
            for m in members {
                doc.memberships.push(Membership::new(id.clone(), m));
            }
            fresh.push(id);
        }

        // New edges touching this sentence's nodes.
        let all: Vec<NodeId> = doc.nodes.iter().map(|n| n.id.clone()).collect();
        let edges = rng.gen_range(0..=3);
        for _ in 0..edges {
            let (Some(a), Some(b)) = (fresh.choose(&mut rng).cloned(), all.choose(&mut rng).cloned()) else {
                break;
            };
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            let related = a == b || doc.ancestors(&a).contains(&b) || doc.ancestors(&b).contains(&a);
            let duplicate = doc.edges.iter().any(|e| e.source == a && e.target == b);
            if related || duplicate {
                continue;
            }
            doc.edges.push(Edge {
                id: EdgeId::from_index(doc.edges.len()),
                source: a,
                target: b,
                label: "relates to".into(),
                sentence_id: sid.clone(),
            });
        }

        for node in &mut doc.nodes {
            node.first_sentence = node
                .spans
                .iter()
                .map(|s| s.sentence_id.as_str()[1..].parse::<usize>().unwrap())
                .min()
                .unwrap_or(node.first_sentence);
        }
        out.push(doc.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nestgraph_core::graph_model::validate_document;

    #[test]
    fn generated_documents_are_valid() {
        for seed in 0..200 {
            let doc = random_nested_doc(seed, &NestedDocParams::default());
            let report = validate_document(&doc);
            assert!(!report.has_errors(), "seed {seed}: {report}");
            assert!(doc.nodes.len() <= 40);
        }
    }

    #[test]
    fn prefix_chains_are_valid_at_every_step() {
        for seed in 0..200 {
            for (k, doc) in random_prefix_chain(seed, 5).iter().enumerate() {
                let report = validate_document(doc);
                assert!(!report.has_errors(), "seed {seed} prefix {k}: {report}");
            }
        }
    }
}
