use std::collections::{BTreeMap, BTreeSet};

use nestgraph_core::graph_model::{Document, NodeId};

/// Longest simple directed cycle by trying every ordered selection of
/// distinct nodes. Cycles are written from their smallest id; ties go to the
/// lexicographically smallest sequence. Only usable for a handful of nodes.
pub fn brute_force_longest_cycle(ids: &[NodeId], edges: &[(NodeId, NodeId)]) -> Vec<NodeId> {
    let mut nodes = ids.to_vec();
    nodes.sort();
    nodes.dedup();
    let edge_set: BTreeSet<(&NodeId, &NodeId)> = edges.iter().map(|(a, b)| (a, b)).collect();
    let mut best: Vec<NodeId> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut used = vec![false; nodes.len()];

    fn rec(
        nodes: &[NodeId],
        edge_set: &BTreeSet<(&NodeId, &NodeId)>,
        current: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Vec<NodeId>,
    ) {
        if current.len() >= 2 {
            let is_cycle = current.windows(2).all(|w| edge_set.contains(&(&nodes[w[0]], &nodes[w[1]])))
                && edge_set.contains(&(&nodes[*current.last().unwrap()], &nodes[current[0]]));
            let starts_at_min = current.iter().all(|&i| i >= current[0]);
            if is_cycle && starts_at_min {
                let seq: Vec<NodeId> = current.iter().map(|&i| nodes[i].clone()).collect();
                if seq.len() > best.len() || (seq.len() == best.len() && seq < *best) {
                    *best = seq;
                }
            }
        }
        for i in 0..nodes.len() {
            if !used[i] {
                used[i] = true;
                current.push(i);
                rec(nodes, edge_set, current, used, best);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(&nodes, &edge_set, &mut current, &mut used, &mut best);
    best
}

/// Propagated-degree ranking computed from scratch: ancestors by fixpoint
/// over membership rows, degree by counting edge endpoints.
/// Returns (atom id, score) sorted by score desc, first sentence, id.
pub fn brute_force_ranks(doc: &Document) -> Vec<(NodeId, u64)> {
    let mut ancestors: BTreeMap<&NodeId, BTreeSet<&NodeId>> = doc.nodes.iter().map(|n| (&n.id, BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for m in &doc.memberships {
            let mut add: BTreeSet<&NodeId> = ancestors[&m.parent].clone();
            add.insert(&m.parent);
            let entry = ancestors.get_mut(&m.child).unwrap();
            for a in add {
                changed |= entry.insert(a);
            }
        }
        if !changed {
            break;
        }
    }
    let degree = |id: &NodeId| doc.edges.iter().filter(|e| &e.source == id).count() as u64
        + doc.edges.iter().filter(|e| &e.target == id).count() as u64;
    let mut rows: Vec<(NodeId, u64, usize)> = doc
        .nodes
        .iter()
        .filter(|n| n.is_atomic())
        .map(|n| {
            let score = degree(&n.id) + ancestors[&n.id].iter().map(|a| degree(a)).sum::<u64>();
            (n.id.clone(), score, n.first_sentence)
        })
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
    rows.into_iter().map(|(id, s, _)| (id, s)).collect()
}
