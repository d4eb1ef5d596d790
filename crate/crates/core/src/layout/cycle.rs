use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::graph_model::{LevelSubgraph, NodeId};

/// Search steps after which the best cycle found so far is returned.
/// Exhaustive for every level in desk-scale documents.
const SEARCH_BUDGET: usize = 4_000_000;

/// A longest simple directed cycle of the level, starting at its smallest id.
///
/// Among cycles of equal length the lexicographically smallest id sequence
/// wins. Returns an empty list for acyclic levels.
pub fn find_longest_cycle(subgraph: &LevelSubgraph) -> Vec<NodeId> {
    let ids: Vec<NodeId> = subgraph.node_ids().into_iter().collect();
    let edges: Vec<(NodeId, NodeId)> = subgraph
        .edges
        .iter()
        .map(|e| (e.source.clone(), e.target.clone()))
        .collect();
    longest_cycle(&ids, &edges)
}

pub(crate) fn longest_cycle(ids: &[NodeId], edges: &[(NodeId, NodeId)]) -> Vec<NodeId> {
    let mut sorted: Vec<NodeId> = ids.to_vec();
    sorted.sort();
    sorted.dedup();
    let index: BTreeMap<&NodeId, usize> = sorted.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let n = sorted.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut graph = DiGraph::<usize, ()>::new();
    let handles: Vec<_> = (0..n).map(|i| graph.add_node(i)).collect();
    for (s, t) in edges {
        if let (Some(&a), Some(&b)) = (index.get(s), index.get(t)) {
            if a != b && adj[a].insert(b) {
                graph.add_edge(handles[a], handles[b], ());
            }
        }
    }
    let mut component = vec![usize::MAX; n];
    for (c, members) in tarjan_scc(&graph).into_iter().enumerate() {
        for h in members {
            component[graph[h]] = c;
        }
    }

    let mut search = Search {
        adj: &adj,
        allowed: vec![false; n],
        on_path: vec![false; n],
        path: Vec::new(),
        best: Vec::new(),
        steps: 0,
        remaining: 0,
    };
    for start in 0..n {
        let allowed: Vec<usize> = (start + 1..n).filter(|&v| component[v] == component[start]).collect();
        if allowed.is_empty() || allowed.len() < search.best.len() {
            continue;
        }
        for &v in &allowed {
            search.allowed[v] = true;
        }
        search.remaining = allowed.len();
        search.path.push(start);
        search.extend(start, start);
        search.path.pop();
        for &v in &allowed {
            search.allowed[v] = false;
        }
        if search.steps >= SEARCH_BUDGET {
            break;
        }
    }
    search.best.into_iter().map(|i| sorted[i].clone()).collect()
}

struct Search<'a> {
    adj: &'a [BTreeSet<usize>],
    allowed: Vec<bool>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    best: Vec<usize>,
    steps: usize,
    /// Allowed vertices not yet on the path.
    remaining: usize,
}

impl Search<'_> {
    fn extend(&mut self, start: usize, at: usize) {
        self.steps += 1;
        if self.steps >= SEARCH_BUDGET {
            return;
        }
        for &next in &self.adj[at] {
            if next == start {
                // Only strictly longer cycles replace the incumbent: neighbors are
                // visited in ascending order, so the first cycle of each length is
                // the lexicographically smallest.
                if self.path.len() > self.best.len() && self.path.len() >= 2 {
                    self.best = self.path.clone();
                }
            } else if self.allowed[next] && !self.on_path[next] {
                // Even visiting every remaining vertex cannot beat the incumbent.
                if self.path.len() + self.remaining <= self.best.len() {
                    continue;
                }
                self.on_path[next] = true;
                self.remaining -= 1;
                self.path.push(next);
                self.extend(start, next);
                self.path.pop();
                self.remaining += 1;
                self.on_path[next] = false;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|n| NodeId::from(*n)).collect()
    }

    fn edges(pairs: &[(&str, &str)]) -> Vec<(NodeId, NodeId)> {
        pairs.iter().map(|(a, b)| ((*a).into(), (*b).into())).collect()
    }

    #[test]
    fn chain_has_no_cycle() {
        assert!(longest_cycle(&ids(&["a", "b", "c"]), &edges(&[("a", "b"), ("b", "c")])).is_empty());
    }

    #[test]
    fn triangle() {
        let c = longest_cycle(&ids(&["a", "b", "c"]), &edges(&[("b", "c"), ("c", "a"), ("a", "b")]));
        assert_eq!(c, ids(&["a", "b", "c"]));
    }

    #[test]
    fn square_with_chord() {
        let c = longest_cycle(
            &ids(&["a", "b", "c", "d"]),
            &edges(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")]),
        );
        assert_eq!(c, ids(&["a", "b", "c", "d"]));
    }

    #[test]
    fn ties_prefer_smallest_sequence() {
        // Two disjoint 2-cycles and a 2-cycle sharing a node.
        let c = longest_cycle(
            &ids(&["a", "b", "c", "d"]),
            &edges(&[("c", "d"), ("d", "c"), ("a", "b"), ("b", "a")]),
        );
        assert_eq!(c, ids(&["a", "b"]));
        let c = longest_cycle(
            &ids(&["a", "b", "c"]),
            &edges(&[("a", "c"), ("c", "b"), ("b", "a"), ("a", "b"), ("b", "c"), ("c", "a")]),
        );
        assert_eq!(c, ids(&["a", "b", "c"]));
    }

    #[test]
    fn self_loops_and_unknown_endpoints_are_ignored() {
        let c = longest_cycle(&ids(&["a", "b"]), &edges(&[("a", "a"), ("a", "z"), ("z", "a")]));
        assert!(c.is_empty());
    }
}
