use nestgraph_core::graph_model::NodeId;
use nestgraph_core::review::{neighborhood, node_for_span, rank_entities};
use nestgraph_testkit::{brute_force_ranks, random_nested_doc, NestedDocParams};
use proptest::prelude::*;

fn small() -> NestedDocParams {
    NestedDocParams {
        max_nodes: 12,
        ..NestedDocParams::default()
    }
}

#[test]
fn ranks_match_the_ancestor_degree_oracle() {
    for seed in 0..200 {
        let doc = random_nested_doc(seed, &small());
        let got: Vec<(NodeId, u64)> = rank_entities(&doc).into_iter().map(|r| (r.node_id, r.score)).collect();
        assert_eq!(got, brute_force_ranks(&doc), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn neighborhoods_are_symmetric_between_atoms(seed in 0u64..100_000) {
        let doc = random_nested_doc(seed, &small());
        let atoms: Vec<&NodeId> = doc.nodes.iter().filter(|n| n.is_atomic()).map(|n| &n.id).collect();
        for a in &atoms {
            let na = neighborhood(&doc, a).unwrap();
            for b in &atoms {
                let nb = neighborhood(&doc, b).unwrap();
                prop_assert_eq!(na.nodes.contains(b), nb.nodes.contains(a));
            }
        }
    }

    #[test]
    fn spans_resolve_back_to_their_node(seed in 0u64..100_000) {
        let doc = random_nested_doc(seed, &NestedDocParams::default());
        for n in &doc.nodes {
            for s in &n.spans {
                for offset in s.start..s.end {
                    // Skip offsets a shorter or equally short span also covers.
                    let shadowed = doc.nodes.iter().any(|m| {
                        m.id != n.id && m.spans.iter().any(|t| t.sentence_id == s.sentence_id && t.contains(offset) && t.len() <= s.len())
                    });
                    if !shadowed {
                        prop_assert_eq!(node_for_span(&doc, &s.sentence_id, offset), Some(n.id.clone()));
                    }
                }
            }
        }
    }
}
