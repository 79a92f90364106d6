use std::collections::HashSet;

use linkbias_core::generators::gnp;
use linkbias_core::graph::{Graph, NodeId};
use linkbias_core::heuristics::{
    adamic_adar, common_neighbors, feature_vector, jaccard, preferential_attachment,
    resource_allocation,
};
use proptest::prelude::*;

fn neighbor_sets(g: &Graph) -> Vec<HashSet<u32>> {
    g.nodes()
        .map(|u| g.neighbors(u).iter().map(|v| v.0).collect())
        .collect()
}

#[test]
fn matches_set_oracle_on_random_graphs() {
    let mut graphs = 0;
    for (i, &p) in [0.05, 0.1, 0.3].iter().cycle().take(100).enumerate() {
        let n = 8 + (i * 7) % 57;
        let g = gnp(n, p, 1000 + i as u64);
        let sets = neighbor_sets(&g);
        let deg = |x: usize| sets[x].len() as f64;
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                let common: Vec<u32> = sets[u].intersection(&sets[v]).copied().collect();
                let union = sets[u].union(&sets[v]).count();
                let (a, b) = (NodeId(u as u32), NodeId(v as u32));
                assert_eq!(common_neighbors(&g, a, b), common.len());
                assert_eq!(
                    preferential_attachment(&g, a, b),
                    (sets[u].len() * sets[v].len()) as u64
                );
                let aa: f64 = common.iter().map(|&z| 1.0 / deg(z as usize).ln()).sum();
                let ra: f64 = common.iter().map(|&z| 1.0 / deg(z as usize)).sum();
                let jc = if union == 0 {
                    0.0
                } else {
                    common.len() as f64 / union as f64
                };
                assert!((adamic_adar(&g, a, b) - aa).abs() <= 1e-12);
                assert!((resource_allocation(&g, a, b) - ra).abs() <= 1e-12);
                assert!((jaccard(&g, a, b) - jc).abs() <= 1e-12);
                let f = feature_vector(&g, a, b);
                assert_eq!(f.deg_lo, sets[u].len().min(sets[v].len()) as u64);
                assert_eq!(f.deg_hi, sets[u].len().max(sets[v].len()) as u64);
            }
        }
        graphs += 1;
    }
    assert_eq!(graphs, 100);
}

proptest! {
    #[test]
    fn feature_vector_is_symmetric(seed in any::<u64>(), n in 3usize..40, p in 0.05f64..0.5) {
        let g = gnp(n, p, seed);
        for u in g.nodes() {
            for v in g.nodes().filter(|&v| v != u) {
                prop_assert_eq!(feature_vector(&g, u, v), feature_vector(&g, v, u));
            }
        }
    }

    #[test]
    fn extra_common_neighbor_never_lowers_scores(seed in any::<u64>(), n in 4usize..30) {
        // add a fresh node adjacent to both endpoints: degrees of u, v
        // change but every existing common neighbour keeps its degree
        let g = gnp(n, 0.2, seed);
        let (u, v) = (NodeId(0), NodeId(1));
        let mut names: Vec<String> = g.labels().names().to_vec();
        names.push("extra".into());
        let mut edges: Vec<(NodeId, NodeId)> = g.edges().map(|p| (p.lo(), p.hi())).collect();
        let z = NodeId(n as u32);
        edges.push((u, z));
        edges.push((v, z));
        let h = Graph::from_edges(linkbias_core::Labels::from_names(names).unwrap(), &edges);
        let (before, after) = (feature_vector(&g, u, v), feature_vector(&h, u, v));
        prop_assert!(after.cn > before.cn);
        prop_assert!(after.aa >= before.aa);
        prop_assert!(after.ra >= before.ra);
        prop_assert!(after.jaccard >= before.jaccard);
    }
}
