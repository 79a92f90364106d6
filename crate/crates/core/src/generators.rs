//! Small seeded graph families for tests and benchmarks.

use rand::Rng;

use crate::graph::{Graph, Labels, NodeId};
use crate::rng::seeded_rng;

fn numbered(n: usize) -> Labels {
    Labels::from_names((0..n).map(|i| i.to_string())).expect("distinct labels")
}

/// Erdős–Rényi G(n, p). Nodes are labelled `0..n`.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((NodeId(i), NodeId(j)));
            }
        }
    }
    Graph::from_edges(numbered(n), &edges)
}

/// Two `k`-cliques joined by a single edge between their first nodes.
pub fn two_cliques(k: usize) -> Graph {
    let mut edges = Vec::new();
    for offset in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                edges.push((NodeId((offset + i) as u32), NodeId((offset + j) as u32)));
            }
        }
    }
    edges.push((NodeId(0), NodeId(k as u32)));
    Graph::from_edges(numbered(2 * k), &edges)
}

/// `blocks` groups of `size` nodes; edge probability `p_in` within a group
/// and `p_out` across.
pub fn planted_partition(blocks: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> Graph {
    let n = blocks * size;
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if i / size == j / size { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((NodeId(i as u32), NodeId(j as u32)));
            }
        }
    }
    Graph::from_edges(numbered(n), &edges)
}
