//! Modularity and Louvain community detection (resolution 1).
//!
//! Each pass runs local moving to a fixed point and then collapses
//! communities into weighted super-nodes, intra-community weight becoming a
//! self-loop. Node visits follow a seeded shuffle; a node moves only on a
//! strictly positive gain, ties going to the smallest community id.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{seeded_rng, StageRng};

pub const DEFAULT_MAX_PASSES: usize = 100;

/// Gains closer than this to the stay-put gain do not trigger a move.
const MIN_GAIN: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// Community id per node, ids contiguous from 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<u32>,
    count: usize,
}

impl Partition {
    /// Relabels arbitrary ids densely in order of first appearance.
    pub fn from_assignment(raw: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        let mut assignment = Vec::with_capacity(raw.len());
        for &c in raw {
            let next = map.len() as u32;
            assignment.push(*map.entry(c).or_insert(next));
        }
        Partition {
            assignment,
            count: map.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n as u32).collect(),
            count: n,
        }
    }

    pub fn whole(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            count: usize::from(n > 0),
        }
    }

    #[inline]
    pub fn community(&self, u: NodeId) -> u32 {
        self.assignment[u.index()]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.count
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &c in &self.assignment {
            sizes[c as usize] += 1;
        }
        sizes
    }
}

/// `Q = Σ_c [ e_c/m − (d_c/2m)² ]`.
pub fn modularity(graph: &Graph, partition: &Partition) -> Result<f64> {
    if graph.node_count() == 0 || graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if partition.len() != graph.node_count() {
        return Err(Error::Dimension {
            expected: graph.node_count(),
            got: partition.len(),
        });
    }
    let raw: Vec<usize> = partition.assignment.iter().map(|&c| c as usize).collect();
    Ok(WeightedGraph::from_graph(graph).modularity(&raw))
}

/// Undirected weighted graph with self-loops, the working form for the
/// aggregated levels.
#[derive(Clone, Debug)]
struct WeightedGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    total_weight: f64,
}

impl WeightedGraph {
    fn from_graph(graph: &Graph) -> Self {
        let adjacency: Vec<Vec<(usize, f64)>> = graph
            .nodes()
            .map(|u| {
                graph
                    .neighbors(u)
                    .iter()
                    .map(|v| (v.index(), 1.0))
                    .collect()
            })
            .collect();
        let degree = graph.nodes().map(|u| graph.degree(u) as f64).collect();
        WeightedGraph {
            adjacency,
            self_loops: vec![0.0; graph.node_count()],
            degree,
            total_weight: graph.edge_count() as f64,
        }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    fn modularity(&self, community: &[usize]) -> f64 {
        let count = community.iter().max().map_or(0, |&c| c + 1);
        let mut internal = vec![0.0; count];
        let mut total = vec![0.0; count];
        for i in 0..self.len() {
            let c = community[i];
            total[c] += self.degree[i];
            internal[c] += self.self_loops[i];
            for &(j, w) in &self.adjacency[i] {
                if j > i && community[j] == c {
                    internal[c] += w;
                }
            }
        }
        let m = self.total_weight;
        internal
            .iter()
            .zip(&total)
            .map(|(e, d)| e / m - (d / (2.0 * m)).powi(2))
            .sum()
    }

    /// Moves nodes until a full sweep changes nothing. Returns the
    /// community of each node and whether anything moved.
    fn local_moving(&self, rng: &mut StageRng) -> (Vec<usize>, bool) {
        let n = self.len();
        let two_m = 2.0 * self.total_weight;
        let mut community: Vec<usize> = (0..n).collect();
        let mut total: Vec<f64> = self.degree.clone();
        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut moved_any = false;

        for _ in 0..MAX_SWEEPS {
            order.shuffle(rng);
            let mut moved = false;
            for &i in &order {
                let own = community[i];
                let k = self.degree[i];
                for &(j, w) in &self.adjacency[i] {
                    let c = community[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                total[own] -= k;

                let gain = |c: usize, link: &[f64]| link[c] - total[c] * k / two_m;
                let own_gain = gain(own, &link);
                touched.sort_unstable();
                let mut best = own;
                let mut best_gain = f64::NEG_INFINITY;
                for &c in &touched {
                    let g = gain(c, &link);
                    if g > best_gain {
                        best = c;
                        best_gain = g;
                    }
                }
                let target = if best_gain - own_gain > MIN_GAIN {
                    best
                } else {
                    own
                };
                total[target] += k;
                if target != own {
                    community[i] = target;
                    moved = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        (community, moved_any)
    }

    /// Collapses each community (ids dense) into one node.
    fn aggregate(&self, community: &[usize], count: usize) -> WeightedGraph {
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        let mut self_loops = vec![0.0; count];
        let mut degree = vec![0.0; count];
        for i in 0..self.len() {
            let ci = community[i];
            self_loops[ci] += self.self_loops[i];
            degree[ci] += self.degree[i];
            for &(j, w) in &self.adjacency[i] {
                let cj = community[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    if j > i {
                        self_loops[ci] += w;
                    }
                } else {
                    *links[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        WeightedGraph {
            adjacency: links.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loops,
            degree,
            total_weight: self.total_weight,
        }
    }
}

/// State after one local-moving + aggregation pass.
#[derive(Clone, Debug)]
pub struct LouvainLevel {
    /// Partition of the original nodes after this pass.
    pub partition: Partition,
    /// Modularity of the aggregated graph under its singleton partition.
    pub aggregated_modularity: f64,
}

#[derive(Clone, Debug)]
pub struct LouvainResult {
    pub partition: Partition,
    pub modularity: f64,
    /// Modularity of the singleton partition, then after every pass.
    pub pass_modularity: Vec<f64>,
    pub levels: Vec<LouvainLevel>,
}

pub fn louvain(graph: &Graph, seed: u64, max_passes: usize) -> Result<LouvainResult> {
    if graph.node_count() == 0 || graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = seeded_rng(seed);
    let mut level = WeightedGraph::from_graph(graph);
    let mut membership: Vec<usize> = (0..graph.node_count()).collect();
    let mut pass_modularity = vec![level.modularity(&membership)];
    let mut levels = Vec::new();

    for _ in 0..max_passes {
        let (community, moved) = level.local_moving(&mut rng);
        if !moved {
            break;
        }
        let dense = Partition::from_assignment(&community);
        let community: Vec<usize> = dense.assignment.iter().map(|&c| c as usize).collect();
        let q = level.modularity(&community);
        debug_assert!(
            q >= pass_modularity.last().unwrap() - 1e-12,
            "modularity decreased"
        );
        pass_modularity.push(q);
        for c in membership.iter_mut() {
            *c = community[*c];
        }
        level = level.aggregate(&community, dense.count);
        let singletons: Vec<usize> = (0..level.len()).collect();
        levels.push(LouvainLevel {
            partition: Partition::from_assignment(&membership),
            aggregated_modularity: level.modularity(&singletons),
        });
    }

    let partition = Partition::from_assignment(&membership);
    let modularity = *pass_modularity.last().unwrap();
    Ok(LouvainResult {
        partition,
        modularity,
        pass_modularity,
        levels,
    })
}
