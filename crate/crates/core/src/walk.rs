//! Second-order biased random walks and a skip-gram trainer with negative
//! sampling, producing node embeddings in-process.
//!
//! A walk standing on `cur` after arriving from `prev` weighs each
//! neighbour `x` of `cur` by `1/p` when `x == prev`, by `1` when `x` is
//! also a neighbour of `prev`, and by `1/q` otherwise. Steps are drawn by
//! proposing a uniform neighbour and accepting it with probability
//! `weight / max_weight`, which samples the biased distribution exactly
//! without per-edge tables.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::seeded_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    /// Initial skip-gram step size, decayed linearly to zero.
    pub learning_rate: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
            negatives_per_positive: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

impl WalkConfig {
    /// The three `(p, q)` settings compared when tuning.
    pub const PQ_GRID: [(f64, f64); 3] = [(4.0, 0.5), (0.5, 4.0), (1.0, 1.0)];

    pub fn validate(&self) -> Result<()> {
        let positive_reals = [
            ("p", self.p),
            ("q", self.q),
            ("learning_rate", self.learning_rate),
        ];
        for (name, x) in positive_reals {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Config(format!(
                    "walk {name} must be positive, got {x}"
                )));
            }
        }
        let counts = [
            ("walk_length", self.walk_length),
            ("walks_per_node", self.walks_per_node),
            ("window", self.window),
            ("negatives_per_positive", self.negatives_per_positive),
            ("epochs", self.epochs),
        ];
        for (name, x) in counts {
            if x == 0 {
                return Err(Error::Config(format!("walk {name} must be positive")));
            }
        }
        if self.window >= self.walk_length {
            return Err(Error::Config(format!(
                "window ({}) must be shorter than walk_length ({})",
                self.window, self.walk_length
            )));
        }
        Ok(())
    }
}

/// Samples second-order walk steps on a fixed graph.
pub struct BiasedWalker<'g> {
    graph: &'g Graph,
    return_weight: f64,
    in_out_weight: f64,
    max_weight: f64,
}

impl<'g> BiasedWalker<'g> {
    pub fn new(graph: &'g Graph, p: f64, q: f64) -> Self {
        let (return_weight, in_out_weight) = (1.0 / p, 1.0 / q);
        BiasedWalker {
            graph,
            return_weight,
            in_out_weight,
            max_weight: return_weight.max(in_out_weight).max(1.0),
        }
    }

    /// Next node of a walk at `cur`, having come from `prev`. `None` at a
    /// dead end.
    pub fn step<R: Rng + ?Sized>(
        &self,
        prev: Option<NodeId>,
        cur: NodeId,
        rng: &mut R,
    ) -> Option<NodeId> {
        let nbrs = self.graph.neighbors(cur);
        if nbrs.is_empty() {
            return None;
        }
        let Some(prev) = prev else {
            return nbrs.choose(rng).copied();
        };
        loop {
            let x = nbrs[rng.gen_range(0..nbrs.len())];
            let weight = if x == prev {
                self.return_weight
            } else if self.graph.has_edge(x, prev) {
                1.0
            } else {
                self.in_out_weight
            };
            if weight >= self.max_weight || rng.gen::<f64>() * self.max_weight < weight {
                return Some(x);
            }
        }
    }

    pub fn walk<R: Rng + ?Sized>(&self, start: NodeId, length: usize, rng: &mut R) -> Vec<NodeId> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        let mut prev = None;
        while walk.len() < length {
            let cur = *walk.last().unwrap();
            match self.step(prev, cur, rng) {
                Some(next) => {
                    prev = Some(cur);
                    walk.push(next);
                }
                None => break,
            }
        }
        walk
    }
}

/// `walks_per_node` rounds, each visiting every node once in shuffled
/// order.
pub fn generate_walks<R: Rng + ?Sized>(
    graph: &Graph,
    config: &WalkConfig,
    rng: &mut R,
) -> Vec<Vec<NodeId>> {
    let walker = BiasedWalker::new(graph, config.p, config.q);
    let mut order: Vec<NodeId> = graph.nodes().collect();
    let mut walks = Vec::with_capacity(order.len() * config.walks_per_node);
    for _ in 0..config.walks_per_node {
        order.shuffle(rng);
        for &start in &order {
            walks.push(walker.walk(start, config.walk_length, rng));
        }
    }
    walks
}

/// Walker's alias method: O(1) draws from a fixed discrete distribution.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || !(total.is_finite() && total > 0.0) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Config(
                "alias table needs non-negative weights with positive sum".into(),
            ));
        }
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias = vec![0; n];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| prob[i] < 1.0);
        while !small.is_empty() && !large.is_empty() {
            let s = small.pop().unwrap();
            let l = *large.last().unwrap();
            alias[s] = l;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        Ok(AliasTable { prob, alias })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Embedding produced by the built-in trainer, with its training trace.
#[derive(Clone, Debug)]
pub struct WalkEmbedding {
    pub matrix: EmbeddingMatrix,
    /// Mean negative-sampling loss per positive pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    if x > 20.0 {
        1.0
    } else if x < -20.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

#[inline]
fn log_sigmoid(x: f32) -> f64 {
    -softplus(-f64::from(x))
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Skip-gram with negative sampling over a fixed walk corpus.
///
/// Negatives are drawn from the unigram distribution raised to 3/4. The
/// context window is shrunk uniformly at random per position.
pub fn train_skipgram<R: Rng + ?Sized>(
    walks: &[Vec<NodeId>],
    node_count: usize,
    dim: usize,
    config: &WalkConfig,
    rng: &mut R,
) -> Result<(Vec<f32>, Vec<f64>)> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let mut counts = vec![0f64; node_count];
    for walk in walks {
        for u in walk {
            counts[u.index()] += 1.0;
        }
    }
    let noise = AliasTable::new(&counts.iter().map(|c| c.powf(0.75)).collect::<Vec<_>>())?;

    let mut input: Vec<f32> = (0..node_count * dim)
        .map(|_| (rng.gen::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut output = vec![0f32; node_count * dim];
    let mut grad = vec![0f32; dim];

    let tokens: usize = walks.iter().map(Vec::len).sum();
    let total_steps = (tokens * config.epochs).max(1) as f64;
    let lr0 = config.learning_rate;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let (mut loss, mut pairs) = (0.0f64, 0usize);
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = (lr0 * (1.0 - processed as f64 / total_steps)).max(lr0 * 1e-4) as f32;
                processed += 1;
                let reach = rng.gen_range(1..=config.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let c_row = center.index() * dim;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=config.negatives_per_positive {
                        let (target, label) = if k == 0 {
                            (context.index(), 1.0f32)
                        } else {
                            let t = noise.sample(rng);
                            if t == context.index() {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let t_row = target * dim;
                        let dot: f32 = input[c_row..c_row + dim]
                            .iter()
                            .zip(&output[t_row..t_row + dim])
                            .map(|(a, b)| a * b)
                            .sum();
                        loss -= if label > 0.5 {
                            log_sigmoid(dot)
                        } else {
                            log_sigmoid(-dot)
                        };
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * output[t_row + d];
                            output[t_row + d] += g * input[c_row + d];
                        }
                    }
                    for d in 0..dim {
                        input[c_row + d] += grad[d];
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }
    Ok((input, epoch_losses))
}

/// Walks plus skip-gram, single-threaded and fully determined by `seed`.
pub fn train_biased_walk_embedding(
    graph: &Graph,
    config: &WalkConfig,
    dim: usize,
    seed: u64,
) -> Result<WalkEmbedding> {
    config.validate()?;
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = seeded_rng(seed);
    let walks = generate_walks(graph, config, &mut rng);
    let (vectors, epoch_losses) =
        train_skipgram(&walks, graph.node_count(), dim, config, &mut rng)?;
    let tag = format!("walk(p={},q={})", config.p, config.q);
    let matrix = EmbeddingMatrix::new(dim, vectors.into_iter().map(f64::from).collect(), tag)?;
    Ok(WalkEmbedding {
        matrix,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(WalkConfig::default().validate().is_ok());
        let bad = WalkConfig {
            p: 0.0,
            ..WalkConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = WalkConfig {
            window: 80,
            ..WalkConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = WalkConfig {
            epochs: 0,
            ..WalkConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn walks_follow_edges() {
        let g =
            Graph::from_labeled_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")]);
        let cfg = WalkConfig {
            walk_length: 20,
            walks_per_node: 3,
            window: 5,
            ..WalkConfig::default()
        };
        let walks = generate_walks(&g, &cfg, &mut seeded_rng(1));
        assert_eq!(walks.len(), 12);
        for w in &walks {
            assert_eq!(w.len(), 20);
            assert!(w.windows(2).all(|s| g.has_edge(s[0], s[1])));
        }
    }

    #[test]
    fn low_return_parameter_backtracks() {
        // on a long path interior nodes have two neighbours: back or forward
        let names: Vec<String> = (0..50).map(|i| i.to_string()).collect();
        let g = Graph::from_labeled_edges(names.windows(2).map(|w| (w[0].as_str(), w[1].as_str())));
        let mut rng = seeded_rng(5);
        let count_returns = |p: f64, q: f64, rng: &mut crate::rng::StageRng| {
            let walker = BiasedWalker::new(&g, p, q);
            (0..2000)
                .filter(|_| walker.step(Some(NodeId(20)), NodeId(21), rng) == Some(NodeId(20)))
                .count()
        };
        let eager = count_returns(0.25, 1.0, &mut rng);
        let reluctant = count_returns(4.0, 1.0, &mut rng);
        // expected 4/5 and 1/5 of 2000
        assert!((1500..1700).contains(&eager), "{eager}");
        assert!((300..500).contains(&reluctant), "{reluctant}");
    }

    #[test]
    fn alias_table_matches_weights() {
        let table = AliasTable::new(&[1.0, 2.0, 0.0, 7.0]).unwrap();
        let mut rng = seeded_rng(11);
        let mut hits = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            hits[table.sample(&mut rng)] += 1;
        }
        assert_eq!(hits[2], 0);
        for (h, w) in hits.iter().zip([0.1, 0.2, 0.0, 0.7]) {
            assert!((*h as f64 / draws as f64 - w).abs() < 0.01);
        }
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-12);
        assert!(log_sigmoid(100.0).abs() < 1e-30);
        assert!((log_sigmoid(-100.0) + 100.0).abs() < 1e-9);
    }
}
