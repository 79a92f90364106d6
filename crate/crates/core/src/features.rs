//! Pair featurizers shared by training and scoring.

use rayon::prelude::*;

use crate::embedding::{edge_vector, EdgeOperator, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::{Graph, Pair};
use crate::heuristics::{feature_vector, HeuristicVector};

/// Maps a node pair to a fixed-length real feature vector.
pub trait Featurizer: Sync {
    fn dim(&self) -> usize;

    fn feature_names(&self) -> Vec<String>;

    /// Features of `pair`; must not depend on endpoint order.
    fn features(&self, pair: Pair) -> Result<Vec<f64>>;

    /// Row-major feature matrix for `pairs`, computed in parallel.
    fn feature_matrix(&self, pairs: &[Pair]) -> Result<Vec<f64>> {
        let rows: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|&p| self.features(p))
            .collect::<Result<_>>()?;
        Ok(rows.concat())
    }
}

/// The five neighbourhood heuristics plus sorted endpoint degrees.
pub struct HeuristicFeaturizer<'g> {
    graph: &'g Graph,
}

impl<'g> HeuristicFeaturizer<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        HeuristicFeaturizer { graph }
    }
}

impl Featurizer for HeuristicFeaturizer<'_> {
    fn dim(&self) -> usize {
        HeuristicVector::DIM
    }

    fn feature_names(&self) -> Vec<String> {
        HeuristicVector::NAMES
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn features(&self, pair: Pair) -> Result<Vec<f64>> {
        Ok(feature_vector(self.graph, pair.lo(), pair.hi())
            .to_array()
            .to_vec())
    }
}

/// Edge vectors built from node embeddings with a binary operator.
pub struct EmbeddingFeaturizer<'m> {
    matrix: &'m EmbeddingMatrix,
    operator: EdgeOperator,
}

impl<'m> EmbeddingFeaturizer<'m> {
    pub fn new(matrix: &'m EmbeddingMatrix, operator: EdgeOperator, graph: &Graph) -> Result<Self> {
        if matrix.len() != graph.node_count() {
            return Err(Error::Dimension {
                expected: graph.node_count(),
                got: matrix.len(),
            });
        }
        Ok(EmbeddingFeaturizer { matrix, operator })
    }
}

impl Featurizer for EmbeddingFeaturizer<'_> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn feature_names(&self) -> Vec<String> {
        (0..self.matrix.dim())
            .map(|i| format!("{}{i}", self.operator.name()))
            .collect()
    }

    fn features(&self, pair: Pair) -> Result<Vec<f64>> {
        edge_vector(self.matrix, pair.lo(), pair.hi(), self.operator)
    }
}
