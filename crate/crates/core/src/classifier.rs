//! Balanced training sets drawn from the learning graph and an
//! L2-regularised logistic model whose decision function ranks pairs.
//!
//! Features are standardised before fitting. The objective is the mean
//! negative log-likelihood plus `λ/2·‖w‖²` (bias unpenalised), minimised
//! by full-batch gradient descent with Armijo backtracking.

use std::collections::HashSet;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Featurizer;
use crate::graph::{Graph, Pair};
use crate::rng::{random_non_edge, seeded_rng};

pub const DEFAULT_POSITIVE_FRACTION: f64 = 0.25;
pub const DEFAULT_L2_LAMBDA: f64 = 1e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 5000;

/// Labelled feature rows, half positive and half negative.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub dim: usize,
    /// Row-major, `rows() × dim`.
    pub features: Vec<f64>,
    pub labels: Vec<bool>,
    pub pairs: Vec<Pair>,
    pub feature_names: Vec<String>,
    pub positive_fraction_of_edges: f64,
    pub seed: u64,
}

impl TrainingSet {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Builds a set directly from rows; used for synthetic problems.
    pub fn from_rows(dim: usize, rows: Vec<(Vec<f64>, bool)>) -> Result<Self> {
        let mut features = Vec::with_capacity(rows.len() * dim);
        let mut labels = Vec::with_capacity(rows.len());
        for (x, y) in rows {
            if x.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: x.len(),
                });
            }
            features.extend(x);
            labels.push(y);
        }
        Ok(TrainingSet {
            dim,
            features,
            labels,
            pairs: Vec::new(),
            feature_names: (0..dim).map(|i| format!("x{i}")).collect(),
            positive_fraction_of_edges: f64::NAN,
            seed: 0,
        })
    }
}

/// Samples `⌊fraction·|E|⌋` learning edges as positives and as many
/// distinct non-adjacent pairs as negatives.
///
/// Positive edges stay in the graph while their own features are computed.
pub fn build_training_set<F: Featurizer + ?Sized>(
    graph: &Graph,
    featurizer: &F,
    positive_fraction: f64,
    seed: u64,
) -> Result<TrainingSet> {
    if !(positive_fraction > 0.0 && positive_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "positive fraction must lie in (0, 1], got {positive_fraction}"
        )));
    }
    let n = graph.node_count() as f64;
    let m = graph.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let density = m as f64 / (n * (n - 1.0) / 2.0);
    if density > 0.5 {
        return Err(Error::Insufficient(format!(
            "graph density {density:.3} exceeds 0.5; rejection sampling of non-edges is not viable"
        )));
    }
    let count = (positive_fraction * m as f64).floor() as usize;
    if count == 0 {
        return Err(Error::Insufficient(
            "too few learning edges for a training set".into(),
        ));
    }

    let mut rng = seeded_rng(seed);
    let edges: Vec<Pair> = graph.edges().collect();
    let mut chosen = index::sample(&mut rng, m, count).into_vec();
    chosen.sort_unstable();
    let mut pairs: Vec<Pair> = chosen.into_iter().map(|i| edges[i]).collect();

    let mut negatives = HashSet::with_capacity(count);
    while negatives.len() < count {
        let p = random_non_edge(graph, &mut rng);
        if negatives.insert(p) {
            pairs.push(p);
        }
    }
    let labels: Vec<bool> = (0..2 * count).map(|i| i < count).collect();
    let features = featurizer.feature_matrix(&pairs)?;
    Ok(TrainingSet {
        dim: featurizer.dim(),
        features,
        labels,
        pairs,
        feature_names: featurizer.feature_names(),
        positive_fraction_of_edges: positive_fraction,
        seed,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub l2_lambda: f64,
    /// Stop once the gradient max-norm falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            l2_lambda: DEFAULT_L2_LAMBDA,
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_max_norm: f64,
}

/// Fitted model; scores are `w·((x − mean) / std) + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub l2_lambda: f64,
    pub convergence: Convergence,
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Pre-sigmoid linear score.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.score_unchecked(x))
    }

    #[inline]
    fn score_unchecked(&self, x: &[f64]) -> f64 {
        let mut z = self.bias;
        for (((xi, w), m), s) in x
            .iter()
            .zip(&self.weights)
            .zip(&self.feature_means)
            .zip(&self.feature_stds)
        {
            z += w * (xi - m) / s;
        }
        z
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.decision_score(x).map(sigmoid)
    }

    /// Scores every pair in parallel without materialising the feature
    /// matrix.
    pub fn score_pairs<F: Featurizer + ?Sized>(
        &self,
        featurizer: &F,
        pairs: &[Pair],
    ) -> Result<Vec<f64>> {
        if featurizer.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: featurizer.dim(),
            });
        }
        pairs
            .par_iter()
            .map(|&p| featurizer.features(p).map(|x| self.score_unchecked(&x)))
            .collect()
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularised logistic loss over standardised rows. Parameters are laid
/// out as `[w_0, …, w_{d-1}, b]`.
pub struct LogisticObjective {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    l2_lambda: f64,
}

impl LogisticObjective {
    /// Takes already standardised features.
    pub fn new(dim: usize, x: Vec<f64>, labels: &[bool], l2_lambda: f64) -> Self {
        assert_eq!(x.len(), dim * labels.len());
        LogisticObjective {
            dim,
            x,
            y: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
            l2_lambda,
        }
    }

    pub fn param_len(&self) -> usize {
        self.dim + 1
    }

    fn margin(&self, params: &[f64], i: usize) -> f64 {
        let row = &self.x[i * self.dim..(i + 1) * self.dim];
        row.iter().zip(params).map(|(a, w)| a * w).sum::<f64>() + params[self.dim]
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.l2_lambda * params[..self.dim].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let n = self.y.len() as f64;
        let nll: f64 = (0..self.y.len())
            .map(|i| {
                let z = self.margin(params, i);
                softplus(z) - self.y[i] * z
            })
            .sum();
        nll / n + self.penalty(params)
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let n = self.y.len() as f64;
        let mut grad = vec![0.0; self.param_len()];
        let mut nll = 0.0;
        for i in 0..self.y.len() {
            let z = self.margin(params, i);
            nll += softplus(z) - self.y[i] * z;
            let r = sigmoid(z) - self.y[i];
            let row = &self.x[i * self.dim..(i + 1) * self.dim];
            for (g, a) in grad.iter_mut().zip(row) {
                *g += r * a;
            }
            grad[self.dim] += r;
        }
        for g in grad.iter_mut() {
            *g /= n;
        }
        for (g, w) in grad[..self.dim].iter_mut().zip(params) {
            *g += self.l2_lambda * w;
        }
        (nll / n + self.penalty(params), grad)
    }
}

/// Per-feature mean and population standard deviation; constant features
/// get a unit deviation.
pub fn standardization(set: &TrainingSet) -> (Vec<f64>, Vec<f64>) {
    let (d, n) = (set.dim, set.rows() as f64);
    let mut mean = vec![0.0; d];
    for i in 0..set.rows() {
        for (m, x) in mean.iter_mut().zip(set.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for i in 0..set.rows() {
        for ((v, x), m) in var.iter_mut().zip(set.row(i)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var
        .into_iter()
        .zip(&mean)
        .map(|(v, m)| {
            let s = (v / n).sqrt();
            // relative test catches constants perturbed by rounding
            if s <= 1e-12 * m.abs().max(1.0) {
                1.0
            } else {
                s
            }
        })
        .collect();
    (mean, std)
}

fn validate(set: &TrainingSet) -> Result<()> {
    for i in 0..set.rows() {
        if set.row(i).iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("training row {i}")));
        }
    }
    let positives = set.labels.iter().filter(|&&l| l).count();
    let negatives = set.rows() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::Insufficient(format!(
            "need at least 2 rows per class, have {positives} positive / {negatives} negative"
        )));
    }
    Ok(())
}

pub fn fit_logistic(set: &TrainingSet, options: &FitOptions) -> Result<LogisticModel> {
    fit_logistic_from(set, options, None)
}

/// Like [`fit_logistic`], starting from explicit parameters
/// `[w_0, …, w_{d-1}, b]` in standardised space instead of zeros.
pub fn fit_logistic_from(
    set: &TrainingSet,
    options: &FitOptions,
    init: Option<&[f64]>,
) -> Result<LogisticModel> {
    validate(set)?;
    if !(options.l2_lambda >= 0.0 && options.tolerance > 0.0) {
        return Err(Error::Config(
            "l2_lambda must be >= 0 and tolerance > 0".into(),
        ));
    }
    let (mean, std) = standardization(set);
    let d = set.dim;
    let mut x = set.features.clone();
    for row in x.chunks_mut(d) {
        for ((v, m), s) in row.iter_mut().zip(&mean).zip(&std) {
            *v = (*v - m) / s;
        }
    }
    let objective = LogisticObjective::new(d, x, &set.labels, options.l2_lambda);
    let mut params = match init {
        Some(p) if p.len() == d + 1 => p.to_vec(),
        Some(p) => {
            return Err(Error::Dimension {
                expected: d + 1,
                got: p.len(),
            })
        }
        None => vec![0.0; d + 1],
    };

    // Armijo backtracking from a Barzilai-Borwein trial step
    let (mut loss, mut grad) = objective.value_and_gradient(&params);
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let max_norm = |g: &[f64]| g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    while max_norm(&grad) >= options.tolerance && iterations < options.max_iters {
        let sq: f64 = grad.iter().map(|g| g * g).sum();
        let mut trial;
        loop {
            trial = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - step * g)
                .collect::<Vec<_>>();
            let trial_loss = objective.value(&trial);
            if trial_loss <= loss - 1e-4 * step * sq || step < 1e-16 {
                break;
            }
            step *= 0.5;
        }
        if step < 1e-16 {
            break;
        }
        let (new_loss, new_grad) = objective.value_and_gradient(&trial);
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..params.len() {
            let si = trial[i] - params[i];
            ss += si * si;
            sy += si * (new_grad[i] - grad[i]);
        }
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-10, 1e6)
        } else {
            (step * 2.0).min(1e6)
        };
        params = trial;
        (loss, grad) = (new_loss, new_grad);
        iterations += 1;
    }
    let gradient_max_norm = max_norm(&grad);
    let convergence = Convergence {
        converged: gradient_max_norm < options.tolerance,
        iterations,
        final_loss: loss,
        gradient_max_norm,
    };
    if !convergence.converged {
        log::info!(
            "logistic fit stopped after {iterations} iterations, gradient max-norm {gradient_max_norm:.3e}"
        );
    }
    Ok(LogisticModel {
        feature_names: set.feature_names.clone(),
        weights: params[..d].to_vec(),
        bias: params[d],
        feature_means: mean,
        feature_stds: std,
        l2_lambda: options.l2_lambda,
        convergence,
    })
}
