//! Evaluation samples over the non-edges of the learning graph and ranking
//! metrics (average precision, AUROC, precision@k).
//!
//! The candidate population is every unordered pair not linked in the
//! learning graph. It is never materialised: samples are drawn by rejection
//! and deduplicated through a hash set of canonical pairs.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Pair;
use crate::rng::{random_non_edge, seeded_rng};
use crate::split::Split;

pub const DEFAULT_SAMPLE_SIZE: usize = 500_000;
pub const DEFAULT_MIN_POSITIVES: usize = 10;
pub const DEFAULT_QUOTA_POSITIVES: usize = 1000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Fixed size, population class ratio preserved.
    Ratio,
    /// Drawn until a fixed number of positives is reached.
    PositiveQuota,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleInfo {
    pub kind: SampleKind,
    pub seed: u64,
    pub size: usize,
    pub positives: usize,
    pub population: u64,
    pub population_positives: usize,
    pub population_positive_ratio: f64,
    pub realized_positive_ratio: f64,
}

/// Labelled candidate pairs; label `true` marks a future edge.
#[derive(Clone, Debug)]
pub struct EvalSample {
    pub pairs: Vec<Pair>,
    pub labels: Vec<bool>,
    pub info: SampleInfo,
}

impl EvalSample {
    fn new(
        pairs: Vec<Pair>,
        labels: Vec<bool>,
        kind: SampleKind,
        seed: u64,
        split: &Split,
    ) -> Self {
        let positives = labels.iter().filter(|&&l| l).count();
        let population = split.learning.non_edge_count();
        let info = SampleInfo {
            kind,
            seed,
            size: pairs.len(),
            positives,
            population,
            population_positives: split.prediction.len(),
            population_positive_ratio: split.prediction.len() as f64 / population as f64,
            realized_positive_ratio: if pairs.is_empty() {
                0.0
            } else {
                positives as f64 / pairs.len() as f64
            },
        };
        EvalSample {
            pairs,
            labels,
            info,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.info.positives
    }
}

/// Number of positives the ratio sample must hold.
pub fn ratio_positive_count(
    target_size: usize,
    population: u64,
    future_edges: usize,
    min_positives: usize,
) -> usize {
    let proportional =
        (target_size as f64 * future_edges as f64 / population as f64).round() as usize;
    proportional.max(min_positives)
}

/// Fixed-size sample whose positive share follows the population ratio,
/// with at least `min_positives` positives.
pub fn build_ratio_sample(
    split: &Split,
    target_size: usize,
    min_positives: usize,
    seed: u64,
) -> Result<EvalSample> {
    let future = split.prediction.len();
    if future == 0 {
        return Err(Error::Insufficient("prediction set is empty".into()));
    }
    if future < min_positives {
        return Err(Error::Insufficient(format!(
            "prediction set holds {future} edges, fewer than the required {min_positives} positives"
        )));
    }
    let population = split.learning.non_edge_count();
    if target_size as u64 > population {
        return Err(Error::Insufficient(format!(
            "sample size {target_size} exceeds the {population} candidate pairs"
        )));
    }
    let k = ratio_positive_count(target_size, population, future, min_positives);
    if k > target_size {
        return Err(Error::Config(format!(
            "sample size {target_size} is below the positive floor {k}"
        )));
    }
    let negatives = target_size - k;
    if negatives as u64 > population - future as u64 {
        return Err(Error::Insufficient(
            "not enough negative candidate pairs".into(),
        ));
    }

    let mut rng = seeded_rng(seed);
    let mut chosen = index::sample(&mut rng, future, k).into_vec();
    chosen.sort_unstable();
    let mut pairs: Vec<Pair> = chosen.into_iter().map(|i| split.prediction[i]).collect();
    let mut seen: HashSet<Pair> = HashSet::with_capacity(negatives);
    while seen.len() < negatives {
        let p = random_non_edge(&split.learning, &mut rng);
        if !split.is_future_edge(p) && seen.insert(p) {
            pairs.push(p);
        }
    }
    let labels = (0..target_size).map(|i| i < k).collect();
    Ok(EvalSample::new(
        pairs,
        labels,
        SampleKind::Ratio,
        seed,
        split,
    ))
}

/// Draws distinct uniform candidate pairs until `n_positives` of them are
/// future edges; every draw is kept.
pub fn build_positive_quota_sample(
    split: &Split,
    n_positives: usize,
    seed: u64,
) -> Result<EvalSample> {
    if n_positives == 0 {
        return Err(Error::Config("positive quota must be at least 1".into()));
    }
    if split.prediction.len() < n_positives {
        return Err(Error::Insufficient(format!(
            "prediction set holds {} edges, fewer than the quota of {n_positives}",
            split.prediction.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut seen = HashSet::new();
    let (mut pairs, mut labels) = (Vec::new(), Vec::new());
    let mut positives = 0;
    while positives < n_positives {
        let p = random_non_edge(&split.learning, &mut rng);
        if !seen.insert(p) {
            continue;
        }
        let label = split.is_future_edge(p);
        positives += usize::from(label);
        pairs.push(p);
        labels.push(label);
    }
    Ok(EvalSample::new(
        pairs,
        labels,
        SampleKind::PositiveQuota,
        seed,
        split,
    ))
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RankedEntry {
    pub pair: Pair,
    pub score: f64,
    pub label: bool,
}

/// Entries ordered by score descending, ties by canonical pair ascending.
#[derive(Clone, Debug)]
pub struct ScoredRanking {
    entries: Vec<RankedEntry>,
    positives: usize,
}

impl ScoredRanking {
    pub fn new(pairs: &[Pair], scores: &[f64], labels: &[bool]) -> Result<Self> {
        if pairs.len() != scores.len() || pairs.len() != labels.len() {
            return Err(Error::Dimension {
                expected: pairs.len(),
                got: scores.len().min(labels.len()),
            });
        }
        if let Some(i) = scores.iter().position(|s| s.is_nan()) {
            return Err(Error::NonFinite(format!("score of pair {i}")));
        }
        let mut entries: Vec<RankedEntry> = pairs
            .iter()
            .zip(scores)
            .zip(labels)
            .map(|((&pair, &score), &label)| RankedEntry { pair, score, label })
            .collect();
        entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.pair.cmp(&b.pair))
        });
        let positives = labels.iter().filter(|&&l| l).count();
        Ok(ScoredRanking { entries, positives })
    }

    pub fn from_sample(sample: &EvalSample, scores: &[f64]) -> Result<Self> {
        Self::new(&sample.pairs, scores, &sample.labels)
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.entries.len() - self.positives
    }
}

/// Mean over positives of the precision at their rank.
pub fn average_precision(ranking: &ScoredRanking) -> Result<f64> {
    if ranking.positives() == 0 {
        return Err(Error::Insufficient(
            "average precision needs at least one positive".into(),
        ));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, e) in ranking.entries().iter().enumerate() {
        if e.label {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / ranking.positives() as f64)
}

/// Probability that a positive outscores a negative, ties counting half.
/// Equal to the Mann-Whitney rank statistic with mid-ranks.
pub fn auroc(ranking: &ScoredRanking) -> Result<f64> {
    let (p, n) = (ranking.positives(), ranking.negatives());
    if p == 0 || n == 0 {
        return Err(Error::Insufficient("AUROC needs both classes".into()));
    }
    let entries = ranking.entries();
    // walk tie groups from the bottom; count 2× wins to stay integral
    let mut negatives_below: u128 = 0;
    let mut twice_wins: u128 = 0;
    let mut end = entries.len();
    while end > 0 {
        let score = entries[end - 1].score;
        let mut start = end - 1;
        while start > 0 && entries[start - 1].score.total_cmp(&score) == Ordering::Equal {
            start -= 1;
        }
        let group_pos = entries[start..end].iter().filter(|e| e.label).count() as u128;
        let group_neg = (end - start) as u128 - group_pos;
        twice_wins += 2 * group_pos * negatives_below + group_pos * group_neg;
        negatives_below += group_neg;
        end = start;
    }
    Ok(twice_wins as f64 / (2.0 * p as f64 * n as f64))
}

/// Fraction of positives among the top `k`, for each requested `k`.
pub fn precision_at_k(ranking: &ScoredRanking, ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    let prefix = prefix_counts(ranking.entries().iter().map(|e| e.label));
    ks.iter()
        .map(|&k| {
            if k == 0 {
                Err(Error::Config("precision@k needs k >= 1".into()))
            } else if k > ranking.len() {
                Err(Error::Insufficient(format!(
                    "k = {k} exceeds the {} ranked pairs",
                    ranking.len()
                )))
            } else {
                Ok((k, prefix[k] as f64 / k as f64))
            }
        })
        .collect()
}

/// `out[k]` = number of `true` among the first `k` flags.
pub fn prefix_counts(flags: impl Iterator<Item = bool>) -> Vec<usize> {
    let mut out = vec![0];
    for f in flags {
        out.push(out.last().unwrap() + usize::from(f));
    }
    out
}

/// Per-run metrics for one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ap: f64,
    pub auroc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub fn evaluate(ranking: &ScoredRanking) -> Result<RunMetrics> {
    Ok(RunMetrics {
        ap: average_precision(ranking)?,
        auroc: auroc(ranking)?,
        n_pos: ranking.positives(),
        n_neg: ranking.negatives(),
    })
}

/// Mean and population standard deviation over repeated runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / n
        };
        let std = if values.is_empty() {
            f64::NAN
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
        };
        Summary {
            values: values.to_vec(),
            mean,
            std,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ap: Summary,
    pub auroc: Summary,
    pub runs: Vec<RunMetrics>,
}

impl MetricReport {
    pub fn from_runs(runs: Vec<RunMetrics>) -> Self {
        let ap: Vec<f64> = runs.iter().map(|r| r.ap).collect();
        let roc: Vec<f64> = runs.iter().map(|r| r.auroc).collect();
        MetricReport {
            ap: Summary::from_values(&ap),
            auroc: Summary::from_values(&roc),
            runs,
        }
    }
}
