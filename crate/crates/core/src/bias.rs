//! fraction@k curves: the share of the top-k ranked pairs that have a
//! given topological property, with two reference levels (the share among
//! true future edges and among all sampled candidate pairs).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::community::Partition;
use crate::error::{Error, Result};
use crate::evaluation::{prefix_counts, EvalSample, ScoredRanking};
use crate::graph::{DistanceClass, Graph, NodeId, Pair};
use crate::rng::seeded_rng;
use crate::split::Split;

pub const DEFAULT_HUB_FRACTION: f64 = 0.1;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasProperty {
    /// Endpoints share a neighbour.
    ShortDistance,
    /// At least one endpoint is a hub.
    InvolvesHub,
    /// Endpoints lie in the same community.
    IntraCommunity,
}

impl BiasProperty {
    pub const ALL: [BiasProperty; 3] = [
        BiasProperty::ShortDistance,
        BiasProperty::InvolvesHub,
        BiasProperty::IntraCommunity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BiasProperty::ShortDistance => "short_distance",
            BiasProperty::InvolvesHub => "involves_hub",
            BiasProperty::IntraCommunity => "intra_community",
        }
    }
}

impl fmt::Display for BiasProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BiasProperty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BiasProperty::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown bias property `{s}`")))
    }
}

/// Nodes whose degree reaches that of the node ranked `⌈fraction·n⌉` by
/// degree. Every node tied at the threshold is included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubSet {
    members: Vec<bool>,
    pub degree_threshold: usize,
    pub top_fraction: f64,
    pub count: usize,
}

impl HubSet {
    #[inline]
    pub fn contains(&self, u: NodeId) -> bool {
        self.members[u.index()]
    }
}

pub fn hub_set(graph: &Graph, top_fraction: f64) -> Result<HubSet> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(Error::Config(format!(
            "hub fraction must lie in (0, 1), got {top_fraction}"
        )));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut degrees = graph.degrees();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    // 0.3 * 10 is 3.0000000000000004 in binary; don't let that round up
    let rank = ((top_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let degree_threshold = degrees[rank - 1];
    let members: Vec<bool> = graph
        .nodes()
        .map(|u| graph.degree(u) >= degree_threshold)
        .collect();
    let count = members.iter().filter(|&&m| m).count();
    Ok(HubSet {
        members,
        degree_threshold,
        top_fraction,
        count,
    })
}

/// Everything needed to test the three properties on the learning graph.
pub struct PropertyContext<'a> {
    pub graph: &'a Graph,
    pub partition: &'a Partition,
    pub hubs: &'a HubSet,
}

impl<'a> PropertyContext<'a> {
    pub fn new(graph: &'a Graph, partition: &'a Partition, hubs: &'a HubSet) -> Result<Self> {
        if partition.len() != graph.node_count() {
            return Err(Error::Dimension {
                expected: graph.node_count(),
                got: partition.len(),
            });
        }
        Ok(PropertyContext {
            graph,
            partition,
            hubs,
        })
    }

    pub fn evaluate(&self, pair: Pair, property: BiasProperty) -> Result<bool> {
        let (u, v) = (pair.lo(), pair.hi());
        if u == v || self.graph.has_edge(u, v) {
            return Err(Error::Contract(format!(
                "bias property of a non-candidate pair ({}, {})",
                self.graph.label(u),
                self.graph.label(v)
            )));
        }
        Ok(match property {
            BiasProperty::ShortDistance => {
                self.graph.distance_class(u, v)? == DistanceClass::AtDistanceTwo
            }
            BiasProperty::InvolvesHub => self.hubs.contains(u) || self.hubs.contains(v),
            BiasProperty::IntraCommunity => {
                self.partition.community(u) == self.partition.community(v)
            }
        })
    }

    pub fn evaluate_all(&self, pairs: &[Pair], property: BiasProperty) -> Result<Vec<bool>> {
        pairs.iter().map(|&p| self.evaluate(p, property)).collect()
    }
}

pub fn pair_property(
    split: &Split,
    partition: &Partition,
    hubs: &HubSet,
    u: NodeId,
    v: NodeId,
    property: BiasProperty,
) -> Result<bool> {
    PropertyContext::new(&split.learning, partition, hubs)?.evaluate(Pair::new(u, v), property)
}

/// One property's fraction@k curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasCurve {
    pub property: BiasProperty,
    pub ks: Vec<usize>,
    /// Pairs with the property among the top `k`.
    pub counts: Vec<usize>,
    pub fraction: Vec<f64>,
    pub ground_truth_ref: f64,
    pub dataset_ref: f64,
}

impl BiasCurve {
    pub fn at(&self, k: usize) -> Option<f64> {
        self.ks
            .iter()
            .position(|&x| x == k)
            .map(|i| self.fraction[i])
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "k,fraction,ground_truth_ref,dataset_ref")?;
        for (k, f) in self.ks.iter().zip(&self.fraction) {
            writeln!(
                out,
                "{k},{f},{},{}",
                self.ground_truth_ref, self.dataset_ref
            )?;
        }
        Ok(())
    }
}

fn share(flags: &[bool], select: impl Fn(usize) -> bool) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for (i, &f) in flags.iter().enumerate() {
        if select(i) {
            total += 1;
            hit += usize::from(f);
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

fn curve_from_order(
    property: BiasProperty,
    ordered_flags: &[bool],
    ks: &[usize],
    ground_truth_ref: f64,
    dataset_ref: f64,
) -> Result<BiasCurve> {
    let prefix = prefix_counts(ordered_flags.iter().copied());
    let mut counts = Vec::with_capacity(ks.len());
    let mut fraction = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 || k > ordered_flags.len() {
            return Err(Error::Insufficient(format!(
                "k = {k} outside the {} ranked pairs",
                ordered_flags.len()
            )));
        }
        counts.push(prefix[k]);
        fraction.push(prefix[k] as f64 / k as f64);
    }
    Ok(BiasCurve {
        property,
        ks: ks.to_vec(),
        counts,
        fraction,
        ground_truth_ref,
        dataset_ref,
    })
}

/// fraction@k of `ranking` for a property evaluator. The reference levels
/// come from the ranked sample itself: positives for the ground truth, all
/// pairs for the dataset.
pub fn fraction_at_k<F>(
    ranking: &ScoredRanking,
    property: BiasProperty,
    evaluator: F,
    ks: &[usize],
) -> Result<BiasCurve>
where
    F: Fn(Pair) -> Result<bool>,
{
    let flags: Vec<bool> = ranking
        .entries()
        .iter()
        .map(|e| evaluator(e.pair))
        .collect::<Result<_>>()?;
    let labels: Vec<bool> = ranking.entries().iter().map(|e| e.label).collect();
    let ground_truth_ref = share(&flags, |i| labels[i]);
    let dataset_ref = share(&flags, |_| true);
    curve_from_order(property, &flags, ks, ground_truth_ref, dataset_ref)
}

/// Curve of an ideal ranker: all positives (seeded random order) ahead of
/// all negatives (seeded random order). `flags` align with `sample.pairs`.
pub fn perfect_prediction_reference(
    sample: &EvalSample,
    property: BiasProperty,
    flags: &[bool],
    ks: &[usize],
    seed: u64,
) -> Result<BiasCurve> {
    if flags.len() != sample.len() {
        return Err(Error::Dimension {
            expected: sample.len(),
            got: flags.len(),
        });
    }
    let mut rng = seeded_rng(seed);
    let mut positives: Vec<bool> = Vec::new();
    let mut negatives: Vec<bool> = Vec::new();
    for (&f, &label) in flags.iter().zip(&sample.labels) {
        if label {
            positives.push(f);
        } else {
            negatives.push(f);
        }
    }
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let ground_truth_ref = share(&positives, |_| true);
    let dataset_ref = share(flags, |_| true);
    positives.extend(negatives);
    curve_from_order(property, &positives, ks, ground_truth_ref, dataset_ref)
}

/// Every k up to 100, then 20 log-spaced points per decade up to `n`,
/// plus `extra` and `n` itself.
pub fn curve_ks(n: usize, extra: &[usize]) -> Vec<usize> {
    let mut ks: Vec<usize> = (1..=n.min(100)).collect();
    let mut i = 1;
    loop {
        let k = (100.0 * 10f64.powf(i as f64 / 20.0)).round() as usize;
        if k >= n {
            break;
        }
        ks.push(k);
        i += 1;
    }
    ks.extend(extra.iter().copied().filter(|&k| k >= 1 && k <= n));
    if n > 0 {
        ks.push(n);
    }
    ks.sort_unstable();
    ks.dedup();
    ks
}
