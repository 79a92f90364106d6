//! Learning / prediction splits for static and timestamped graphs.
//!
//! Both modes keep only the largest connected component of the learning
//! graph. Prediction edges touching a node outside that component cannot be
//! scored and are discarded; the discard counts travel with the split.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Labels, NodeId, Pair, TemporalEdgeList};
use crate::rng::seeded_rng;

pub const DEFAULT_REMOVAL_FRACTION: f64 = 0.2;

pub const LABELS_FILE: &str = "labels.txt";
pub const LEARNING_FILE: &str = "learning.edges";
pub const PREDICTION_FILE: &str = "prediction.edges";
pub const INFO_FILE: &str = "split.json";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Static,
    Temporal,
}

/// Provenance of a split: everything needed to replay or audit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub mode: SplitMode,
    /// Fraction of the input edges forming the learning set.
    pub learning_fraction: f64,
    pub seed: Option<u64>,
    pub input_nodes: usize,
    pub input_edges: usize,
    /// Edges held out before the component filter.
    pub held_out_edges: usize,
    pub learning_nodes: usize,
    pub learning_edges: usize,
    pub prediction_edges: usize,
    pub discarded_outside_component: usize,
    pub discarded_duplicate: usize,
    /// Timestamp of the cut (temporal mode only).
    pub split_time: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Split {
    pub learning: Graph,
    /// Future edges in learning-graph ids, ascending.
    pub prediction: Vec<Pair>,
    prediction_set: HashSet<Pair>,
    pub info: SplitInfo,
}

impl Split {
    pub fn new(learning: Graph, mut prediction: Vec<Pair>, info: SplitInfo) -> Result<Self> {
        prediction.sort_unstable();
        prediction.dedup();
        let n = learning.node_count();
        for p in &prediction {
            if p.is_loop() || p.hi().index() >= n {
                return Err(Error::Contract(format!("invalid prediction pair {p:?}")));
            }
            if learning.has_edge(p.lo(), p.hi()) {
                return Err(Error::Contract(format!(
                    "prediction edge ({}, {}) is already a learning edge",
                    learning.label(p.lo()),
                    learning.label(p.hi())
                )));
            }
        }
        let prediction_set = prediction.iter().copied().collect();
        Ok(Split {
            learning,
            prediction,
            prediction_set,
            info,
        })
    }

    #[inline]
    pub fn is_future_edge(&self, pair: Pair) -> bool {
        self.prediction_set.contains(&pair)
    }
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {f}")))
    }
}

fn component_warning(kept: usize, total: usize) -> Option<String> {
    (2 * kept < total)
        .then(|| format!("largest component keeps only {kept} of {total} nodes (< 50%)"))
}

/// Removes `⌊removal_fraction·|E|⌋` uniformly chosen edges and keeps the
/// largest component of what remains.
pub fn split_static(graph: &Graph, removal_fraction: f64, seed: u64) -> Result<Split> {
    check_fraction("removal fraction", removal_fraction)?;
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let edges: Vec<Pair> = graph.edges().collect();
    let m = edges.len();
    let removed_count = (removal_fraction * m as f64).floor() as usize;

    let mut rng = seeded_rng(seed);
    let mut removed = vec![false; m];
    for i in index::sample(&mut rng, m, removed_count) {
        removed[i] = true;
    }
    let kept: Vec<(NodeId, NodeId)> = edges
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(p, _)| (p.lo(), p.hi()))
        .collect();
    let remainder = Graph::from_edges(graph.labels().clone(), &kept);
    let sub = remainder.largest_component()?;

    let mut prediction = Vec::new();
    let mut outside = 0;
    for (p, _) in edges.iter().zip(&removed).filter(|(_, &r)| r) {
        match (
            sub.old_to_new[p.lo().index()],
            sub.old_to_new[p.hi().index()],
        ) {
            (Some(a), Some(b)) => prediction.push(Pair::new(a, b)),
            _ => outside += 1,
        }
    }

    let mut warnings = Vec::new();
    if !graph.is_connected() {
        warnings.push("input graph is not connected".to_owned());
    }
    warnings.extend(component_warning(
        sub.graph.node_count(),
        graph.node_count(),
    ));
    for w in &warnings {
        log::warn!("{w}");
    }

    let info = SplitInfo {
        mode: SplitMode::Static,
        learning_fraction: 1.0 - removal_fraction,
        seed: Some(seed),
        input_nodes: graph.node_count(),
        input_edges: m,
        held_out_edges: removed_count,
        learning_nodes: sub.graph.node_count(),
        learning_edges: sub.graph.edge_count(),
        prediction_edges: prediction.len(),
        discarded_outside_component: outside,
        discarded_duplicate: 0,
        split_time: None,
        warnings,
    };
    Split::new(sub.graph, prediction, info)
}

/// Cuts a time-ordered edge list at the timestamp of the edge ranked
/// `⌈learning_fraction·|E|⌉`; everything at or before the cut is learning
/// data.
pub fn split_temporal(list: &TemporalEdgeList, learning_fraction: f64) -> Result<Split> {
    check_fraction("learning fraction", learning_fraction)?;
    let m = list.edges.len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    if list.edges.windows(2).any(|w| w[0].time > w[1].time) {
        return Err(Error::Contract(
            "temporal edge list is not sorted by time".into(),
        ));
    }
    let rank = ((learning_fraction * m as f64).ceil() as usize).clamp(1, m);
    let cut = list.edges[rank - 1].time;
    let learn_end = list.edges.partition_point(|e| e.time <= cut);
    if learn_end == m {
        return Err(Error::Insufficient(format!(
            "no edge is later than the cut at t={cut}; cannot form a prediction set"
        )));
    }

    let mut labels = Labels::new();
    let learning_ids: Vec<(NodeId, NodeId)> = list.edges[..learn_end]
        .iter()
        .map(|e| (labels.intern(&e.source), labels.intern(&e.target)))
        .collect();
    let input_nodes = {
        let mut all = labels.clone();
        for e in &list.edges[learn_end..] {
            all.intern(&e.source);
            all.intern(&e.target);
        }
        all.len()
    };
    let learning_full = Graph::from_edges(labels, &learning_ids);
    let sub = learning_full.largest_component()?;
    let learning = sub.graph;

    let mut prediction = HashSet::new();
    let (mut outside, mut duplicate) = (0, 0);
    for e in &list.edges[learn_end..] {
        let (Some(a), Some(b)) = (learning.node(&e.source), learning.node(&e.target)) else {
            outside += 1;
            continue;
        };
        if a == b || learning.has_edge(a, b) || !prediction.insert(Pair::new(a, b)) {
            duplicate += 1;
        }
    }

    let warnings: Vec<String> =
        component_warning(learning.node_count(), learning_full.node_count())
            .into_iter()
            .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    let prediction: Vec<Pair> = prediction.into_iter().collect();
    let info = SplitInfo {
        mode: SplitMode::Temporal,
        learning_fraction,
        seed: None,
        input_nodes,
        input_edges: m,
        held_out_edges: m - learn_end,
        learning_nodes: learning.node_count(),
        learning_edges: learning.edge_count(),
        prediction_edges: prediction.len(),
        discarded_outside_component: outside,
        discarded_duplicate: duplicate,
        split_time: Some(cut),
        warnings,
    };
    Split::new(learning, prediction, info)
}

fn write_pairs(path: &Path, graph: &Graph, pairs: impl Iterator<Item = Pair>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for p in pairs {
        writeln!(out, "{} {}", graph.label(p.lo()), graph.label(p.hi()))?;
    }
    out.flush()?;
    Ok(())
}

fn read_pairs(path: &Path, labels: &Labels) -> Result<Vec<(NodeId, NodeId)>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut tokens = line.split_whitespace();
        let (Some(u), Some(v), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("{}: expected `u v`", path.display()),
            });
        };
        let lookup = |s: &str| {
            labels.get(s).ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("{}: unknown node `{s}`", path.display()),
            })
        };
        out.push((lookup(u)?, lookup(v)?));
    }
    Ok(out)
}

/// Writes the label table, both edge lists and the JSON provenance record
/// into `dir`.
pub fn write_split(dir: &Path, split: &Split) -> Result<()> {
    fs::create_dir_all(dir)?;
    let g = &split.learning;
    let mut labels = BufWriter::new(fs::File::create(dir.join(LABELS_FILE))?);
    for name in g.labels().names() {
        writeln!(labels, "{name}")?;
    }
    labels.flush()?;
    write_pairs(&dir.join(LEARNING_FILE), g, g.edges())?;
    write_pairs(
        &dir.join(PREDICTION_FILE),
        g,
        split.prediction.iter().copied(),
    )?;
    let mut info = serde_json::to_string_pretty(&split.info)?;
    info.push('\n');
    fs::write(dir.join(INFO_FILE), info)?;
    Ok(())
}

pub fn read_split(dir: &Path) -> Result<Split> {
    let names: Vec<String> = BufReader::new(fs::File::open(dir.join(LABELS_FILE))?)
        .lines()
        .collect::<std::io::Result<_>>()?;
    let labels = Labels::from_names(names)?;
    let learning_edges = read_pairs(&dir.join(LEARNING_FILE), &labels)?;
    let prediction = read_pairs(&dir.join(PREDICTION_FILE), &labels)?
        .into_iter()
        .map(|(u, v)| Pair::new(u, v))
        .collect();
    let info: SplitInfo = serde_json::from_slice(&fs::read(dir.join(INFO_FILE))?)?;
    let learning = Graph::from_edges(labels, &learning_edges);
    Split::new(learning, prediction, info)
}
