//! Undirected simple graphs in CSR form, edge-list ingestion, connected
//! components and the distance-two test used by the bias audit.
//!
//! Node ids are dense `u32` indices assigned in first-appearance order of
//! the input labels. Adjacency lists are sorted, so pair queries can be
//! answered with a linear merge.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index into a [`Graph`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Unordered node pair stored canonically as `(min, max)`.
///
/// The derived ordering is the canonical pair order used to break score
/// ties in rankings.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    lo: NodeId,
    hi: NodeId,
}

impl Pair {
    pub fn new(u: NodeId, v: NodeId) -> Self {
        if u <= v {
            Pair { lo: u, hi: v }
        } else {
            Pair { lo: v, hi: u }
        }
    }

    #[inline]
    pub fn lo(self) -> NodeId {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> NodeId {
        self.hi
    }

    #[inline]
    pub fn is_loop(self) -> bool {
        self.lo == self.hi
    }
}

/// Bijection between node labels and dense ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Labels {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl Labels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the map from labels listed in id order. Duplicate labels are
    /// rejected.
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels = Labels::new();
        for name in names {
            let name = name.into();
            if labels.index.contains_key(&name) {
                return Err(Error::Config(format!("duplicate node label `{name}`")));
            }
            labels.intern(&name);
        }
        Ok(labels)
    }

    /// Returns the id of `label`, assigning the next free id on first sight.
    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Counters reported by the edge-list parsers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines_read: usize,
    pub comment_or_blank: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
    pub edges_kept: usize,
}

/// Static edge list after self-loop and duplicate removal, in input order.
#[derive(Clone, Debug, Default)]
pub struct EdgeList {
    pub edges: Vec<(String, String)>,
    pub stats: IngestStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalEdge {
    pub source: String,
    pub target: String,
    pub time: f64,
}

/// Timestamped edges sorted by time ascending; equal timestamps keep input
/// order.
#[derive(Clone, Debug, Default)]
pub struct TemporalEdgeList {
    pub edges: Vec<TemporalEdge>,
    pub stats: IngestStats,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Lines carry an edge weight after the two endpoints; it is discarded.
    pub weighted: bool,
    /// Lines carry a timestamp as their last token.
    pub temporal: bool,
}

#[derive(Clone, Debug)]
pub enum ParsedEdges {
    Static(EdgeList),
    Temporal(TemporalEdgeList),
}

/// Parses an edge list. Static lines are `u v` (`u v w` when weighted),
/// temporal lines are `u v t` (`u v w t` when weighted). Lines starting with
/// `#` or `%` and blank lines are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R, options: ParseOptions) -> Result<ParsedEdges> {
    if options.temporal {
        parse_temporal_edges(reader, options.weighted).map(ParsedEdges::Temporal)
    } else {
        parse_static_edges(reader, options.weighted).map(ParsedEdges::Static)
    }
}

fn expected_tokens(weighted: bool, temporal: bool) -> usize {
    2 + usize::from(weighted) + usize::from(temporal)
}

/// Splits every data line into its tokens, checking the token count.
fn for_each_record<R, F>(reader: R, arity: usize, stats: &mut IngestStats, mut f: F) -> Result<()>
where
    R: BufRead,
    F: FnMut(usize, &[&str], &mut IngestStats) -> Result<()>,
{
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        stats.lines_read += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            stats.comment_or_blank += 1;
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != arity {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {arity} tokens, found {}", tokens.len()),
            });
        }
        f(lineno, &tokens, stats)?;
    }
    Ok(())
}

fn parse_real(token: &str, line: usize, what: &str) -> Result<f64> {
    let value: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} `{token}` as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what} `{token}` is not finite"),
        });
    }
    Ok(value)
}

pub fn parse_static_edges<R: BufRead>(reader: R, weighted: bool) -> Result<EdgeList> {
    let mut out = EdgeList::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let arity = expected_tokens(weighted, false);
    let mut stats = IngestStats::default();
    let edges = &mut out.edges;
    for_each_record(reader, arity, &mut stats, |line, tokens, stats| {
        if weighted {
            parse_real(tokens[2], line, "weight")?;
        }
        let (u, v) = (tokens[0], tokens[1]);
        if u == v {
            stats.self_loops_dropped += 1;
            return Ok(());
        }
        let key = if u <= v {
            (u.to_owned(), v.to_owned())
        } else {
            (v.to_owned(), u.to_owned())
        };
        if !seen.insert(key) {
            stats.duplicates_dropped += 1;
            return Ok(());
        }
        edges.push((u.to_owned(), v.to_owned()));
        Ok(())
    })?;
    out.stats = stats;
    if out.edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    out.stats.edges_kept = out.edges.len();
    Ok(out)
}

pub fn parse_temporal_edges<R: BufRead>(reader: R, weighted: bool) -> Result<TemporalEdgeList> {
    let mut stats = IngestStats::default();
    let mut raw = Vec::new();
    let arity = expected_tokens(weighted, true);
    for_each_record(reader, arity, &mut stats, |line, tokens, stats| {
        if weighted {
            parse_real(tokens[2], line, "weight")?;
        }
        let time = parse_real(tokens[arity - 1], line, "timestamp")?;
        if tokens[0] == tokens[1] {
            stats.self_loops_dropped += 1;
            return Ok(());
        }
        raw.push(TemporalEdge {
            source: tokens[0].to_owned(),
            target: tokens[1].to_owned(),
            time,
        });
        Ok(())
    })?;
    // stable: equal timestamps keep input order
    raw.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut edges = Vec::with_capacity(raw.len());
    for edge in raw {
        let key = if edge.source <= edge.target {
            (edge.source.clone(), edge.target.clone())
        } else {
            (edge.target.clone(), edge.source.clone())
        };
        if seen.insert(key) {
            edges.push(edge);
        } else {
            stats.duplicates_dropped += 1;
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    stats.edges_kept = edges.len();
    Ok(TemporalEdgeList { edges, stats })
}

/// Whether a non-adjacent pair is at distance two or further apart.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceClass {
    AtDistanceTwo,
    AtDistanceThreeOrMore,
}

/// Immutable undirected simple graph with sorted CSR adjacency.
#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    labels: Labels,
    edge_count: usize,
}

/// A subgraph together with the id translation from its parent.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: Graph,
    /// `old_to_new[old]` is the id of `old` in `graph`, if it survived.
    pub old_to_new: Vec<Option<NodeId>>,
}

impl Graph {
    /// Builds a graph over every node in `labels`. Self-loops and repeated
    /// edges are dropped.
    pub fn from_edges(labels: Labels, edges: &[(NodeId, NodeId)]) -> Self {
        let n = labels.len();
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            if u != v {
                degree[u.index()] += 1;
                degree[v.index()] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![NodeId(0); offsets[n]];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            neighbors[cursor[u.index()]] = v;
            cursor[u.index()] += 1;
            neighbors[cursor[v.index()]] = u;
            cursor[v.index()] += 1;
        }

        // sort and dedup each row, compacting in place
        let mut compact = Vec::with_capacity(neighbors.len());
        let mut new_offsets = Vec::with_capacity(n + 1);
        new_offsets.push(0);
        for u in 0..n {
            let row = &mut neighbors[offsets[u]..offsets[u + 1]];
            row.sort_unstable();
            let start = compact.len();
            for &w in row.iter() {
                if compact.len() == start || *compact.last().unwrap() != w {
                    compact.push(w);
                }
            }
            new_offsets.push(compact.len());
        }
        let edge_count = compact.len() / 2;
        Graph {
            offsets: new_offsets,
            neighbors: compact,
            labels,
            edge_count,
        }
    }

    /// Convenience constructor from label pairs, ids in first-appearance order.
    pub fn from_labeled_edges<'a, I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut labels = Labels::new();
        let ids: Vec<(NodeId, NodeId)> = edges
            .into_iter()
            .map(|(u, v)| (labels.intern(u), labels.intern(v)))
            .collect();
        Graph::from_edges(labels, &ids)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as u32).map(NodeId)
    }

    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[u.index()]..self.offsets[u.index() + 1]]
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.offsets[u.index() + 1] - self.offsets[u.index()]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.nodes().map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn label(&self, u: NodeId) -> &str {
        self.labels.name(u)
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.labels.get(label)
    }

    /// Edges as canonical pairs, ascending.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.nodes().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| Pair::new(u, v))
        })
    }

    /// Number of unordered node pairs that are not edges.
    pub fn non_edge_count(&self) -> u64 {
        let n = self.node_count() as u64;
        n * n.saturating_sub(1) / 2 - self.edge_count as u64
    }

    /// Component index per node. Components are numbered in order of their
    /// smallest node id.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(NodeId(start as u32));
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    if comp[w.index()] == usize::MAX {
                        comp[w.index()] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() > 0 && self.connected_components().iter().all(|&c| c == 0)
    }

    /// Subgraph induced by `keep`, relabelled densely in ascending old-id
    /// order.
    pub fn induced_subgraph(&self, keep: &[bool]) -> Subgraph {
        assert_eq!(keep.len(), self.node_count());
        let mut old_to_new = vec![None; self.node_count()];
        let mut labels = Labels::new();
        for u in self.nodes() {
            if keep[u.index()] {
                old_to_new[u.index()] = Some(labels.intern(self.label(u)));
            }
        }
        let edges: Vec<(NodeId, NodeId)> = self
            .edges()
            .filter_map(
                |p| match (old_to_new[p.lo().index()], old_to_new[p.hi().index()]) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                },
            )
            .collect();
        Subgraph {
            graph: Graph::from_edges(labels, &edges),
            old_to_new,
        }
    }

    /// Largest connected component with the id translation. Equal-size
    /// components are resolved in favour of the one holding the smallest id.
    pub fn largest_component(&self) -> Result<Subgraph> {
        if self.node_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let comp = self.connected_components();
        let count = comp.iter().max().map_or(0, |&c| c + 1);
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        // first maximum == component with the smallest node id among ties
        let mut best = 0;
        for (c, &size) in sizes.iter().enumerate() {
            if size > sizes[best] {
                best = c;
            }
        }
        let keep: Vec<bool> = comp.iter().map(|&c| c == best).collect();
        Ok(self.induced_subgraph(&keep))
    }

    pub fn largest_connected_component(&self) -> Result<Graph> {
        self.largest_component().map(|s| s.graph)
    }

    /// Classifies a non-adjacent pair as being at distance two (sharing a
    /// neighbour) or further apart, disconnected pairs included.
    pub fn distance_class(&self, u: NodeId, v: NodeId) -> Result<DistanceClass> {
        if u == v {
            return Err(Error::Contract(format!(
                "distance class of identical nodes {u}"
            )));
        }
        if self.has_edge(u, v) {
            return Err(Error::Contract(format!(
                "distance class of adjacent pair ({u}, {v})"
            )));
        }
        if shares_neighbor(self.neighbors(u), self.neighbors(v)) {
            Ok(DistanceClass::AtDistanceTwo)
        } else {
            Ok(DistanceClass::AtDistanceThreeOrMore)
        }
    }
}

fn shares_neighbor(a: &[NodeId], b: &[NodeId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Builds a graph from a deduplicated static edge list; ids follow first
/// appearance.
pub fn build_graph(list: &EdgeList) -> Graph {
    Graph::from_labeled_edges(list.edges.iter().map(|(u, v)| (u.as_str(), v.as_str())))
}
