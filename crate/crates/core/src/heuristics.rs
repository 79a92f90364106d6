//! Neighbourhood heuristics for node pairs: common neighbours, Adamic-Adar,
//! preferential attachment, Jaccard, resource allocation, plus the sorted
//! endpoint degrees used as extra classifier features.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Graph, NodeId, Pair};

/// Walks the sorted neighbour lists of `u` and `v`, calling `f` with every
/// shared neighbour.
#[inline]
fn for_each_common<F: FnMut(NodeId)>(graph: &Graph, u: NodeId, v: NodeId, mut f: F) {
    let (a, b) = (graph.neighbors(u), graph.neighbors(v));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

pub fn common_neighbors(graph: &Graph, u: NodeId, v: NodeId) -> usize {
    let mut count = 0;
    for_each_common(graph, u, v, |_| count += 1);
    count
}

/// Sum of `1 / ln deg(w)` over common neighbours `w`.
pub fn adamic_adar(graph: &Graph, u: NodeId, v: NodeId) -> f64 {
    let mut score = 0.0;
    for_each_common(graph, u, v, |w| {
        let d = graph.degree(w);
        // adjacent to both endpoints
        debug_assert!(d >= 2);
        score += 1.0 / (d as f64).ln();
    });
    score
}

pub fn preferential_attachment(graph: &Graph, u: NodeId, v: NodeId) -> u64 {
    graph.degree(u) as u64 * graph.degree(v) as u64
}

/// Shared-neighbour fraction of the neighbourhood union; 0 when both
/// endpoints are isolated.
pub fn jaccard(graph: &Graph, u: NodeId, v: NodeId) -> f64 {
    let cn = common_neighbors(graph, u, v);
    let union = graph.degree(u) + graph.degree(v) - cn;
    if union == 0 {
        0.0
    } else {
        cn as f64 / union as f64
    }
}

/// Sum of `1 / deg(w)` over common neighbours `w`.
pub fn resource_allocation(graph: &Graph, u: NodeId, v: NodeId) -> f64 {
    let mut score = 0.0;
    for_each_common(graph, u, v, |w| score += 1.0 / graph.degree(w) as f64);
    score
}

/// All pair heuristics at once, computed with a single neighbour merge.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicVector {
    pub cn: u64,
    pub aa: f64,
    pub pa: u64,
    pub jaccard: f64,
    pub ra: f64,
    pub deg_lo: u64,
    pub deg_hi: u64,
}

impl HeuristicVector {
    pub const DIM: usize = 7;
    pub const NAMES: [&'static str; 7] = ["cn", "aa", "pa", "jaccard", "ra", "deg_lo", "deg_hi"];

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.cn as f64,
            self.aa,
            self.pa as f64,
            self.jaccard,
            self.ra,
            self.deg_lo as f64,
            self.deg_hi as f64,
        ]
    }
}

pub fn feature_vector(graph: &Graph, u: NodeId, v: NodeId) -> HeuristicVector {
    let (mut cn, mut aa, mut ra) = (0u64, 0.0, 0.0);
    for_each_common(graph, u, v, |w| {
        let d = graph.degree(w) as f64;
        cn += 1;
        aa += 1.0 / d.ln();
        ra += 1.0 / d;
    });
    let (du, dv) = (graph.degree(u) as u64, graph.degree(v) as u64);
    let union = du + dv - cn;
    HeuristicVector {
        cn,
        aa,
        pa: du * dv,
        jaccard: if union == 0 {
            0.0
        } else {
            cn as f64 / union as f64
        },
        ra,
        deg_lo: du.min(dv),
        deg_hi: du.max(dv),
    }
}

pub const FEATURE_CSV_HEADER: &str = "u,v,cn,aa,pa,jaccard,ra,deg_lo,deg_hi";

/// Writes one CSV row per pair with reals in 17 significant digits.
pub fn write_feature_csv<W: Write>(out: &mut W, graph: &Graph, pairs: &[Pair]) -> Result<()> {
    writeln!(out, "{FEATURE_CSV_HEADER}")?;
    for p in pairs {
        let h = feature_vector(graph, p.lo(), p.hi());
        writeln!(
            out,
            "{},{},{},{:.16e},{},{:.16e},{:.16e},{},{}",
            graph.label(p.lo()),
            graph.label(p.hi()),
            h.cn,
            h.aa,
            h.pa,
            h.jaccard,
            h.ra,
            h.deg_lo,
            h.deg_hi
        )?;
    }
    Ok(())
}
