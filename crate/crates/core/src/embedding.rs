//! Node embeddings: the word-vector text format and edge operators that
//! turn two node vectors into one edge feature vector.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

pub const DEFAULT_DIM: usize = 128;

/// Dense per-node vectors indexed by the ids of the graph they were loaded
/// against.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    pub method_tag: String,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, data: Vec<f64>, method_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("embedding entry {pos}")));
        }
        Ok(EmbeddingMatrix {
            dim,
            data,
            method_tag: method_tag.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn vector(&self, u: NodeId) -> &[f64] {
        &self.data[u.index() * self.dim..(u.index() + 1) * self.dim]
    }
}

/// What `load_embeddings` had to skip.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub unknown_labels: Vec<String>,
}

/// Reads the `N d` header format and maps rows onto `graph`'s node ids.
///
/// Labels that are not in the graph are skipped with a warning; any graph
/// node left without a vector is an error.
pub fn load_embeddings<R: BufRead>(
    reader: R,
    graph: &Graph,
    method_tag: &str,
) -> Result<(EmbeddingMatrix, LoadReport)> {
    let mut lines = reader.lines().enumerate();
    let (count, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::EmptyInput);
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let header: Vec<&str> = line.split_whitespace().collect();
        let parsed = match header.as_slice() {
            [n, d] => n.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
            _ => None,
        };
        match parsed {
            Some((n, d)) if d > 0 => break (n, d),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected header `N d`, found `{line}`"),
                })
            }
        }
    };

    let n = graph.node_count();
    let mut data = vec![0.0; n * dim];
    let mut seen = vec![false; n];
    let mut report = LoadReport::default();
    let mut rows = 0;
    let mut unknown_seen = HashSet::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        rows += 1;
        let values: Vec<&str> = tokens.collect();
        if values.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: values.len(),
            });
        }
        let Some(id) = graph.node(label) else {
            if unknown_seen.insert(label.to_owned()) {
                report.unknown_labels.push(label.to_owned());
            }
            continue;
        };
        if seen[id.index()] {
            return Err(Error::Parse {
                line: lineno,
                message: format!("duplicate vector for node `{label}`"),
            });
        }
        seen[id.index()] = true;
        let row = &mut data[id.index() * dim..(id.index() + 1) * dim];
        for (slot, tok) in row.iter_mut().zip(&values) {
            let x: f64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("cannot parse `{tok}` as a number"),
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("line {lineno}, node `{label}`")));
            }
            *slot = x;
        }
    }
    if rows != count {
        return Err(Error::Parse {
            line: 1,
            message: format!("header announces {count} vectors, file holds {rows}"),
        });
    }
    if !report.unknown_labels.is_empty() {
        log::warn!(
            "{}: skipped {} vector(s) for nodes outside the graph",
            method_tag,
            report.unknown_labels.len()
        );
    }
    let missing: Vec<String> = graph
        .nodes()
        .filter(|u| !seen[u.index()])
        .map(|u| graph.label(u).to_owned())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage { missing });
    }
    Ok((EmbeddingMatrix::new(dim, data, method_tag)?, report))
}

/// Writes `matrix` in the text format. Values use the shortest exact
/// decimal form, so a reload is bitwise identical.
pub fn save_embeddings<W: Write>(
    out: &mut W,
    matrix: &EmbeddingMatrix,
    graph: &Graph,
) -> Result<()> {
    if matrix.len() != graph.node_count() {
        return Err(Error::Dimension {
            expected: graph.node_count(),
            got: matrix.len(),
        });
    }
    writeln!(out, "{} {}", matrix.len(), matrix.dim())?;
    for u in graph.nodes() {
        write!(out, "{}", graph.label(u))?;
        for x in matrix.vector(u) {
            write!(out, " {x:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Binary operator combining two node vectors into an edge vector.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeOperator {
    Hadamard,
    /// Hadamard product of the L2-normalised node vectors.
    #[serde(rename = "nhadamard")]
    NormalizedHadamard,
    Average,
    #[serde(rename = "l1")]
    WeightedL1,
    #[serde(rename = "l2")]
    WeightedL2,
}

impl EdgeOperator {
    pub const ALL: [EdgeOperator; 5] = [
        EdgeOperator::Hadamard,
        EdgeOperator::NormalizedHadamard,
        EdgeOperator::Average,
        EdgeOperator::WeightedL1,
        EdgeOperator::WeightedL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EdgeOperator::Hadamard => "hadamard",
            EdgeOperator::NormalizedHadamard => "nhadamard",
            EdgeOperator::Average => "average",
            EdgeOperator::WeightedL1 => "l1",
            EdgeOperator::WeightedL2 => "l2",
        }
    }

    pub fn apply(self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                got: b.len(),
            });
        }
        let out = match self {
            EdgeOperator::Hadamard => a.iter().zip(b).map(|(x, y)| x * y).collect(),
            EdgeOperator::NormalizedHadamard => {
                let (na, nb) = (l2_norm(a), l2_norm(b));
                if na == 0.0 || nb == 0.0 {
                    return Err(Error::Contract(
                        "normalized Hadamard of a zero vector".into(),
                    ));
                }
                a.iter().zip(b).map(|(x, y)| (x / na) * (y / nb)).collect()
            }
            EdgeOperator::Average => a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect(),
            EdgeOperator::WeightedL1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect(),
            EdgeOperator::WeightedL2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect(),
        };
        Ok(out)
    }
}

impl fmt::Display for EdgeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hadamard" => Ok(EdgeOperator::Hadamard),
            "nhadamard" | "normalized-hadamard" | "normalized_hadamard" => {
                Ok(EdgeOperator::NormalizedHadamard)
            }
            "average" | "avg" => Ok(EdgeOperator::Average),
            "l1" | "weighted-l1" => Ok(EdgeOperator::WeightedL1),
            "l2" | "weighted-l2" => Ok(EdgeOperator::WeightedL2),
            other => Err(Error::Config(format!("unknown edge operator `{other}`"))),
        }
    }
}

fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn edge_vector(
    matrix: &EmbeddingMatrix,
    u: NodeId,
    v: NodeId,
    op: EdgeOperator,
) -> Result<Vec<f64>> {
    op.apply(matrix.vector(u), matrix.vector(v))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let denom = l2_norm(a) * l2_norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_graph() -> Graph {
        Graph::from_labeled_edges([("a", "b")])
    }

    #[test]
    fn loads_two_by_two() {
        let g = pair_graph();
        let (m, report) = load_embeddings("2 2\na 1 0\nb 0 1\n".as_bytes(), &g, "t").unwrap();
        assert_eq!((m.len(), m.dim()), (2, 2));
        assert_eq!(m.vector(g.node("b").unwrap()), &[0.0, 1.0]);
        assert!(report.unknown_labels.is_empty());
    }

    #[test]
    fn missing_node_is_named() {
        let g = Graph::from_labeled_edges([("a", "b"), ("b", "c")]);
        match load_embeddings("2 2\na 1 0\nb 0 1\n".as_bytes(), &g, "t") {
            Err(Error::Coverage { missing }) => assert_eq!(missing, vec!["c".to_owned()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_skipped() {
        let g = pair_graph();
        let (_, report) = load_embeddings("3 1\na 1\nz 2\nb 3\n".as_bytes(), &g, "t").unwrap();
        assert_eq!(report.unknown_labels, vec!["z".to_owned()]);
    }

    #[test]
    fn malformed_inputs() {
        let g = pair_graph();
        let load = |s: &str| load_embeddings(s.as_bytes(), &g, "t");
        assert!(matches!(
            load("2 2\na 1\nb 0 1\n"),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            load("2 1\na NaN\nb 1\n"),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            load("2 1\na inf\nb 1\n"),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            load("2\na 1\nb 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(load("3 1\na 1\nb 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(load(""), Err(Error::EmptyInput)));
    }

    #[test]
    fn scientific_notation_accepted() {
        let g = pair_graph();
        let (m, _) = load_embeddings("2 2\na 1e-3 -2.5E2\nb 0 1\n".as_bytes(), &g, "t").unwrap();
        assert_eq!(m.vector(g.node("a").unwrap()), &[1e-3, -250.0]);
    }

    #[test]
    fn save_load_is_bitwise() {
        let g = Graph::from_labeled_edges([("a", "b"), ("b", "c")]);
        let data = vec![0.1, 1.0 / 3.0, -2e-300, 7.0, 1e21, -0.0];
        let m = EmbeddingMatrix::new(2, data, "t").unwrap();
        let mut buf = Vec::new();
        save_embeddings(&mut buf, &m, &g).unwrap();
        let (back, _) = load_embeddings(buf.as_slice(), &g, "t").unwrap();
        let bits = |m: &EmbeddingMatrix| {
            g.nodes()
                .flat_map(|u| m.vector(u).iter().map(|x| x.to_bits()).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn operator_examples() {
        let h = EdgeOperator::Hadamard
            .apply(&[1.0, 2.0], &[3.0, 4.0])
            .unwrap();
        assert_eq!(h, vec![3.0, 8.0]);
        let n = EdgeOperator::NormalizedHadamard
            .apply(&[0.0, 1.0], &[0.0, 1.0])
            .unwrap();
        assert_eq!(n, vec![0.0, 1.0]);
        assert!(EdgeOperator::NormalizedHadamard
            .apply(&[0.0, 0.0], &[1.0, 1.0])
            .is_err());
        assert_eq!(
            EdgeOperator::Average
                .apply(&[1.0, 2.0], &[3.0, 4.0])
                .unwrap(),
            vec![2.0, 3.0]
        );
        assert_eq!(
            EdgeOperator::WeightedL1
                .apply(&[1.0, 5.0], &[3.0, 4.0])
                .unwrap(),
            vec![2.0, 1.0]
        );
        assert_eq!(
            EdgeOperator::WeightedL2
                .apply(&[1.0, 5.0], &[3.0, 4.0])
                .unwrap(),
            vec![4.0, 1.0]
        );
        assert!(EdgeOperator::Hadamard.apply(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn hadamard_with_ones_is_identity() {
        let x = [0.3, -1.5, 2.0];
        assert_eq!(
            EdgeOperator::Hadamard.apply(&[1.0; 3], &x).unwrap(),
            x.to_vec()
        );
    }

    #[test]
    fn operator_names_round_trip() {
        for op in EdgeOperator::ALL {
            assert_eq!(op.name().parse::<EdgeOperator>().unwrap(), op);
            let json = serde_json::to_string(&op).unwrap();
            assert_eq!(json, format!("\"{}\"", op.name()));
        }
    }
}
