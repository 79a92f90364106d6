use std::io;

use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("graph is empty")]
    EmptyGraph,

    /// A caller broke an operation's precondition (e.g. asked for the
    /// distance class of an adjacent pair).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("embedding does not cover {} learning-graph node(s): {}", .missing.len(), preview(.missing))]
    Coverage { missing: Vec<String> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Not enough data to honour a request (sample larger than its
    /// population, too few positives, ...).
    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn preview(labels: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut out = labels
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if labels.len() > SHOWN {
        out.push_str(", ...");
    }
    out
}
