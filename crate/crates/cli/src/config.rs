//! Run and split configuration. A JSON file supplies the base values and
//! command-line flags override them field by field.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use linkbias_core::bias::DEFAULT_HUB_FRACTION;
use linkbias_core::classifier::{FitOptions, DEFAULT_POSITIVE_FRACTION};
use linkbias_core::community::DEFAULT_MAX_PASSES;
use linkbias_core::embedding::DEFAULT_DIM;
use linkbias_core::evaluation::{
    DEFAULT_MIN_POSITIVES, DEFAULT_QUOTA_POSITIVES, DEFAULT_SAMPLE_SIZE,
};
use linkbias_core::{EdgeOperator, SplitMode, WalkConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_LEARNING_FRACTION: f64 = 0.8;
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
pub const DEFAULT_PRECISION_MAX_K: usize = 10_000;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn check_fraction(name: &str, f: f64) -> CliResult<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must lie in (0, 1), got {f}"
        )))
    }
}

/// Where the learning/prediction split comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub input: Option<PathBuf>,
    pub mode: SplitMode,
    /// Share of edges kept for learning, in both modes.
    pub fraction: f64,
    pub weighted: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            input: None,
            mode: SplitMode::Static,
            fraction: DEFAULT_LEARNING_FRACTION,
            weighted: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub input: Option<PathBuf>,
    pub mode: SplitMode,
    pub fraction: f64,
    pub weighted: bool,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let spec = SplitSpec::default();
        SplitConfig {
            input: None,
            mode: spec.mode,
            fraction: spec.fraction,
            weighted: spec.weighted,
            seed: 0,
            out: None,
        }
    }
}

impl SplitConfig {
    pub fn spec(&self) -> SplitSpec {
        SplitSpec {
            input: self.input.clone(),
            mode: self.mode,
            fraction: self.fraction,
            weighted: self.weighted,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.input.is_none() {
            return Err(CliError::Config("no input edge list given".into()));
        }
        if self.out.is_none() {
            return Err(CliError::Config("no output directory given".into()));
        }
        check_fraction("fraction", self.fraction)
    }
}

/// A method family as written in the configuration.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodKind {
    /// Supervised heuristics: logistic regression on the heuristic features.
    Heuristics,
    /// Logistic regression on edge vectors from an embedding file.
    Embedding,
    /// As `Embedding`, with the built-in biased-walk trainer.
    Trained,
    /// `Trained` over the three (p, q) settings of the walk grid.
    TrainedGrid,
}

impl MethodKind {
    fn name(self) -> &'static str {
        match self {
            MethodKind::Heuristics => "heuristics",
            MethodKind::Embedding => "embedding",
            MethodKind::Trained => "trained",
            MethodKind::TrainedGrid => "trained-grid",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "heuristics" => Ok(MethodKind::Heuristics),
            "embedding" | "embedding:file" => Ok(MethodKind::Embedding),
            "trained" | "embedding:trained" => Ok(MethodKind::Trained),
            "trained-grid" => Ok(MethodKind::TrainedGrid),
            _ => Err(CliError::Config(format!(
                "unknown method `{s}` (expected heuristics, embedding, trained or trained-grid)"
            ))),
        }
    }
}

impl TryFrom<String> for MethodKind {
    type Error = CliError;

    fn try_from(s: String) -> CliResult<Self> {
        s.parse()
    }
}

impl From<MethodKind> for String {
    fn from(m: MethodKind) -> String {
        m.name().to_owned()
    }
}

/// One concrete method run on every seed.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Heuristics,
    EmbeddingFile,
    Trained { p: f64, q: f64 },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Heuristics => "heuristics".into(),
            Method::EmbeddingFile => "embedding".into(),
            Method::Trained { p, q } => format!("trained_p{p}_q{q}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub positive_fraction: f64,
    pub l2_lambda: f64,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        ClassifierConfig {
            positive_fraction: DEFAULT_POSITIVE_FRACTION,
            l2_lambda: fit.l2_lambda,
            tolerance: fit.tolerance,
            max_iters: fit.max_iters,
        }
    }
}

impl ClassifierConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            l2_lambda: self.l2_lambda,
            tolerance: self.tolerance,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory written by `split`; used for every seed.
    pub split_dir: Option<PathBuf>,
    /// Otherwise a fresh split of this input is drawn per seed.
    pub split: SplitSpec,
    pub methods: Vec<MethodKind>,
    /// May contain `{seed}`, replaced by the run seed.
    pub embedding_file: Option<String>,
    pub operator: EdgeOperator,
    pub seeds: Vec<u64>,
    pub sample_size: usize,
    pub min_positives: usize,
    pub quota_positives: usize,
    pub precision_max_k: usize,
    pub hub_fraction: f64,
    pub louvain_max_passes: usize,
    pub classifier: ClassifierConfig,
    pub walk: WalkConfig,
    pub walk_dim: usize,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            split_dir: None,
            split: SplitSpec::default(),
            methods: vec![MethodKind::Heuristics],
            embedding_file: None,
            operator: EdgeOperator::Hadamard,
            seeds: DEFAULT_SEEDS.to_vec(),
            sample_size: DEFAULT_SAMPLE_SIZE,
            min_positives: DEFAULT_MIN_POSITIVES,
            quota_positives: DEFAULT_QUOTA_POSITIVES,
            precision_max_k: DEFAULT_PRECISION_MAX_K,
            hub_fraction: DEFAULT_HUB_FRACTION,
            louvain_max_passes: DEFAULT_MAX_PASSES,
            classifier: ClassifierConfig::default(),
            walk: WalkConfig::default(),
            walk_dim: DEFAULT_DIM,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        match (&self.split_dir, &self.split.input) {
            (None, None) => {
                return Err(CliError::Config(
                    "give either a split directory or an input edge list".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "split directory and input edge list are mutually exclusive".into(),
                ))
            }
            _ => {}
        }
        if self.out.is_none() {
            return Err(CliError::Config("no output directory given".into()));
        }
        check_fraction("fraction", self.split.fraction)?;
        check_fraction("hub fraction", self.hub_fraction)?;
        let cf = self.classifier.positive_fraction;
        if !(cf > 0.0 && cf <= 1.0) {
            return Err(CliError::Config(format!(
                "positive fraction must lie in (0, 1], got {cf}"
            )));
        }
        if self.classifier.l2_lambda < 0.0 || !self.classifier.l2_lambda.is_finite() {
            return Err(CliError::Config(
                "l2 lambda must be finite and non-negative".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(CliError::Config("seeds must be distinct".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("at least one method is required".into()));
        }
        if self.methods.contains(&MethodKind::Embedding) && self.embedding_file.is_none() {
            return Err(CliError::Config(
                "method `embedding` needs an embedding file".into(),
            ));
        }
        if self.classifier.tolerance.is_nan()
            || self.classifier.tolerance <= 0.0
            || self.classifier.max_iters == 0
        {
            return Err(CliError::Config(
                "tolerance and max_iters must be positive".into(),
            ));
        }
        if self.sample_size == 0 || self.quota_positives == 0 || self.precision_max_k == 0 {
            return Err(CliError::Config(
                "sample sizes and precision_max_k must be positive".into(),
            ));
        }
        if self.walk_dim == 0 {
            return Err(CliError::Config("walk_dim must be positive".into()));
        }
        if self
            .methods
            .iter()
            .any(|m| matches!(m, MethodKind::Trained | MethodKind::TrainedGrid))
        {
            self.walk.validate()?;
        }
        Ok(())
    }

    /// Method instances in run order, duplicates removed.
    pub fn expanded_methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for kind in &self.methods {
            let items = match kind {
                MethodKind::Heuristics => vec![Method::Heuristics],
                MethodKind::Embedding => vec![Method::EmbeddingFile],
                MethodKind::Trained => vec![Method::Trained {
                    p: self.walk.p,
                    q: self.walk.q,
                }],
                MethodKind::TrainedGrid => WalkConfig::PQ_GRID
                    .iter()
                    .map(|&(p, q)| Method::Trained { p, q })
                    .collect(),
            };
            for m in items {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        out
    }

    pub fn embedding_path(&self, seed: u64) -> Option<PathBuf> {
        self.embedding_file
            .as_ref()
            .map(|f| PathBuf::from(f.replace("{seed}", &seed.to_string())))
    }
}
