//! Link prediction evaluation on static and temporal splits, with
//! fraction@k audits of ranking bias toward short distances, hubs and
//! communities.

pub mod bias;
pub mod classifier;
pub mod community;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod generators;
pub mod graph;
pub mod heuristics;
pub mod rng;
pub mod split;
pub mod walk;

pub use bias::{BiasCurve, BiasProperty, HubSet, PropertyContext};
pub use classifier::{FitOptions, LogisticModel, TrainingSet};
pub use community::{LouvainResult, Partition};
pub use embedding::{EdgeOperator, EmbeddingMatrix};
pub use error::{Error, Result};
pub use evaluation::{EvalSample, MetricReport, RunMetrics, ScoredRanking, Summary};
pub use features::{EmbeddingFeaturizer, Featurizer, HeuristicFeaturizer};
pub use graph::{DistanceClass, EdgeList, Graph, Labels, NodeId, Pair};
pub use heuristics::HeuristicVector;
pub use split::{Split, SplitInfo, SplitMode};
pub use walk::{WalkConfig, WalkEmbedding};
