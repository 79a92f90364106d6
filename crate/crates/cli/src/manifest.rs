//! Machine-readable record of a run: configuration echo, every derived
//! seed, sample statistics, convergence and metrics. Wall-clock timings
//! live in a separate log so that this file is reproducible byte for byte.

use std::collections::BTreeMap;

use linkbias_core::classifier::Convergence;
use linkbias_core::evaluation::{MetricReport, RunMetrics, SampleInfo};
use linkbias_core::SplitInfo;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const SUMMARY_JSON: &str = "metrics_summary.json";
pub const SUMMARY_CSV: &str = "metrics_summary.csv";
pub const TIMINGS_FILE: &str = "timings.log";
pub const METRICS_FILE: &str = "metrics.json";
pub const MODEL_FILE: &str = "model.json";
pub const PRECISION_FILE: &str = "precision_at_k.csv";
pub const PARTITION_FILE: &str = "partition.csv";

pub fn seed_dir_name(seed: u64) -> String {
    format!("seed_{seed}")
}

pub fn bias_file(property: &str) -> String {
    format!("bias_{property}.csv")
}

pub fn reference_file(property: &str) -> String {
    format!("reference_{property}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Present when the run used a split directory.
    pub split: Option<SplitInfo>,
    pub methods: Vec<String>,
    pub seeds: Vec<SeedRecord>,
    pub aggregates: BTreeMap<String, MetricReport>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    /// Seed of every random stage, derived from `seed` and the stage name.
    pub stage_seeds: BTreeMap<String, u64>,
    /// Present when the split was drawn for this seed.
    pub split: Option<SplitInfo>,
    pub ratio_sample: Option<SampleInfo>,
    pub quota_sample: Option<SampleInfo>,
    pub communities: Option<CommunityRecord>,
    pub hubs: Option<HubRecord>,
    pub references: BTreeMap<String, ReferenceRecord>,
    pub methods: BTreeMap<String, MethodRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityRecord {
    pub count: usize,
    pub modularity: f64,
    pub passes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubRecord {
    pub top_fraction: f64,
    pub degree_threshold: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub ground_truth_ref: f64,
    pub dataset_ref: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub status: MethodStatus,
    pub error: Option<String>,
    pub metrics: Option<RunMetrics>,
    pub convergence: Option<Convergence>,
    pub training_rows: Option<usize>,
    pub embedding: Option<EmbeddingRecord>,
    /// fraction@k at the quota size, per property.
    pub fraction_at_quota: BTreeMap<String, f64>,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodStatus {
    #[default]
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub source: String,
    pub dim: usize,
    pub skipped_labels: usize,
    pub walk_seed: Option<u64>,
    pub epoch_losses: Vec<f64>,
}

/// Contents of a per-method, per-seed `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub method: String,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: RunMetrics,
}
