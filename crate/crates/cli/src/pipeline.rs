//! The `split` and `run` stages.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use linkbias_core::bias::{
    curve_ks, fraction_at_k, hub_set, perfect_prediction_reference, BiasCurve,
};
use linkbias_core::classifier::{build_training_set, fit_logistic};
use linkbias_core::community::louvain;
use linkbias_core::embedding::load_embeddings;
use linkbias_core::evaluation::{
    build_positive_quota_sample, build_ratio_sample, evaluate, precision_at_k, EvalSample,
    MetricReport,
};
use linkbias_core::graph::{
    build_graph, parse_static_edges, parse_temporal_edges, TemporalEdgeList,
};
use linkbias_core::rng::derive_seed;
use linkbias_core::split::{read_split, split_static, split_temporal, write_split};
use linkbias_core::walk::{train_biased_walk_embedding, WalkConfig};
use linkbias_core::{
    BiasProperty, EmbeddingFeaturizer, EmbeddingMatrix, Featurizer, Graph, HeuristicFeaturizer,
    PropertyContext, ScoredRanking, Split, SplitInfo, SplitMode,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Method, RunConfig, SplitConfig, SplitSpec};
use crate::curves::{write_curve_csv, Curve};
use crate::error::{CliError, CliResult};
use crate::manifest::*;
use crate::plot::{curve_chart, Level, Series};

pub const TOOL: &str = "linkbias";

/// Parsed input, kept so per-seed splits don't re-read the file.
pub enum InputData {
    Static(Graph),
    Temporal(TemporalEdgeList),
}

pub fn load_input(spec: &SplitSpec) -> CliResult<InputData> {
    let path = spec
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("no input edge list given".into()))?;
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    let located = |e: linkbias_core::Error| match CliError::from(e) {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    };
    Ok(match spec.mode {
        SplitMode::Static => {
            let list = parse_static_edges(reader, spec.weighted).map_err(located)?;
            log::info!(
                "read {} edges ({} self-loops, {} duplicates dropped)",
                list.stats.edges_kept,
                list.stats.self_loops_dropped,
                list.stats.duplicates_dropped
            );
            InputData::Static(build_graph(&list))
        }
        SplitMode::Temporal => {
            InputData::Temporal(parse_temporal_edges(reader, spec.weighted).map_err(located)?)
        }
    })
}

pub fn make_split(data: &InputData, learning_fraction: f64, split_seed: u64) -> CliResult<Split> {
    let split = match data {
        InputData::Static(g) => split_static(g, 1.0 - learning_fraction, split_seed)?,
        InputData::Temporal(list) => split_temporal(list, learning_fraction)?,
    };
    for w in &split.info.warnings {
        log::warn!("{w}");
    }
    Ok(split)
}

pub fn cmd_split(cfg: &SplitConfig) -> CliResult<SplitInfo> {
    cfg.validate()?;
    let out = cfg.out.as_ref().expect("validated");
    let data = load_input(&cfg.spec())?;
    let split = make_split(&data, cfg.fraction, derive_seed(cfg.seed, "split", 0))?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_split(out, &split)?;
    log::info!(
        "split: {} learning nodes, {} learning edges, {} prediction edges",
        split.info.learning_nodes,
        split.info.learning_edges,
        split.info.prediction_edges
    );
    Ok(split.info)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Stage(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_bias_csv(path: &Path, curve: &BiasCurve) -> CliResult<()> {
    let mut out = create(path)?;
    curve.write_csv(&mut out)?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Everything plotted after the seeds finish.
#[derive(Default)]
struct PlotData {
    precision: BTreeMap<String, Vec<Curve>>,
    bias: BTreeMap<(BiasProperty, String), Vec<Curve>>,
    perfect: BTreeMap<BiasProperty, Vec<Curve>>,
    refs: BTreeMap<BiasProperty, Vec<(f64, f64)>>,
}

struct Timer {
    lines: Vec<String>,
}

impl Timer {
    fn time<T>(&mut self, label: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        self.lines.push(format!(
            "{}\t{:.3}",
            label.into(),
            start.elapsed().as_secs_f64()
        ));
        value
    }
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out: PathBuf,
}

pub fn cmd_run(cfg: &RunConfig) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let out = cfg.out.clone().expect("validated");
    let methods = cfg.expanded_methods();
    let mut timer = Timer { lines: Vec::new() };

    let (fixed_split, input) = match (&cfg.split_dir, &cfg.split.input) {
        (Some(dir), _) => {
            let split = timer.time("read_split", || read_split(dir)).map_err(|e| {
                match CliError::from(e) {
                    CliError::Stage(m) | CliError::Data(m) => {
                        CliError::Data(format!("{}: {m}", dir.display()))
                    }
                    other => other,
                }
            })?;
            (Some(split), None)
        }
        _ => (
            None,
            Some(timer.time("read_input", || load_input(&cfg.split))?),
        ),
    };
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let mut plots = PlotData::default();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    for &seed in &cfg.seeds {
        log::info!("seed {seed}");
        let seed_dir = out.join(seed_dir_name(seed));
        fs::create_dir_all(&seed_dir).map_err(|e| CliError::io(&seed_dir, e))?;
        let mut record = SeedRecord {
            seed,
            ..SeedRecord::default()
        };
        let result = run_seed(
            cfg,
            &methods,
            fixed_split.as_ref(),
            input.as_ref(),
            &seed_dir,
            &mut record,
            &mut plots,
            &mut timer,
        );
        if let Err(e) = result {
            log::error!("seed {seed} aborted: {e}");
            failures.push(format!("seed {seed}: {e}"));
            record.error = Some(e.to_string());
        }
        for (name, m) in &record.methods {
            if let Some(err) = &m.error {
                failures.push(format!("seed {seed}, method {name}: {err}"));
            }
        }
        seeds.push(record);
    }

    let mut aggregates = BTreeMap::new();
    for m in &methods {
        let name = m.name();
        let runs: Vec<_> = seeds
            .iter()
            .filter_map(|s| s.methods.get(&name).and_then(|r| r.metrics.clone()))
            .collect();
        if !runs.is_empty() {
            aggregates.insert(name, MetricReport::from_runs(runs));
        }
    }
    write_json(&out.join(SUMMARY_JSON), &aggregates)?;
    write_summary_csv(&out.join(SUMMARY_CSV), &aggregates)?;
    write_plots(&out, &plots, cfg.quota_positives)?;

    let manifest = RunManifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        split: fixed_split.map(|s| s.info),
        methods: methods.iter().map(Method::name).collect(),
        seeds,
        aggregates,
        failures,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    let mut timings = timer.lines.join("\n");
    timings.push('\n');
    fs::write(out.join(TIMINGS_FILE), timings).map_err(|e| CliError::io(&out, e))?;
    Ok(RunOutcome { manifest, out })
}

fn write_summary_csv(path: &Path, aggregates: &BTreeMap<String, MetricReport>) -> CliResult<()> {
    let mut out = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(out, "method,runs,ap_mean,ap_std,auroc_mean,auroc_std").map_err(io)?;
    for (name, r) in aggregates {
        writeln!(
            out,
            "{name},{},{},{},{},{}",
            r.runs.len(),
            r.ap.mean,
            r.ap.std,
            r.auroc.mean,
            r.auroc.std
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

#[allow(clippy::too_many_arguments)]
fn run_seed(
    cfg: &RunConfig,
    methods: &[Method],
    fixed_split: Option<&Split>,
    input: Option<&InputData>,
    dir: &Path,
    record: &mut SeedRecord,
    plots: &mut PlotData,
    timer: &mut Timer,
) -> CliResult<()> {
    let seed = record.seed;
    let mut stage = |name: &str| {
        let s = derive_seed(seed, name, 0);
        record.stage_seeds.insert(name.to_owned(), s);
        s
    };
    let split_seed = stage("split");
    let training_seed = stage("training");
    let ratio_seed = stage("ratio-sample");
    let quota_seed = stage("quota-sample");
    let louvain_seed = stage("louvain");
    let reference_seed = stage("reference");

    let owned;
    let split = match (fixed_split, input) {
        (Some(s), _) => s,
        (None, Some(data)) => {
            owned = timer.time(format!("seed {seed}: split"), || {
                make_split(data, cfg.split.fraction, split_seed)
            })?;
            record.split = Some(owned.info.clone());
            write_json(&dir.join("split.json"), &owned.info)?;
            &owned
        }
        (None, None) => unreachable!("validated"),
    };
    let graph = &split.learning;

    let ratio = timer.time(format!("seed {seed}: ratio sample"), || {
        build_ratio_sample(split, cfg.sample_size, cfg.min_positives, ratio_seed)
    })?;
    record.ratio_sample = Some(ratio.info.clone());
    let quota = timer.time(format!("seed {seed}: quota sample"), || {
        build_positive_quota_sample(split, cfg.quota_positives, quota_seed)
    })?;
    record.quota_sample = Some(quota.info.clone());

    let communities = timer.time(format!("seed {seed}: louvain"), || {
        louvain(graph, louvain_seed, cfg.louvain_max_passes)
    })?;
    record.communities = Some(CommunityRecord {
        count: communities.partition.community_count(),
        modularity: communities.modularity,
        passes: communities.levels.len(),
    });
    write_partition(&dir.join(PARTITION_FILE), graph, &communities.partition)?;

    let hubs = hub_set(graph, cfg.hub_fraction)?;
    record.hubs = Some(HubRecord {
        top_fraction: hubs.top_fraction,
        degree_threshold: hubs.degree_threshold,
        count: hubs.count,
    });
    let ctx = PropertyContext::new(graph, &communities.partition, &hubs)?;

    let bias_ks = curve_ks(quota.len(), &[cfg.quota_positives]);
    let precision_ks = curve_ks(quota.len().min(cfg.precision_max_k), &[cfg.quota_positives]);
    let mut flags = BTreeMap::new();
    for (i, property) in BiasProperty::ALL.into_iter().enumerate() {
        let f: Vec<bool> = quota
            .pairs
            .par_iter()
            .map(|&p| ctx.evaluate(p, property))
            .collect::<linkbias_core::Result<_>>()?;
        let reference = perfect_prediction_reference(
            &quota,
            property,
            &f,
            &bias_ks,
            derive_seed(reference_seed, property.name(), i as u64),
        )?;
        write_bias_csv(&dir.join(reference_file(property.name())), &reference)?;
        record.references.insert(
            property.name().into(),
            ReferenceRecord {
                ground_truth_ref: reference.ground_truth_ref,
                dataset_ref: reference.dataset_ref,
            },
        );
        plots
            .perfect
            .entry(property)
            .or_default()
            .push(Curve::new(reference.ks.clone(), reference.fraction.clone()));
        plots
            .refs
            .entry(property)
            .or_default()
            .push((reference.ground_truth_ref, reference.dataset_ref));
        flags.insert(property, f);
    }

    for (index, method) in methods.iter().enumerate() {
        let name = method.name();
        let method_dir = dir.join(&name);
        fs::create_dir_all(&method_dir).map_err(|e| CliError::io(&method_dir, e))?;
        let mut m = MethodRecord::default();
        let walk_seed = derive_seed(seed, "walk", index as u64);
        let result = timer.time(format!("seed {seed}: {name}"), || {
            run_method(
                cfg,
                method,
                split,
                &ratio,
                &quota,
                &flags,
                MethodSeeds {
                    run: seed,
                    training: training_seed,
                    walk: walk_seed,
                },
                &MethodOutput {
                    dir: &method_dir,
                    bias_ks: &bias_ks,
                    precision_ks: &precision_ks,
                },
                &mut m,
            )
        });
        match result {
            Ok(curves) => {
                plots
                    .precision
                    .entry(name.clone())
                    .or_default()
                    .push(curves.precision);
                for (property, c) in curves.bias {
                    plots
                        .bias
                        .entry((property, name.clone()))
                        .or_default()
                        .push(c);
                }
            }
            Err(e) => {
                log::error!("seed {seed}, method {name}: {e}");
                m.status = MethodStatus::Failed;
                m.error = Some(e.to_string());
            }
        }
        record.methods.insert(name, m);
    }
    Ok(())
}

fn write_partition(
    path: &Path,
    graph: &Graph,
    partition: &linkbias_core::Partition,
) -> CliResult<()> {
    let mut out = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(out, "node_label,community_id").map_err(io)?;
    for u in graph.nodes() {
        writeln!(out, "{},{}", graph.label(u), partition.community(u)).map_err(io)?;
    }
    out.flush().map_err(io)
}

struct MethodSeeds {
    run: u64,
    training: u64,
    walk: u64,
}

struct MethodOutput<'a> {
    dir: &'a Path,
    bias_ks: &'a [usize],
    precision_ks: &'a [usize],
}

struct MethodCurves {
    precision: Curve,
    bias: Vec<(BiasProperty, Curve)>,
}

enum Features<'a> {
    Heuristic(HeuristicFeaturizer<'a>),
    Embedding(EmbeddingMatrix),
}

#[allow(clippy::too_many_arguments)]
fn run_method(
    cfg: &RunConfig,
    method: &Method,
    split: &Split,
    ratio: &EvalSample,
    quota: &EvalSample,
    flags: &BTreeMap<BiasProperty, Vec<bool>>,
    seeds: MethodSeeds,
    out: &MethodOutput<'_>,
    record: &mut MethodRecord,
) -> CliResult<MethodCurves> {
    let graph = &split.learning;
    let features = match method {
        Method::Heuristics => Features::Heuristic(HeuristicFeaturizer::new(graph)),
        Method::EmbeddingFile => {
            let path = cfg.embedding_path(seeds.run).expect("validated");
            let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
            let (matrix, report) =
                load_embeddings(BufReader::new(file), graph, &path.display().to_string())
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if !report.unknown_labels.is_empty() {
                log::warn!(
                    "{}: skipped {} labels absent from the learning graph",
                    path.display(),
                    report.unknown_labels.len()
                );
            }
            record.embedding = Some(EmbeddingRecord {
                source: path.display().to_string(),
                dim: matrix.dim(),
                skipped_labels: report.unknown_labels.len(),
                walk_seed: None,
                epoch_losses: Vec::new(),
            });
            Features::Embedding(matrix)
        }
        Method::Trained { p, q } => {
            let walk = WalkConfig {
                p: *p,
                q: *q,
                ..cfg.walk.clone()
            };
            let trained = train_biased_walk_embedding(graph, &walk, cfg.walk_dim, seeds.walk)?;
            record.embedding = Some(EmbeddingRecord {
                source: trained.matrix.method_tag.clone(),
                dim: trained.matrix.dim(),
                skipped_labels: 0,
                walk_seed: Some(seeds.walk),
                epoch_losses: trained.epoch_losses,
            });
            Features::Embedding(trained.matrix)
        }
    };
    let embedding_featurizer;
    let featurizer: &dyn Featurizer = match &features {
        Features::Heuristic(h) => h,
        Features::Embedding(matrix) => {
            embedding_featurizer = EmbeddingFeaturizer::new(matrix, cfg.operator, graph)?;
            &embedding_featurizer
        }
    };

    let training = build_training_set(
        graph,
        featurizer,
        cfg.classifier.positive_fraction,
        seeds.training,
    )?;
    record.training_rows = Some(training.rows());
    let model = fit_logistic(&training, &cfg.classifier.fit_options())?;
    if !model.convergence.converged {
        log::warn!(
            "classifier stopped after {} iterations without converging",
            model.convergence.iterations
        );
    }
    record.convergence = Some(model.convergence.clone());
    write_json(&out.dir.join(MODEL_FILE), &model)?;

    let ratio_scores = model.score_pairs(featurizer, &ratio.pairs)?;
    let metrics = evaluate(&ScoredRanking::from_sample(ratio, &ratio_scores)?)?;
    record.metrics = Some(metrics.clone());
    write_json(
        &out.dir.join(METRICS_FILE),
        &SeedMetrics {
            method: method.name(),
            seed: seeds.run,
            metrics,
        },
    )?;

    let quota_scores = model.score_pairs(featurizer, &quota.pairs)?;
    let ranking = ScoredRanking::from_sample(quota, &quota_scores)?;
    let precision: Vec<f64> = precision_at_k(&ranking, out.precision_ks)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let precision = Curve::new(out.precision_ks.to_vec(), precision);
    write_curve_csv(&out.dir.join(PRECISION_FILE), "k,precision", &precision)?;

    let index: std::collections::HashMap<_, _> = quota
        .pairs
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();
    let mut bias = Vec::new();
    for property in BiasProperty::ALL {
        let f = &flags[&property];
        let curve = fraction_at_k(&ranking, property, |p| Ok(f[index[&p]]), out.bias_ks)?;
        write_bias_csv(&out.dir.join(bias_file(property.name())), &curve)?;
        if let Some(v) = curve.at(cfg.quota_positives) {
            record.fraction_at_quota.insert(property.name().into(), v);
        }
        bias.push((property, Curve::new(curve.ks, curve.fraction)));
    }
    Ok(MethodCurves { precision, bias })
}

fn mean_series(name: &str, curves: &[Curve], dashed: bool) -> Option<Series> {
    Curve::mean(curves).map(|c| Series {
        name: name.to_owned(),
        points: c.points(),
        dashed,
    })
}

fn mean_refs(refs: &[(f64, f64)]) -> (f64, f64) {
    let n = refs.len() as f64;
    (
        refs.iter().map(|r| r.0).sum::<f64>() / n,
        refs.iter().map(|r| r.1).sum::<f64>() / n,
    )
}

/// Curves averaged over seeds at the k values every seed shares.
fn write_plots(out: &Path, plots: &PlotData, quota: usize) -> CliResult<()> {
    let dir = out.join("plots");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let series: Vec<Series> = plots
        .precision
        .iter()
        .filter_map(|(m, c)| mean_series(m, c, false))
        .collect();
    if !series.is_empty() {
        let svg = curve_chart(
            &format!("precision@k ({quota} positives)"),
            "k",
            "precision@k",
            &series,
            &[],
        );
        let path = dir.join("precision_at_k.svg");
        fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
    }
    for property in BiasProperty::ALL {
        let Some(refs) = plots.refs.get(&property) else {
            continue;
        };
        let mut series: Vec<Series> = plots
            .bias
            .iter()
            .filter(|((p, _), _)| *p == property)
            .filter_map(|((_, m), c)| mean_series(m, c, false))
            .collect();
        if let Some(s) = plots
            .perfect
            .get(&property)
            .and_then(|c| mean_series("perfect prediction", c, true))
        {
            series.push(s);
        }
        let (truth, dataset) = mean_refs(refs);
        let levels = [
            Level {
                name: "ground truth".into(),
                y: truth,
                color: "black",
            },
            Level {
                name: "dataset".into(),
                y: dataset,
                color: "gray",
            },
        ];
        let svg = curve_chart(
            &format!("fraction@k: {property}"),
            "k",
            "fraction@k",
            &series,
            &levels,
        );
        let path = dir.join(format!("bias_{}.svg", property.name()));
        fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
