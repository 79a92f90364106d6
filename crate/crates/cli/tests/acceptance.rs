//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! Dataset criteria read `facebook_combined.txt` and `ca-AstroPh.txt` from
//! `$LINKBIAS_DATA_DIR` (default: `data/` at the workspace root).

use std::collections::HashSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use linkbias_cli::config::{MethodKind, RunConfig, SplitSpec};
use linkbias_cli::manifest::RunManifest;
use linkbias_cli::pipeline::cmd_run;
use linkbias_core::classifier::{standardization, LogisticObjective, TrainingSet};
use linkbias_core::community::{louvain, modularity, Partition, DEFAULT_MAX_PASSES};
use linkbias_core::embedding::cosine_similarity;
use linkbias_core::evaluation::{
    auroc, average_precision, build_positive_quota_sample, build_ratio_sample, ScoredRanking,
};
use linkbias_core::generators::{gnp, planted_partition, two_cliques};
use linkbias_core::heuristics::{
    adamic_adar, common_neighbors, feature_vector, jaccard, preferential_attachment,
    resource_allocation,
};
use linkbias_core::rng::seeded_rng;
use linkbias_core::split::split_static;
use linkbias_core::walk::{train_biased_walk_embedding, BiasedWalker, WalkConfig};
use linkbias_core::{BiasProperty, Graph, NodeId, Pair, SplitMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 --------------------------------------------------------------------

fn heuristic_oracle() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0usize;
    for i in 0..100u64 {
        let p = [0.05, 0.1, 0.3][i as usize % 3];
        let n = 2 + (i as usize * 13) % 63;
        let g = gnp(n, p, 500 + i);
        let sets: Vec<HashSet<NodeId>> = g
            .nodes()
            .map(|u| g.neighbors(u).iter().copied().collect())
            .collect();
        for u in g.nodes() {
            for v in g.nodes().filter(|&v| v != u) {
                let (su, sv) = (&sets[u.index()], &sets[v.index()]);
                let common: Vec<NodeId> = su.intersection(sv).copied().collect();
                let union = su.union(sv).count();
                let aa: f64 = common
                    .iter()
                    .map(|z| 1.0 / (sets[z.index()].len() as f64).ln())
                    .sum();
                let ra: f64 = common
                    .iter()
                    .map(|z| 1.0 / sets[z.index()].len() as f64)
                    .sum();
                let jc = if union == 0 {
                    0.0
                } else {
                    common.len() as f64 / union as f64
                };
                let f = feature_vector(&g, u, v);
                let exact = common_neighbors(&g, u, v) == common.len()
                    && f.cn == common.len() as u64
                    && preferential_attachment(&g, u, v) == (su.len() * sv.len()) as u64
                    && f.pa == (su.len() * sv.len()) as u64
                    && f.deg_lo == su.len().min(sv.len()) as u64
                    && f.deg_hi == su.len().max(sv.len()) as u64;
                let close = [
                    (adamic_adar(&g, u, v), aa),
                    (f.aa, aa),
                    (resource_allocation(&g, u, v), ra),
                    (f.ra, ra),
                    (jaccard(&g, u, v), jc),
                    (f.jaccard, jc),
                ]
                .iter()
                .all(|(a, b)| (a - b).abs() <= 1e-12);
                ensure(exact && close, || {
                    format!("mismatch on graph {i} at ({u}, {v})")
                })?;
                pairs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s (limit 10 s)"))?;
    Ok(format!("100 graphs, {pairs} ordered pairs, {secs:.2} s"))
}

// 2 --------------------------------------------------------------------

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut tied_cases = 0;
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.gen_range(2..=2000);
        let levels: u32 = [3, 20, 1000, u32::MAX][case % 4];
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
        labels[0] = true;
        labels[n - 1] = false;
        let scores: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.gen_range(0..levels)))
            .collect();
        let pairs: Vec<Pair> = (0..n as u32)
            .map(|i| Pair::new(NodeId(i), NodeId(i + 5000)))
            .collect();
        if scores
            .iter()
            .map(|s| s.to_bits())
            .collect::<HashSet<_>>()
            .len()
            < n
        {
            tied_cases += 1;
        }
        let r = ScoredRanking::new(&pairs, &scores, &labels).map_err(|e| e.to_string())?;

        let (mut wins, mut total) = (0.0, 0.0);
        for i in (0..n).filter(|&i| labels[i]) {
            for j in (0..n).filter(|&j| !labels[j]) {
                total += 1.0;
                wins += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let above = |j: usize, i: usize| {
            scores[j] > scores[i] || (scores[j] == scores[i] && pairs[j] <= pairs[i])
        };
        let mut ap = 0.0;
        let positives: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
        for &i in &positives {
            let rank = (0..n).filter(|&j| above(j, i)).count();
            let hits = positives.iter().filter(|&&j| above(j, i)).count();
            ap += hits as f64 / rank as f64;
        }
        ap /= positives.len() as f64;

        let d_roc = (auroc(&r).map_err(|e| e.to_string())? - wins / total).abs();
        let d_ap = (average_precision(&r).map_err(|e| e.to_string())? - ap).abs();
        worst = worst.max(d_roc).max(d_ap);
        ensure(d_roc <= 1e-12 && d_ap <= 1e-12, || {
            format!("case {case}: AUROC off by {d_roc:e}, AP off by {d_ap:e}")
        })?;
    }
    Ok(format!(
        "200 samples ({tied_cases} with ties), max deviation {worst:e}"
    ))
}

// 3 --------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 5;
    let rows = (0..200)
        .map(|_| {
            let x: Vec<f64> = (0..dim)
                .map(|j| rng.gen_range(-1.0..1.0) * (1.0 + j as f64))
                .collect();
            let y = rng.gen_bool(1.0 / (1.0 + (-(x[0] - x[2])).exp()));
            (x, y)
        })
        .collect();
    let set = TrainingSet::from_rows(dim, rows).map_err(|e| e.to_string())?;
    let (mean, std) = standardization(&set);
    let x: Vec<f64> = set
        .features
        .chunks(dim)
        .flat_map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&std)
                .map(|((v, m), s)| (v - m) / s)
                .collect::<Vec<_>>()
        })
        .collect();
    let objective = LogisticObjective::new(dim, x, &set.labels, 0.5);
    let mut worst: f64 = 0.0;
    for point in 0..20 {
        let params: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (_, grad) = objective.value_and_gradient(&params);
        for k in 0..params.len() {
            let h = 1e-6;
            let (mut up, mut down) = (params.clone(), params.clone());
            up[k] += h;
            down[k] -= h;
            let numeric = (objective.value(&up) - objective.value(&down)) / (2.0 * h);
            let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            ensure(rel < 1e-5, || {
                format!("point {point}, component {k}: relative error {rel:e}")
            })?;
        }
    }
    Ok(format!("20 points, max relative error {worst:e}"))
}

// 4 --------------------------------------------------------------------

fn naive_modularity(g: &Graph, community: &[u32]) -> f64 {
    let two_m = 2.0 * g.edge_count() as f64;
    let mut q = 0.0;
    for i in g.nodes() {
        for j in g
            .nodes()
            .filter(|j| community[j.index()] == community[i.index()])
        {
            let a = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            q += a - (g.degree(i) * g.degree(j)) as f64 / two_m;
        }
    }
    q / two_m
}

fn louvain_checks() -> Outcome {
    let mut graphs = vec![two_cliques(5), two_cliques(7)];
    for s in 0..5 {
        graphs.push(gnp(80, 0.06, s));
        graphs.push(planted_partition(4, 20, 0.4, 0.02, s));
    }
    graphs.retain(|g| g.edge_count() > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for seed in 0..5 {
            let r = louvain(g, seed, DEFAULT_MAX_PASSES).map_err(|e| e.to_string())?;
            ensure(r.pass_modularity.windows(2).all(|w| w[1] >= w[0]), || {
                format!(
                    "graph {gi}, seed {seed}: modularity decreased {:?}",
                    r.pass_modularity
                )
            })?;
            let d = (modularity(g, &r.partition).map_err(|e| e.to_string())?
                - naive_modularity(g, r.partition.assignment()))
            .abs();
            worst = worst.max(d);
            runs += 1;
        }
        for _ in 0..10 {
            let k = rng.gen_range(1..6);
            let p = Partition::from_assignment(
                &g.nodes().map(|_| rng.gen_range(0..k)).collect::<Vec<_>>(),
            );
            let d = (modularity(g, &p).map_err(|e| e.to_string())?
                - naive_modularity(g, p.assignment()))
            .abs();
            worst = worst.max(d);
        }
    }
    ensure(worst <= 1e-12, || {
        format!("modularity differs from the double loop by {worst:e}")
    })?;
    let g = two_cliques(5);
    let expected: Vec<u32> = (0..10).map(|i| u32::from(i >= 5)).collect();
    for seed in 0..5 {
        let r = louvain(&g, seed, DEFAULT_MAX_PASSES).map_err(|e| e.to_string())?;
        let raw: Vec<usize> = r
            .partition
            .assignment()
            .iter()
            .map(|&c| c as usize)
            .collect();
        let got = Partition::from_assignment(&raw);
        ensure(got.assignment() == expected, || {
            format!("seed {seed}: two cliques split as {:?}", got.assignment())
        })?;
    }
    Ok(format!(
        "{} graphs, {runs} runs monotone, two cliques recovered, max modularity gap {worst:e}",
        graphs.len()
    ))
}

// 5-7 ------------------------------------------------------------------

fn data_dir() -> PathBuf {
    std::env::var_os("LINKBIAS_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn dataset(name: &str) -> Result<PathBuf, String> {
    let path = data_dir().join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(format!("dataset {} not found", path.display()))
    }
}

fn heuristics_run(input: PathBuf, out: &Path) -> Result<RunManifest, String> {
    let cfg = RunConfig {
        split: SplitSpec {
            input: Some(input),
            mode: SplitMode::Static,
            fraction: 0.8,
            weighted: false,
        },
        methods: vec![MethodKind::Heuristics],
        out: Some(out.to_path_buf()),
        ..RunConfig::default()
    };
    let outcome = cmd_run(&cfg).map_err(|e| e.to_string())?;
    let m = outcome.manifest;
    ensure(m.failures.is_empty(), || {
        format!("run failures: {:?}", m.failures)
    })?;
    Ok(m)
}

struct Datasets {
    facebook: Result<RunManifest, String>,
    astroph: Result<RunManifest, String>,
    _scratch: tempfile::TempDir,
}

fn run_datasets() -> Datasets {
    let scratch = tempfile::tempdir().expect("temp dir");
    let facebook = dataset("facebook_combined.txt")
        .and_then(|p| heuristics_run(p, &scratch.path().join("facebook")));
    let astroph =
        dataset("ca-AstroPh.txt").and_then(|p| heuristics_run(p, &scratch.path().join("astroph")));
    Datasets {
        facebook,
        astroph,
        _scratch: scratch,
    }
}

fn reproduction(data: &Datasets) -> Outcome {
    let fb = data
        .facebook
        .as_ref()
        .map_err(|e| format!("FACEBOOK: {e}"))?;
    let r = &fb.aggregates["heuristics"];
    ensure(r.runs.len() == 5, || {
        format!("FACEBOOK: {} of 5 seeds finished", r.runs.len())
    })?;
    ensure(r.auroc.mean >= 0.99, || {
        format!("FACEBOOK ROC mean {:.4} < 0.99", r.auroc.mean)
    })?;
    ensure((0.60..=0.85).contains(&r.ap.mean), || {
        format!("FACEBOOK AP mean {:.4} outside [0.60, 0.85]", r.ap.mean)
    })?;
    let astro = data.astroph.as_ref().map_err(|e| format!("ASTROPH: {e}"))?;
    let a = &astro.aggregates["heuristics"];
    ensure(a.auroc.mean >= 0.97, || {
        format!("ASTROPH ROC mean {:.4} < 0.97", a.auroc.mean)
    })?;
    Ok(format!(
        "FACEBOOK ROC {:.4} AP {:.4}; ASTROPH ROC {:.4}",
        r.auroc.mean, r.ap.mean, a.auroc.mean
    ))
}

fn bias_direction(data: &Datasets) -> Outcome {
    let fb = data
        .facebook
        .as_ref()
        .map_err(|e| format!("FACEBOOK: {e}"))?;
    let mut summary = Vec::new();
    for property in BiasProperty::ALL {
        let name = property.name();
        let above = fb
            .seeds
            .iter()
            .filter(|s| {
                let at = s.methods.get("heuristics").and_then(|m| m.fraction_at_quota.get(name));
                matches!((at, s.references.get(name)), (Some(f), Some(r)) if *f > r.ground_truth_ref)
            })
            .count();
        ensure(above >= 4, || {
            format!("{name}: fraction@1000 above ground truth in {above} of 5 seeds")
        })?;
        summary.push(format!("{name} {above}/5"));
    }
    Ok(summary.join(", "))
}

fn hub_reference(data: &Datasets) -> Outcome {
    let fb = data
        .facebook
        .as_ref()
        .map_err(|e| format!("FACEBOOK: {e}"))?;
    let refs: Vec<f64> = fb
        .seeds
        .iter()
        .filter_map(|s| {
            s.references
                .get(BiasProperty::InvolvesHub.name())
                .map(|r| r.ground_truth_ref)
        })
        .collect();
    ensure(refs.len() == 5, || {
        format!("{} of 5 seeds have a hub reference", refs.len())
    })?;
    ensure(refs.iter().all(|r| (0.45..=0.65).contains(r)), || {
        format!("hub ground truth {refs:?} outside [0.45, 0.65]")
    })?;
    Ok(format!("hub ground truth per seed {refs:.3?}"))
}

// 8 --------------------------------------------------------------------

fn collect_outputs(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_outputs(root, &path, out);
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("csv" | "json")
        ) {
            out.push((
                path.strip_prefix(root).unwrap().to_path_buf(),
                fs::read(&path).unwrap(),
            ));
        }
    }
}

fn determinism() -> Outcome {
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = scratch.path().join("graph.txt");
    let g = planted_partition(4, 40, 0.3, 0.02, 5);
    let text: String = g
        .edges()
        .map(|p| format!("{} {}\n", g.label(p.lo()), g.label(p.hi())))
        .collect();
    fs::write(&input, text).map_err(|e| e.to_string())?;
    let config = scratch.path().join("run.json");
    let cfg = serde_json::json!({
        "split": {"input": input, "mode": "static", "fraction": 0.8},
        "methods": ["heuristics", "trained"],
        "seeds": [11, 12],
        "sample_size": 5000,
        "quota_positives": 60,
        "walk": {"p": 1.0, "q": 1.0, "walk_length": 16, "walks_per_node": 3, "window": 4,
                 "negatives_per_positive": 5, "epochs": 2, "learning_rate": 0.025},
        "walk_dim": 8
    });
    fs::write(&config, cfg.to_string()).map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = scratch.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_linkbias"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env("RUST_LOG", "error")
            .output()
            .map_err(|e| e.to_string())?
            .status;
        ensure(status.success(), || {
            format!("run {name} exited with {status}")
        })?;
        let mut files = Vec::new();
        collect_outputs(&out, &out, &mut files);
        trees.push(files);
    }
    ensure(!trees[0].is_empty(), || "no CSV/JSON outputs".into())?;
    let names = |t: &[(PathBuf, Vec<u8>)]| t.iter().map(|f| f.0.clone()).collect::<Vec<_>>();
    ensure(names(&trees[0]) == names(&trees[1]), || {
        "output file sets differ".into()
    })?;
    for (a, b) in trees[0].iter().zip(&trees[1]) {
        ensure(a.1 == b.1, || {
            format!("{} differs between invocations", a.0.display())
        })?;
    }
    Ok(format!("{} CSV/JSON files byte-identical", trees[0].len()))
}

// 9 --------------------------------------------------------------------

fn sampling_contract() -> Outcome {
    let g = (0..)
        .map(|s| gnp(500, 0.04, s))
        .find(|g| g.is_connected())
        .unwrap();
    let split = split_static(&g, 0.2, 1).map_err(|e| e.to_string())?;
    let exact = split.prediction.len() as f64 / split.learning.non_edge_count() as f64;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let s = build_ratio_sample(&split, 40_000, 10, seed).map_err(|e| e.to_string())?;
        ensure(s.positives() > 10, || "positive floor is binding".into())?;
        let rel = (s.info.realized_positive_ratio - exact).abs() / exact;
        worst = worst.max(rel);
        ensure(rel < 0.01, || {
            format!("seed {seed}: relative deviation {rel:.4}")
        })?;
    }
    for (seed, quota) in [(1, 1), (2, 57), (3, 400)] {
        let s = build_positive_quota_sample(&split, quota, seed).map_err(|e| e.to_string())?;
        ensure(s.positives() == quota, || {
            format!("quota {quota}: got {} positives", s.positives())
        })?;
    }
    Ok(format!(
        "max relative ratio deviation {worst:.5} over 20 seeds; quotas exact"
    ))
}

// 10 -------------------------------------------------------------------

fn walk_sanity() -> Outcome {
    let g = two_cliques(5);
    let cfg = WalkConfig {
        walk_length: 20,
        walks_per_node: 10,
        window: 5,
        epochs: 5,
        ..WalkConfig::default()
    };
    let mut wins = 0;
    for seed in 0..5 {
        let e = train_biased_walk_embedding(&g, &cfg, 16, seed).map_err(|e| e.to_string())?;
        let (mut intra, mut cross) = (Vec::new(), Vec::new());
        for i in 0..10u32 {
            for j in i + 1..10 {
                let c = cosine_similarity(e.matrix.vector(NodeId(i)), e.matrix.vector(NodeId(j)));
                if (i < 5) == (j < 5) {
                    intra.push(c)
                } else {
                    cross.push(c)
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        wins += usize::from(mean(&intra) > mean(&cross));
    }
    ensure(wins >= 4, || {
        format!("cliques separated in {wins} of 5 seeds")
    })?;

    let h = gnp(60, 0.25, 4);
    let hub = h.nodes().max_by_key(|&u| h.degree(u)).unwrap();
    let nbrs = h.neighbors(hub);
    let walker = BiasedWalker::new(&h, 1.0, 1.0);
    let mut rng = seeded_rng(10);
    let draws = 30_000;
    let mut counts = vec![0usize; nbrs.len()];
    for i in 0..draws {
        let next = walker
            .step(Some(nbrs[i % nbrs.len()]), hub, &mut rng)
            .unwrap();
        counts[nbrs.binary_search(&next).unwrap()] += 1;
    }
    let expected = draws as f64 / nbrs.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((nbrs.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    ensure(stat < critical, || {
        format!("chi-square {stat:.2} >= critical {critical:.2}")
    })?;
    Ok(format!(
        "separation in {wins}/5 seeds; chi-square {stat:.2} < {critical:.2} (df {})",
        nbrs.len() - 1
    ))
}

fn main() -> ExitCode {
    // silence the default hook; failures are reported on the criterion line
    panic::set_hook(Box::new(|_| {}));
    let guarded = |f: &dyn Fn() -> Outcome| {
        panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        })
    };

    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (
            1,
            "heuristic oracle equivalence",
            guarded(&heuristic_oracle),
        ),
        (2, "metric oracles", guarded(&metric_oracles)),
        (3, "classifier gradient check", guarded(&gradient_check)),
        (
            4,
            "louvain monotonicity, recovery and modularity",
            guarded(&louvain_checks),
        ),
    ];
    let data = run_datasets();
    results.push((5, "dataset reproduction", guarded(&|| reproduction(&data))));
    results.push((
        6,
        "bias direction on FACEBOOK",
        guarded(&|| bias_direction(&data)),
    ));
    results.push((
        7,
        "hub ground-truth reference",
        guarded(&|| hub_reference(&data)),
    ));
    results.push((8, "determinism", guarded(&determinism)));
    results.push((9, "sampling contract", guarded(&sampling_contract)));
    results.push((10, "walk embedding sanity", guarded(&walk_sanity)));

    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
