//! The `report` stage: comparison tables and figures over finished runs,
//! with means and deviations recomputed from the per-seed metric files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use linkbias_core::evaluation::Summary;
use linkbias_core::BiasProperty;

use crate::config::read_json;
use crate::curves::{read_curve_csv, Curve};
use crate::error::{CliError, CliResult};
use crate::manifest::*;
use crate::plot::{curve_chart, Level, Series};

/// Largest tolerated gap between recomputed and recorded aggregates.
const AGGREGATE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub method: String,
    pub ap: Summary,
    pub auroc: Summary,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
}

fn dataset_name(manifest: &RunManifest, run: &Path) -> String {
    let source = manifest
        .config
        .split_dir
        .as_ref()
        .or(manifest.config.split.input.as_ref());
    source
        .and_then(|p| {
            if p.is_dir() || p.extension().is_none() {
                p.file_name()
            } else {
                p.file_stem()
            }
        })
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| run.display().to_string())
}

pub fn cmd_report(runs: &[PathBuf], out: &Path) -> CliResult<Report> {
    if runs.is_empty() {
        return Err(CliError::Config(
            "report needs at least one run directory".into(),
        ));
    }
    let mut report = Report::default();
    let mut precision_series = Vec::new();
    let mut bias_series: BTreeMap<BiasProperty, Vec<Series>> = BTreeMap::new();
    let mut levels: BTreeMap<BiasProperty, Vec<Level>> = BTreeMap::new();
    let mut seed_lists: Vec<(String, Vec<u64>)> = Vec::new();

    for run in runs {
        let manifest: RunManifest = read_json(&run.join(MANIFEST_FILE))
            .map_err(|e| CliError::Data(format!("{}: not a finished run ({e})", run.display())))?;
        let dataset = dataset_name(&manifest, run);
        seed_lists.push((run.display().to_string(), manifest.config.seeds.clone()));

        for method in &manifest.methods {
            let mut ap = Vec::new();
            let mut roc = Vec::new();
            let mut precision = Vec::new();
            let mut bias: BTreeMap<BiasProperty, Vec<Curve>> = BTreeMap::new();
            for record in &manifest.seeds {
                let ok = record
                    .methods
                    .get(method)
                    .is_some_and(|m| m.status == MethodStatus::Ok);
                if !ok {
                    continue;
                }
                let dir = run.join(seed_dir_name(record.seed)).join(method);
                let m: SeedMetrics = read_json(&dir.join(METRICS_FILE))
                    .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
                ap.push(m.metrics.ap);
                roc.push(m.metrics.auroc);
                precision.push(read_curve_csv(&dir.join(PRECISION_FILE))?.0);
                for property in BiasProperty::ALL {
                    bias.entry(property)
                        .or_default()
                        .push(read_curve_csv(&dir.join(bias_file(property.name())))?.0);
                }
            }
            if ap.is_empty() {
                report
                    .warnings
                    .push(format!("{dataset}/{method}: no successful seeds"));
                continue;
            }
            let row = ReportRow {
                dataset: dataset.clone(),
                method: method.clone(),
                ap: Summary::from_values(&ap),
                auroc: Summary::from_values(&roc),
            };
            if let Some(agg) = manifest.aggregates.get(method) {
                let off = (agg.ap.mean - row.ap.mean)
                    .abs()
                    .max((agg.ap.std - row.ap.std).abs())
                    .max((agg.auroc.mean - row.auroc.mean).abs())
                    .max((agg.auroc.std - row.auroc.std).abs());
                if off > AGGREGATE_TOLERANCE {
                    report.warnings.push(format!("{dataset}/{method}: recorded aggregate differs from per-seed files by {off:e}"));
                }
            }
            let label = if runs.len() > 1 {
                format!("{dataset}/{method}")
            } else {
                method.clone()
            };
            if let Some(c) = Curve::mean(&precision) {
                precision_series.push(Series {
                    name: label.clone(),
                    points: c.points(),
                    dashed: false,
                });
            }
            for (property, curves) in bias {
                if let Some(c) = Curve::mean(&curves) {
                    bias_series.entry(property).or_default().push(Series {
                        name: label.clone(),
                        points: c.points(),
                        dashed: false,
                    });
                }
            }
            report.rows.push(row);
        }

        // references depend on the sample, not on the method
        for property in BiasProperty::ALL {
            let mut truth = Vec::new();
            let mut data = Vec::new();
            let mut perfect = Vec::new();
            for record in manifest.seeds.iter().filter(|s| s.error.is_none()) {
                let path = run
                    .join(seed_dir_name(record.seed))
                    .join(reference_file(property.name()));
                let (curve, refs) = read_curve_csv(&path)?;
                if let [g, d] = refs[..] {
                    truth.push(g);
                    data.push(d);
                }
                perfect.push(curve);
            }
            if truth.is_empty() {
                continue;
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let suffix = if runs.len() > 1 {
                format!(" ({dataset})")
            } else {
                String::new()
            };
            let entry = levels.entry(property).or_default();
            entry.push(Level {
                name: format!("ground truth{suffix}"),
                y: mean(&truth),
                color: "black",
            });
            entry.push(Level {
                name: format!("dataset{suffix}"),
                y: mean(&data),
                color: "gray",
            });
            if let Some(c) = Curve::mean(&perfect) {
                bias_series.entry(property).or_default().push(Series {
                    name: format!("perfect prediction{suffix}"),
                    points: c.points(),
                    dashed: true,
                });
            }
        }
    }

    let first = &seed_lists[0];
    for (run, seeds) in &seed_lists[1..] {
        if seeds != &first.1 {
            let msg = format!(
                "{run} used seeds {seeds:?} but {} used {:?}; samples differ across runs",
                first.0, first.1
            );
            log::warn!("{msg}");
            report.warnings.push(msg);
        }
    }

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let write = |name: &str, text: String| {
        let path = out.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    };
    write("report.csv", table_csv(&report.rows))?;
    write("report.md", table_markdown(&report))?;
    if !precision_series.is_empty() {
        write(
            "precision_at_k.svg",
            curve_chart("precision@k", "k", "precision@k", &precision_series, &[]),
        )?;
    }
    for (property, series) in &bias_series {
        let lv = levels.get(property).map(Vec::as_slice).unwrap_or(&[]);
        let svg = curve_chart(
            &format!("fraction@k: {property}"),
            "k",
            "fraction@k",
            series,
            lv,
        );
        write(&format!("bias_{}.svg", property.name()), svg)?;
    }
    Ok(report)
}

fn table_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from("dataset,method,runs,ap_mean,ap_std,auroc_mean,auroc_std\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.dataset,
            r.method,
            r.ap.values.len(),
            r.ap.mean,
            r.ap.std,
            r.auroc.mean,
            r.auroc.std
        );
    }
    s
}

fn table_markdown(report: &Report) -> String {
    let mut s = String::from("| dataset | method | runs | AP | ROC |\n|---|---|---|---|---|\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.3} ± {:.3} | {:.3} ± {:.3} |",
            r.dataset,
            r.method,
            r.ap.values.len(),
            r.ap.mean,
            r.ap.std,
            r.auroc.mean,
            r.auroc.std
        );
    }
    if !report.warnings.is_empty() {
        s.push_str("\nWarnings:\n\n");
        for w in &report.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}
