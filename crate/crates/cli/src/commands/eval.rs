use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use coronal_core::initseg::quantile;

use super::classify::{ConfusionRow, ImportanceRow, OobRow, TrainSummary};
use super::matching::{anchor_accuracy, AnchorRow};
use super::segment::MetricsRow;
use super::Context;
use crate::error::{CliError, Result};
use crate::layout::{read_csv, read_json, write_bytes, write_csv};

/// Quartiles of the sens/spec distance over dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub method: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn distance_row(method: &str, mut v: Vec<f64>) -> Option<DistanceRow> {
    v.sort_by(f64::total_cmp);
    Some(DistanceRow {
        method: method.into(),
        n: v.len(),
        min: *v.first()?,
        q1: quantile(&v, 0.25)?,
        median: quantile(&v, 0.5)?,
        q3: quantile(&v, 0.75)?,
        max: *v.last()?,
    })
}

/// Counts of generator status (rows) against matching decision (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfusionRow {
    pub truth: String,
    pub matched: usize,
    pub new: usize,
    pub missing: usize,
    pub excluded: usize,
}

fn match_confusion(anchors: &[AnchorRow]) -> Vec<MatchConfusionRow> {
    ["matched", "new", "missing"]
        .into_iter()
        .map(|t| {
            let n = |p: &str| anchors.iter().filter(|a| a.truth == t && a.predicted == p).count();
            MatchConfusionRow {
                truth: t.into(),
                matched: n("matched"),
                new: n("new"),
                missing: n("missing"),
                excluded: n("excluded"),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub distances: Vec<DistanceRow>,
    pub match_accuracy: Option<f64>,
    pub classifier: TrainSummary,
}

/// Builds `report/` from the outputs of segment, match and train-classifier.
pub fn run(ctx: &Context) -> Result<Report> {
    let l = &ctx.layout;
    let stages: [(&str, Vec<PathBuf>); 3] = [
        ("segment", vec![l.segment_metrics()]),
        ("match", vec![l.match_features(), l.match_anchors()]),
        (
            "train-classifier",
            ["summary.json", "confusion.csv", "oob_surface.csv", "importances.csv"].map(|f| l.classify(f)).to_vec(),
        ),
    ];
    let missing: Vec<&str> =
        stages.iter().filter(|(_, files)| files.iter().any(|f| !f.exists())).map(|(s, _)| *s).collect();
    if !missing.is_empty() {
        return Err(CliError::MissingInput(format!(
            "outputs missing for stage(s): {} (under {})",
            missing.join(", "),
            l.work.display()
        )));
    }

    let metrics: Vec<MetricsRow> = read_csv(&l.segment_metrics())?;
    let distances: Vec<DistanceRow> = [
        distance_row("initializer", metrics.iter().filter_map(|m| m.init_d).collect()),
        distance_row("full", metrics.iter().filter_map(|m| m.d).collect()),
    ]
    .into_iter()
    .flatten()
    .collect();
    let anchors: Vec<AnchorRow> = read_csv(&l.match_anchors())?;
    let mconf = match_confusion(&anchors);
    let match_accuracy = anchor_accuracy(&anchors);
    let classifier: TrainSummary = read_json(&l.classify("summary.json"))?;
    let cconf: Vec<ConfusionRow> = read_csv(&l.classify("confusion.csv"))?;
    let oob: Vec<OobRow> = read_csv(&l.classify("oob_surface.csv"))?;
    let imp: Vec<ImportanceRow> = read_csv(&l.classify("importances.csv"))?;

    write_csv(&l.report("distance.csv"), &distances)?;
    write_csv(&l.report("match_confusion.csv"), &mconf)?;
    write_csv(&l.report("classify_confusion.csv"), &cconf)?;
    write_csv(&l.report("oob_surface.csv"), &oob)?;
    write_csv(&l.report("importances.csv"), &imp)?;

    let mut md = String::from("# Pipeline report\n\n## Segmentation distance\n\n");
    md += "| method | n | min | q1 | median | q3 | max |\n|---|---|---|---|---|---|---|\n";
    for d in &distances {
        let _ = writeln!(
            md,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            d.method, d.n, d.min, d.q1, d.median, d.q3, d.max
        );
    }
    let undefined = metrics.iter().filter(|m| !m.note.is_empty()).count();
    if undefined > 0 {
        let _ = writeln!(md, "\n{undefined} date(s) carry a note in segment/metrics.csv.");
    }
    md +=
        "\n## Cluster matching\n\n| truth \\ decision | matched | new | missing | excluded |\n|---|---|---|---|---|\n";
    for r in &mconf {
        let _ = writeln!(md, "| {} | {} | {} | {} | {} |", r.truth, r.matched, r.new, r.missing, r.excluded);
    }
    match match_accuracy {
        Some(a) => {
            let _ = writeln!(md, "\nAccuracy over non-excluded clusters: {a:.4}");
        }
        None => md += "\nNo ground truth available for matching.\n",
    }
    md += "\n## Map classification (held-out set)\n\n| truth \\ predicted | good | bad |\n|---|---|---|\n";
    for r in &cconf {
        let _ = writeln!(md, "| {} | {} | {} |", r.truth, r.predicted_good, r.predicted_bad);
    }
    let _ = writeln!(
        md,
        "\nAccuracy {:.4} on {} test maps ({} training maps); OOB error {:.4}.",
        classifier.accuracy, classifier.n_test, classifier.n_train, classifier.oob_error
    );
    md += "\n## OOB error surface\n\n| trees | depth | OOB error |\n|---|---|---|\n";
    for r in &oob {
        let _ = writeln!(md, "| {} | {} | {:.4} |", r.n_trees, r.max_depth, r.oob_error);
    }
    let _ =
        writeln!(md, "\nLowest OOB error at {} trees, depth {}.", classifier.best_n_trees, classifier.best_max_depth);
    md += "\n## Feature importance\n\n| feature | impurity | permutation |\n|---|---|---|\n";
    for r in &imp {
        let _ = writeln!(md, "| {} | {:.4} | {:.4} |", r.feature, r.importance, r.permutation);
    }
    write_bytes(&l.report("report.md"), md.as_bytes())?;
    Ok(Report { distances, match_accuracy, classifier })
}
