use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use coronal_core::classify::{extract_features, MapClass, MapFeatures, BAD, GOOD};
use coronal_core::maps::{close_mask, remove_regions, MapKind, Resize};
use coronal_core::matchcluster::{clusters_of_mask, run_matching, Cluster, MatchResult};
use coronal_core::{BoolField, GridSpec, Pixel, SegmentationMask};

use super::{load_mask, Context};
use crate::config::Reference;
use crate::error::{require_all, CliError, Result};
use crate::layout::{read_json, write_csv, write_json};
use crate::render::{match_map, Region, RegionKind};
use crate::synth::{DayTruth, TruthStatus};

/// Match outcome, features and (after `classify`) verdict of one model map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model: String,
    /// Known class from the dataset's truth file, if any.
    pub label: Option<usize>,
    pub features: MapFeatures<f64>,
    pub result: MatchResult<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<MapClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote: Option<f64>,
}

/// Contents of `match/<date>/results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateResults {
    pub date: String,
    pub reference: Reference,
    pub models: Vec<ModelEntry>,
}

/// One row of `match/features.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub date: String,
    pub model: String,
    #[serde(rename = "newN")]
    pub new_n: f64,
    #[serde(rename = "newA")]
    pub new_a: f64,
    #[serde(rename = "missN")]
    pub miss_n: f64,
    #[serde(rename = "missA")]
    pub miss_a: f64,
    #[serde(rename = "overA")]
    pub over_a: f64,
    #[serde(rename = "sameA")]
    pub same_a: f64,
    pub label: Option<usize>,
}

impl FeatureRow {
    pub fn features(&self) -> MapFeatures<f64> {
        MapFeatures {
            new_n: self.new_n,
            new_a: self.new_a,
            miss_n: self.miss_n,
            miss_a: self.miss_a,
            over_a: self.over_a,
            same_a: self.same_a,
        }
    }
}

/// Generator ground truth for one cluster against what matching decided.
/// `predicted` is `excluded` when pre-processing removed the anchor pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRow {
    pub date: String,
    pub model: String,
    pub side: String,
    pub row: usize,
    pub col: usize,
    pub truth: String,
    pub predicted: String,
}

pub fn status_name(s: TruthStatus) -> &'static str {
    match s {
        TruthStatus::Matched => "matched",
        TruthStatus::Missing => "missing",
        TruthStatus::New => "new",
    }
}

pub struct Summary {
    pub n_dates: usize,
    pub n_models: usize,
    /// Share of generator clusters whose matched/new/missing status was
    /// recovered, when truth is available.
    pub accuracy: Option<f64>,
}

/// Clears small gaps, then either the polar bands and unobserved pixels or
/// just the unobserved pixels.
fn prepare(mask: &SegmentationMask, observed: &BoolField, ctx: &Context) -> Result<SegmentationMask> {
    let dims = observed.dims();
    let mut m = close_mask(mask, ctx.cfg.matching.close_radius);
    if m.dims() != dims {
        m = m.resize_bilinear(dims)?;
    }
    if ctx.cfg.matching.remove_polar {
        Ok(remove_regions(&m, Some(observed))?)
    } else {
        Ok(m.with_observation(observed)?)
    }
}

fn reference_path(ctx: &Context, date: &str) -> (PathBuf, &'static str) {
    match ctx.cfg.matching.reference {
        Reference::Consensus => (ctx.layout.consensus(date), "consensus mask"),
        Reference::Segmented => (ctx.layout.segment_result(date), "segmentation result (run segment)"),
    }
}

/// Original cluster id holding each pixel.
fn cluster_index(clusters: &[Vec<Cluster<f64>>]) -> BTreeMap<Pixel, usize> {
    clusters.iter().flatten().flat_map(|c| c.pixels.iter().map(move |&p| (p, c.ids[0]))).collect()
}

fn regions<'a>(
    ref_clusters: &'a [Vec<Cluster<f64>>],
    model_clusters: &'a [Vec<Cluster<f64>>],
    r: &MatchResult<f64>,
) -> Vec<Region<'a>> {
    let matched_ref: Vec<usize> = r.matched.iter().flat_map(|m| m.ref_ids.iter().copied()).collect();
    let matched_model: Vec<usize> = r.matched.iter().flat_map(|m| m.model_ids.iter().copied()).collect();
    let mut out = Vec::new();
    for c in ref_clusters.iter().flatten() {
        let kind = if matched_ref.contains(&c.ids[0]) { RegionKind::MatchedReference } else { RegionKind::Missing };
        out.push(Region { pixels: &c.pixels, polarity: c.polarity, kind });
    }
    for c in model_clusters.iter().flatten() {
        let kind = if matched_model.contains(&c.ids[0]) { RegionKind::Matched } else { RegionKind::New };
        out.push(Region { pixels: &c.pixels, polarity: c.polarity, kind });
    }
    out
}

struct DateOutput {
    features: Vec<FeatureRow>,
    anchors: Vec<AnchorRow>,
}

fn run_date(ctx: &Context, date: &str) -> Result<DateOutput> {
    let l = &ctx.layout;
    let (ref_path, _) = reference_path(ctx, date);
    let raw_ref = load_mask(&ref_path, MapKind::Mask)?;
    let observed = raw_ref.observed();
    let grid = GridSpec::<f64>::from_dims(raw_ref.dims())?;
    let reference = prepare(&raw_ref, &observed, ctx)?;
    let files = l.models(date)?;
    if files.is_empty() {
        eprintln!("warning: {date}: no model maps, nothing to match");
        return Ok(DateOutput { features: Vec::new(), anchors: Vec::new() });
    }
    let models = files
        .iter()
        .map(|(_, p)| prepare(&load_mask(p, MapKind::Model)?, &observed, ctx))
        .collect::<Result<Vec<_>>>()?;
    let cfg = ctx.cfg.matching.to_core()?;
    let results = run_matching(&reference, &models, &cfg, &grid)?;
    let truth: Option<DayTruth> = if l.truth(date).exists() { Some(read_json(&l.truth(date))?) } else { None };

    let ref_clusters = clusters_of_mask(&reference, cfg.cluster_threshold, &grid)?;
    let ref_index = cluster_index(&ref_clusters);
    let mut entries = Vec::new();
    let mut features = Vec::new();
    let mut anchors = Vec::new();
    for (k, ((name, _), r)) in files.iter().zip(results).enumerate() {
        r.check_conservation()
            .map_err(|e| CliError::Numerical(format!("{date} {name}: cluster conservation violated: {e}")))?;
        let index: Option<usize> = name.strip_prefix("model_").and_then(|s| s.parse().ok());
        let model_truth = truth.as_ref().and_then(|t| t.models.iter().find(|m| Some(m.index) == index));
        let label = model_truth.map(|m| if m.good { GOOD } else { BAD });
        let f = extract_features(&r, ctx.cfg.forest.area_mode);
        features.push(FeatureRow {
            date: date.to_string(),
            model: name.clone(),
            new_n: f.new_n,
            new_a: f.new_a,
            miss_n: f.miss_n,
            miss_a: f.miss_a,
            over_a: f.over_a,
            same_a: f.same_a,
            label,
        });
        let model_clusters = clusters_of_mask(&models[k], cfg.cluster_threshold, &grid)?;
        if let Some(mt) = model_truth {
            let model_index = cluster_index(&model_clusters);
            let matched_ref: Vec<usize> = r.matched.iter().flat_map(|m| m.ref_ids.clone()).collect();
            let matched_model: Vec<usize> = r.matched.iter().flat_map(|m| m.model_ids.clone()).collect();
            let sides = [
                ("reference", &mt.reference, &ref_index, &matched_ref, "missing"),
                ("model", &mt.model, &model_index, &matched_model, "new"),
            ];
            for (side, list, index, matched, unmatched) in sides {
                for a in list {
                    let predicted = match index.get(&Pixel { row: a.row, col: a.col }) {
                        None => "excluded",
                        Some(id) if matched.contains(id) => "matched",
                        Some(_) => unmatched,
                    };
                    anchors.push(AnchorRow {
                        date: date.to_string(),
                        model: name.clone(),
                        side: side.to_string(),
                        row: a.row,
                        col: a.col,
                        truth: status_name(a.status).to_string(),
                        predicted: predicted.to_string(),
                    });
                }
            }
        }
        match_map(
            grid.dims(),
            &regions(&ref_clusters, &model_clusters, &r),
            &l.match_dir(date).join(format!("{name}.png")),
        )?;
        entries.push(ModelEntry { model: name.clone(), label, features: f, result: r, class: None, vote: None });
    }
    write_json(
        &l.match_results(date),
        &DateResults { date: date.to_string(), reference: ctx.cfg.matching.reference, models: entries },
    )?;
    Ok(DateOutput { features, anchors })
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let dates = ctx.layout.dates(&ctx.range)?;
    let req: Vec<(PathBuf, &str)> = dates.iter().map(|d| reference_path(ctx, d)).collect();
    require_all(&req)?;
    ctx.cfg.matching.to_core()?;
    let outputs = dates.par_iter().map(|d| run_date(ctx, d)).collect::<Result<Vec<_>>>()?;
    let features: Vec<FeatureRow> = outputs.iter().flat_map(|o| o.features.clone()).collect();
    let anchors: Vec<AnchorRow> = outputs.into_iter().flat_map(|o| o.anchors).collect();
    write_csv(&ctx.layout.match_features(), &features)?;
    write_csv(&ctx.layout.match_anchors(), &anchors)?;
    Ok(Summary { n_dates: dates.len(), n_models: features.len(), accuracy: anchor_accuracy(&anchors) })
}

/// Share of non-excluded anchors whose predicted status equals the truth.
pub fn anchor_accuracy(anchors: &[AnchorRow]) -> Option<f64> {
    let used: Vec<&AnchorRow> = anchors.iter().filter(|a| a.predicted != "excluded").collect();
    if used.is_empty() {
        return None;
    }
    let ok = used.iter().filter(|a| a.truth == a.predicted).count();
    Some(ok as f64 / used.len() as f64)
}
