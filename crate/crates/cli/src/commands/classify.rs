use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use coronal_core::classify::{classify_map, MapClass, BAD, GOOD};
use coronal_core::forest::{permutation_importance, train, tune_oob, DecisionTree, ForestConfig, TrainedForest};
use coronal_core::initseg::{features_for_holes, FEATURE_DIM};
use coronal_core::maps::{extract_holes, MapKind};

use super::segment::{candidate_sources, load_candidates};
use super::{grid_of, load_mask, Context};
use crate::commands::matching::{DateResults, FeatureRow};
use crate::error::{require_all, CliError, Result};
use crate::layout::{read_csv, read_json, write_csv, write_json};

/// Share of a candidate hole's pixels that must lie inside consensus holes
/// for the candidate to count as valid when training selectors.
pub const SELECTOR_VALID_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub date: String,
    pub model: String,
    pub set: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub date: String,
    pub model: String,
    pub label: usize,
    pub predicted: usize,
    pub vote: f64,
}

/// Confusion matrix row; `truth` is `good` or `bad`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRow {
    pub truth: String,
    pub predicted_good: usize,
    pub predicted_bad: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub feature: String,
    /// Normalised mean decrease in impurity.
    pub importance: f64,
    /// Held-out accuracy drop when the feature is shuffled.
    pub permutation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobRow {
    pub n_trees: usize,
    pub max_depth: usize,
    pub oob_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub oob_error: f64,
    pub best_n_trees: usize,
    pub best_max_depth: usize,
}

pub fn confusion(truth: &[usize], predicted: &[usize]) -> Vec<ConfusionRow> {
    [("good", GOOD), ("bad", BAD)]
        .into_iter()
        .map(|(name, t)| {
            let count = |p: usize| truth.iter().zip(predicted).filter(|&(&a, &b)| a == t && b == p).count();
            ConfusionRow { truth: name.into(), predicted_good: count(GOOD), predicted_bad: count(BAD) }
        })
        .collect()
}

fn forest_config(ctx: &Context) -> ForestConfig {
    let f = &ctx.cfg.forest;
    ForestConfig {
        n_trees: f.n_trees,
        max_depth: f.max_depth,
        min_leaf: f.min_leaf,
        seed: ctx.cfg.seed,
        ..ForestConfig::default()
    }
}

/// Seeded shuffle, then the first `fraction` of rows train and the rest test.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64) * fraction).round() as usize;
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Trains the map classifier on a seeded split of `match/features.csv`.
pub fn train_classifier(ctx: &Context) -> Result<TrainSummary> {
    let l = &ctx.layout;
    let rows: Vec<FeatureRow> = read_csv(&l.match_features())?;
    let labelled: Vec<&FeatureRow> = rows.iter().filter(|r| r.label.is_some() && ctx.range.contains(&r.date)).collect();
    let labels: Vec<usize> = labelled.iter().map(|r| r.label.unwrap_or(BAD)).collect();
    if !(labels.contains(&GOOD) && labels.contains(&BAD)) {
        return Err(CliError::MissingInput(format!(
            "{}: training needs labelled maps of both classes",
            l.match_features().display()
        )));
    }
    let set = ctx.cfg.forest.features;
    let x: Vec<Vec<f64>> = labelled.iter().map(|r| r.features().to_vec(set)).collect();
    let (train_idx, test_idx) = split_indices(x.len(), ctx.cfg.forest.train_fraction, ctx.cfg.seed);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
        (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (xtr, ytr) = pick(&train_idx);
    let (xte, yte) = pick(&test_idx);
    let base = forest_config(ctx);
    let forest = train(&xtr, &ytr, &base)?;

    let mut predictions = Vec::new();
    for &i in &test_idx {
        let (class, vote) = classify_map(&labelled[i].features(), set, &forest)?;
        predictions.push(PredictionRow {
            date: labelled[i].date.clone(),
            model: labelled[i].model.clone(),
            label: labels[i],
            predicted: class.label(),
            vote,
        });
    }
    let predicted: Vec<usize> = predictions.iter().map(|p| p.predicted).collect();
    let correct = predicted.iter().zip(&yte).filter(|(a, b)| a == b).count();
    let accuracy = if yte.is_empty() { 0.0 } else { correct as f64 / yte.len() as f64 };

    let permutation =
        if xte.is_empty() { vec![0.0; set.len()] } else { permutation_importance(&forest, &xte, &yte, ctx.cfg.seed)? };
    let importances: Vec<ImportanceRow> = set
        .names()
        .iter()
        .zip(forest.importances())
        .zip(permutation)
        .map(|((n, &imp), perm)| ImportanceRow { feature: n.to_string(), importance: imp, permutation: perm })
        .collect();

    let grid: Vec<(usize, usize)> =
        ctx.cfg.forest.oob_trees.iter().flat_map(|&t| ctx.cfg.forest.oob_depths.iter().map(move |&d| (t, d))).collect();
    let oob = tune_oob(&xtr, &ytr, &grid, &base)?;
    let surface: Vec<OobRow> = oob
        .surface
        .iter()
        .map(|p| OobRow { n_trees: p.n_trees, max_depth: p.max_depth, oob_error: p.oob_error })
        .collect();

    let split: Vec<SplitRow> = labelled
        .iter()
        .enumerate()
        .map(|(i, r)| SplitRow {
            date: r.date.clone(),
            model: r.model.clone(),
            set: if train_idx.binary_search(&i).is_ok() { "train" } else { "test" }.into(),
        })
        .collect();

    let summary = TrainSummary {
        n_train: xtr.len(),
        n_test: xte.len(),
        accuracy,
        oob_error: forest.oob_error(),
        best_n_trees: oob.best.n_trees,
        best_max_depth: oob.best.max_depth,
    };
    forest.save(&l.classify("model.json"))?;
    write_csv(&l.classify("confusion.csv"), &confusion(&yte, &predicted))?;
    write_csv(&l.classify("predictions.csv"), &predictions)?;
    write_csv(&l.classify("importances.csv"), &importances)?;
    write_csv(&l.classify("oob_surface.csv"), &surface)?;
    write_csv(&l.classify("split.csv"), &split)?;
    write_json(&l.classify("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorRow {
    pub source: String,
    pub candidates: usize,
    pub valid: usize,
    pub oob_error: f64,
}

/// Trains one hole selector per initializer source from consensus overlap.
pub fn train_selectors(ctx: &Context) -> Result<Vec<SelectorRow>> {
    let l = &ctx.layout;
    let dates = l.dates(&ctx.range)?;
    let mut req = super::segment::required_inputs(ctx, &dates);
    req.extend(dates.iter().map(|d| (l.consensus(d), "consensus mask")));
    require_all(&req)?;
    let sources = candidate_sources(ctx);
    let per_date = dates
        .par_iter()
        .map(|d| -> Result<Vec<(Vec<Vec<f64>>, Vec<usize>)>> {
            let c = load_candidates(ctx, d)?;
            let truth = load_mask(&l.consensus(d), MapKind::Mask)?.hole_indicator();
            let grid = grid_of(&c.euv)?;
            c.sources
                .iter()
                .map(|(_, mask)| {
                    let holes = extract_holes(mask, &grid);
                    let feats = features_for_holes(&holes, &c.euv, &c.mag)?;
                    let y = holes
                        .iter()
                        .map(|h| {
                            let inside = h.pixels.iter().filter(|&&p| truth[p]).count();
                            usize::from(inside as f64 >= SELECTOR_VALID_FRACTION * h.pixels.len() as f64)
                        })
                        .collect();
                    Ok((feats.iter().map(|f| f.to_vec()).collect(), y))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = ForestConfig {
        n_trees: ctx.cfg.init.selector_trees,
        max_depth: 64,
        max_splits: Some(ctx.cfg.init.selector_splits),
        seed: ctx.cfg.seed,
        ..ForestConfig::default()
    };
    let mut rows = Vec::new();
    for (k, source) in sources.iter().enumerate() {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for d in &per_date {
            x.extend(d[k].0.iter().cloned());
            y.extend(d[k].1.iter().copied());
        }
        let valid = y.iter().filter(|&&v| v == 1).count();
        // A source whose candidates all share one class gets a constant vote.
        let model = if valid == 0 || valid == y.len() {
            TrainedForest::from_trees(
                vec![DecisionTree::constant(usize::from(valid > 0 || y.is_empty()))],
                FEATURE_DIM,
            )?
        } else {
            train(&x, &y, &cfg)?
        };
        model.save(&l.selector(source))?;
        rows.push(SelectorRow { source: source.clone(), candidates: y.len(), valid, oob_error: model.oob_error() });
    }
    write_csv(&l.classify("selectors.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedRow {
    pub date: String,
    pub model: String,
    pub class: MapClass,
    pub vote: f64,
}

/// Applies the trained classifier to every matched model map and records
/// the verdict in the per-date results.
pub fn classify(ctx: &Context) -> Result<Vec<ClassifiedRow>> {
    let l = &ctx.layout;
    let dates = l.dates(&ctx.range)?;
    let mut req: Vec<(PathBuf, &str)> = vec![(l.classify("model.json"), "classifier (run train-classifier)")];
    req.extend(dates.iter().map(|d| (l.match_results(d), "match results (run match)")));
    require_all(&req)?;
    let forest = TrainedForest::<f64>::load(&l.classify("model.json"))?;
    let set = ctx.cfg.forest.features;
    let mut out = Vec::new();
    for d in &dates {
        let mut res: DateResults = read_json(&l.match_results(d))?;
        for e in &mut res.models {
            let (class, vote) = classify_map(&e.features, set, &forest)?;
            e.class = Some(class);
            e.vote = Some(vote);
            out.push(ClassifiedRow { date: d.clone(), model: e.model.clone(), class, vote });
        }
        write_json(&l.match_results(d), &res)?;
    }
    write_csv(&l.classify("classified.csv"), &out)?;
    Ok(out)
}
