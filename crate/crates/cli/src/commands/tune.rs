use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use coronal_core::levelset::{tune, Bounds, LevelSetParams, TrainingImage, TuneOptions, Tuned};
use coronal_core::maps::MapKind;

use super::{load_mask, load_scalar, Context};
use crate::error::{require_all, Result};
use crate::layout::{write_csv, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerImageRow {
    pub date: String,
    pub alpha: f64,
    pub sigma: f64,
    pub value: f64,
    pub initial_value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub dates: Vec<String>,
    pub bounds: Bounds,
    pub tuned: Tuned,
}

/// Pattern search for `(alpha, sigma)` on the first `[tune] images` dates,
/// starting from the initial masks written by `segment`.
pub fn run(ctx: &Context) -> Result<TuneReport> {
    let l = &ctx.layout;
    let dates: Vec<String> = l.dates(&ctx.range)?.into_iter().take(ctx.cfg.tune.images).collect();
    let mut req: Vec<(PathBuf, &str)> = Vec::new();
    for d in &dates {
        req.push((l.euv(d), "EUV map"));
        req.push((l.mag(d), "magnetic map"));
        req.push((l.consensus(d), "consensus mask"));
        req.push((l.segment_init(d), "initial mask (run segment)"));
    }
    require_all(&req)?;
    let images = dates
        .iter()
        .map(|d| {
            Ok(TrainingImage {
                euv: load_scalar(&l.euv(d), MapKind::Euv)?,
                mag: load_scalar(&l.mag(d), MapKind::Magnetic)?,
                init: load_mask(&l.segment_init(d), MapKind::Mask)?,
                consensus: load_mask(&l.consensus(d), MapKind::Mask)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut base: LevelSetParams = ctx.cfg.levelset;
    if ctx.cfg.tune.n_iters > 0 {
        base.n_iters = ctx.cfg.tune.n_iters;
    }
    let opts =
        TuneOptions { max_evals: ctx.cfg.tune.max_evals, min_step: ctx.cfg.tune.min_step, ..TuneOptions::default() };
    let tuned = tune(&images, &base, &opts)?;
    let rows: Vec<PerImageRow> = dates
        .iter()
        .zip(&tuned.per_image)
        .map(|(d, r)| PerImageRow {
            date: d.clone(),
            alpha: r.x[0],
            sigma: r.x[1],
            value: r.value,
            initial_value: r.initial_value,
            evaluations: r.evaluations,
            converged: r.converged,
        })
        .collect();
    write_csv(&l.tune("per_image.csv"), &rows)?;
    let report = TuneReport { dates, bounds: Bounds::alpha_sigma(), tuned };
    write_json(&l.tune("tuned.json"), &report)?;
    Ok(report)
}
