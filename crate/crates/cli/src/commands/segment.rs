use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use coronal_core::forest::{TiePolicy, TrainedForest};
use coronal_core::initseg::{
    features_for_holes, henney_harvey_init, load_external_mask, mask_from_holes, select_candidates, union_masks,
};
use coronal_core::levelset::{segment_detailed, sens_spec, SensSpec};
use coronal_core::maps::{extract_holes, save_mask, MapKind};
use coronal_core::{Error, SegmentationMask, SynopticMap};

use super::{grid_of, load_mask, load_scalar, median, Context};
use crate::error::{require_all, CliError, Result};
use crate::layout::write_csv;
use crate::render::segmentation_overlay;

/// Name of the built-in dark-region initializer among the candidate sources.
pub const HH_SOURCE: &str = "hh";

/// One row of `segment/metrics.csv`. Empty cells mean undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub date: String,
    pub sens: Option<f64>,
    pub spec: Option<f64>,
    pub d: Option<f64>,
    pub init_sens: Option<f64>,
    pub init_spec: Option<f64>,
    pub init_d: Option<f64>,
    pub note: String,
}

/// Initial mask candidates of one date, by source, before selection.
pub struct Candidates {
    pub euv: SynopticMap<f64>,
    pub mag: SynopticMap<f64>,
    pub sources: Vec<(String, SegmentationMask)>,
}

pub fn candidate_sources(ctx: &Context) -> Vec<String> {
    std::iter::once(HH_SOURCE.to_string()).chain(ctx.cfg.init.external.iter().cloned()).collect()
}

pub fn required_inputs(ctx: &Context, dates: &[String]) -> Vec<(PathBuf, &'static str)> {
    let l = &ctx.layout;
    let mut req = Vec::new();
    for d in dates {
        req.push((l.euv(d), "EUV map"));
        req.push((l.mag(d), "magnetic map"));
        for name in &ctx.cfg.init.external {
            req.push((l.external(d, name), "external mask"));
        }
    }
    req
}

pub fn load_candidates(ctx: &Context, date: &str) -> Result<Candidates> {
    let l = &ctx.layout;
    let euv = load_scalar(&l.euv(date), MapKind::Euv)?;
    let mag = load_scalar(&l.mag(date), MapKind::Magnetic)?;
    let mut sources = vec![(HH_SOURCE.to_string(), henney_harvey_init(&euv, &mag, &ctx.cfg.init.params)?)];
    for name in &ctx.cfg.init.external {
        let m = load_external_mask(&l.external(date, name), euv.dims())?.with_observation(euv.observed())?;
        sources.push((name.clone(), m));
    }
    Ok(Candidates { euv, mag, sources })
}

fn select(c: &Candidates, selectors: &[TrainedForest<f64>]) -> Result<Vec<SegmentationMask>> {
    let grid = grid_of(&c.euv)?;
    c.sources
        .iter()
        .zip(selectors)
        .map(|((_, mask), model)| {
            let holes = extract_holes(mask, &grid);
            let feats = features_for_holes(&holes, &c.euv, &c.mag)?;
            let sel = select_candidates(&holes, &feats, model, TiePolicy::Positive)?;
            Ok(mask_from_holes(&sel.kept, c.euv.observed()))
        })
        .collect()
}

fn rates(r: std::result::Result<SensSpec, Error>, what: &str, note: &mut Vec<String>) -> Result<[Option<f64>; 3]> {
    match r {
        Ok(s) => Ok([Some(s.sensitivity), Some(s.specificity), Some(s.distance)]),
        Err(Error::SensitivityUndefined) => {
            note.push(format!("{what} sens undefined"));
            Ok([None; 3])
        }
        Err(Error::SpecificityUndefined) => {
            note.push(format!("{what} spec undefined"));
            Ok([None; 3])
        }
        Err(e) => Err(e.into()),
    }
}

fn run_date(ctx: &Context, date: &str, selectors: Option<&[TrainedForest<f64>]>) -> Result<MetricsRow> {
    let l = &ctx.layout;
    let c = load_candidates(ctx, date)?;
    let masks = match selectors {
        Some(s) => select(&c, s)?,
        None => c.sources.iter().map(|(_, m)| m.clone()).collect(),
    };
    let init = union_masks(&masks, Some(&c.mag))?;
    let out = segment_detailed(&c.euv, &c.mag, &init, &ctx.cfg.levelset).map_err(|e| match e {
        Error::Numerical { iteration, msg } => {
            CliError::Numerical(format!("{date}: level set diverged at iteration {iteration}: {msg}"))
        }
        e => e.into(),
    })?;
    save_mask(&init, MapKind::Mask, &l.segment_init(date))?;
    save_mask(&out.mask, MapKind::Mask, &l.segment_result(date))?;
    segmentation_overlay(&c.euv, &out.mask, &l.segment_dir(date).join("overlay.png"))?;

    let mut row = MetricsRow {
        date: date.to_string(),
        sens: None,
        spec: None,
        d: None,
        init_sens: None,
        init_spec: None,
        init_d: None,
        note: String::new(),
    };
    let truth_path = l.consensus(date);
    if truth_path.exists() {
        let truth = load_mask(&truth_path, MapKind::Mask)?;
        let mut note = Vec::new();
        [row.sens, row.spec, row.d] = rates(sens_spec(&out.mask, &truth), "result", &mut note)?;
        [row.init_sens, row.init_spec, row.init_d] = rates(sens_spec(&init, &truth), "init", &mut note)?;
        row.note = note.join("; ");
    } else {
        row.note = "no consensus".into();
    }
    Ok(row)
}

pub struct Summary {
    pub rows: Vec<MetricsRow>,
    pub median_d: Option<f64>,
    pub median_init_d: Option<f64>,
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let dates = ctx.layout.dates(&ctx.range)?;
    let mut req = required_inputs(ctx, &dates);
    let sources = candidate_sources(ctx);
    if ctx.cfg.init.selectors {
        for s in &sources {
            req.push((ctx.layout.selector(s), "hole selector model (run train-classifier --selector)"));
        }
    }
    require_all(&req)?;
    let selectors = if ctx.cfg.init.selectors {
        Some(
            sources
                .iter()
                .map(|s| TrainedForest::<f64>::load(&ctx.layout.selector(s)).map_err(CliError::from))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let rows = dates.par_iter().map(|d| run_date(ctx, d, selectors.as_deref())).collect::<Result<Vec<_>>>()?;
    write_csv(&ctx.layout.segment_metrics(), &rows)?;
    Ok(Summary {
        median_d: median(rows.iter().filter_map(|r| r.d).collect()),
        median_init_d: median(rows.iter().filter_map(|r| r.init_d).collect()),
        rows,
    })
}
