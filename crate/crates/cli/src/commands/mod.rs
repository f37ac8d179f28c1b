//! One module per pipeline command. Each reads only files written by earlier
//! stages and checks all of its inputs before doing any work.

pub mod classify;
pub mod eval;
pub mod matching;
pub mod segment;
pub mod synth;
pub mod tune;

use coronal_core::maps::{load_map, MapKind};
use coronal_core::{GridSpec, SegmentationMask, SynopticMap};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::layout::{DateRange, Layout};

/// Resolved configuration of one invocation.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: PipelineConfig,
    pub layout: Layout,
    pub range: DateRange,
}

pub(crate) fn load_scalar(path: &std::path::Path, kind: MapKind) -> Result<SynopticMap<f64>> {
    Ok(load_map::<f64>(path, kind)?.into_scalar()?)
}

pub(crate) fn load_mask(path: &std::path::Path, kind: MapKind) -> Result<SegmentationMask> {
    Ok(load_map::<f64>(path, kind)?.into_mask()?)
}

pub(crate) fn grid_of(map: &SynopticMap<f64>) -> Result<GridSpec<f64>> {
    Ok(GridSpec::from_dims(map.dims())?)
}

/// Median of a non-empty list.
pub(crate) fn median(mut v: Vec<f64>) -> Option<f64> {
    v.sort_by(f64::total_cmp);
    coronal_core::initseg::quantile(&v, 0.5)
}
