//! Initial segmentation: a simplified dark-and-unipolar initializer, per-hole
//! feature vectors, forest-based candidate selection and mask union.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::field::{Dims, Field};
use crate::forest::{TiePolicy, TrainedForest};
use crate::maps::{
    connected_components, load_map, CoronalHole, Label, MapKind, Polarity, Resize, SegmentationMask, SynopticMap,
};
use crate::scalar::Scalar;

pub const EUV_BINS: usize = 255;
pub const FLUX_BINS: usize = 40;
/// Length of a flattened [`HoleFeatureVector`].
pub const FEATURE_DIM: usize = EUV_BINS + FLUX_BINS + 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitParams {
    /// Pixels strictly darker than this quantile of observed EUV are candidates.
    pub dark_quantile: f64,
    /// Minimum |mean flux| / mean |flux| for a candidate to be kept.
    pub unipolarity_min: f64,
}

impl Default for InitParams {
    fn default() -> Self {
        Self { dark_quantile: 0.25, unipolarity_min: 0.6 }
    }
}

impl InitParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.dark_quantile) || !(0.0..=1.0).contains(&self.unipolarity_min) {
            return contract(format!(
                "dark_quantile and unipolarity_min must lie in [0, 1] (got {}, {})",
                self.dark_quantile, self.unipolarity_min
            ));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data (the usual "type 7" rule).
pub fn quantile<T: Scalar>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = T::lit(h - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * w)
}

pub(crate) fn check_pair<T: Scalar>(euv: &SynopticMap<T>, mag: &SynopticMap<T>) -> Result<()> {
    if euv.dims() != mag.dims() {
        return Err(Error::DimensionMismatch { expected: euv.dims().to_string(), actual: mag.dims().to_string() });
    }
    if euv.observed() != mag.observed() {
        return contract("EUV and magnetic maps have different observation masks");
    }
    Ok(())
}

/// |mean flux| / mean |flux| over `pixels`, with the mean flux itself.
pub fn unipolarity<T: Scalar>(mag: &SynopticMap<T>, pixels: &[crate::field::Pixel]) -> (f64, f64) {
    let (mut sum, mut abs) = (0.0, 0.0);
    for &p in pixels {
        let f = mag.values()[p].to_f64_lossy();
        sum += f;
        abs += f.abs();
    }
    let n = pixels.len().max(1) as f64;
    let ratio = if abs > 0.0 { sum.abs() / abs } else { 0.0 };
    (ratio, sum / n)
}

/// Dark, unipolar regions: observed pixels strictly below the dark quantile
/// are grouped into 8-connected components, and a component is kept when its
/// flux is unipolar enough. Polarity follows the sign of the mean flux.
pub fn henney_harvey_init<T: Scalar>(
    euv: &SynopticMap<T>,
    mag: &SynopticMap<T>,
    params: &InitParams,
) -> Result<SegmentationMask> {
    params.validate()?;
    check_pair(euv, mag)?;
    let mut out = SegmentationMask::blank_like(euv.observed());
    let mut sorted: Vec<T> = euv.observed_values().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("observed values are finite"));
    let Some(cut) = quantile(&sorted, params.dark_quantile) else {
        return Ok(out);
    };
    let dark = euv.values().zip_map(euv.observed(), |&v, &o| o && v < cut)?;
    for comp in connected_components(&dark) {
        let (ratio, mean) = unipolarity(mag, &comp);
        if ratio < params.unipolarity_min {
            continue;
        }
        let Some(pol) = Polarity::of(mean) else {
            continue;
        };
        for &p in &comp {
            out.labels_mut()[p] = pol.label();
        }
    }
    Ok(out)
}

/// Histogram features of one hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HoleFeatureVector<T: Scalar> {
    pub euv_hist: Vec<T>,
    pub flux_hist: Vec<T>,
    /// Pixel count.
    pub area: T,
}

impl<T: Scalar> HoleFeatureVector<T> {
    /// EUV bins, then flux bins, then area.
    pub fn to_vec(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(FEATURE_DIM);
        v.extend_from_slice(&self.euv_hist);
        v.extend_from_slice(&self.flux_hist);
        v.push(self.area);
        v
    }
}

/// Bin of `v` among `n` uniform bins over `[lo, hi]`; the upper edge falls in
/// the last bin and a zero-width range puts everything in `degenerate`.
fn bin_of(v: f64, lo: f64, hi: f64, n: usize, degenerate: usize) -> usize {
    if hi <= lo {
        return degenerate;
    }
    let b = ((v - lo) * n as f64 / (hi - lo)).floor();
    (b.max(0.0) as usize).min(n - 1)
}

/// Observed EUV range and flux half-range of a map pair.
#[derive(Debug, Clone, Copy)]
pub struct HistogramRanges {
    pub euv_min: f64,
    pub euv_max: f64,
    pub flux_max: f64,
}

impl HistogramRanges {
    pub fn of<T: Scalar>(euv: &SynopticMap<T>, mag: &SynopticMap<T>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in euv.observed_values() {
            let v = v.to_f64_lossy();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            (lo, hi) = (0.0, 0.0);
        }
        let flux_max = mag.observed_values().map(|v| v.to_f64_lossy().abs()).fold(0.0, f64::max);
        Self { euv_min: lo, euv_max: hi, flux_max }
    }
}

/// 255-bin EUV histogram over the map's observed intensity range, 40-bin
/// flux histogram over `[-F, F]` with `F` the largest observed |flux|, both
/// L1-normalised, plus the pixel count.
pub fn hole_features<T: Scalar>(
    hole: &CoronalHole<T>,
    euv: &SynopticMap<T>,
    mag: &SynopticMap<T>,
) -> Result<HoleFeatureVector<T>> {
    check_pair(euv, mag)?;
    hole_features_in(hole, euv, mag, &HistogramRanges::of(euv, mag))
}

fn hole_features_in<T: Scalar>(
    hole: &CoronalHole<T>,
    euv: &SynopticMap<T>,
    mag: &SynopticMap<T>,
    r: &HistogramRanges,
) -> Result<HoleFeatureVector<T>> {
    if hole.pixels.is_empty() {
        return contract("cannot build features for an empty hole");
    }
    let mut eh = vec![0usize; EUV_BINS];
    let mut fh = vec![0usize; FLUX_BINS];
    for &p in &hole.pixels {
        if p.row >= euv.dims().rows || p.col >= euv.dims().cols || !euv.observed()[p] {
            return contract(format!("hole pixel {p:?} is not an observed map pixel"));
        }
        let v = euv.values()[p].to_f64_lossy();
        eh[bin_of(v, r.euv_min, r.euv_max, EUV_BINS, 0)] += 1;
        let f = mag.values()[p].to_f64_lossy();
        fh[bin_of(f, -r.flux_max, r.flux_max, FLUX_BINS, FLUX_BINS / 2)] += 1;
    }
    let n = T::count(hole.pixels.len());
    Ok(HoleFeatureVector {
        euv_hist: eh.into_iter().map(|c| T::count(c) / n).collect(),
        flux_hist: fh.into_iter().map(|c| T::count(c) / n).collect(),
        area: n,
    })
}

/// Features of every hole, in input order.
pub fn features_for_holes<T: Scalar>(
    holes: &[CoronalHole<T>],
    euv: &SynopticMap<T>,
    mag: &SynopticMap<T>,
) -> Result<Vec<HoleFeatureVector<T>>> {
    check_pair(euv, mag)?;
    let ranges = HistogramRanges::of(euv, mag);
    holes.par_iter().map(|h| hole_features_in(h, euv, mag, &ranges)).collect()
}

/// A hole the selector turned down, with the share of trees that voted it valid.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected<T: Scalar> {
    pub hole: CoronalHole<T>,
    pub valid_vote: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T: Scalar> {
    pub kept: Vec<CoronalHole<T>>,
    pub rejected: Vec<Rejected<T>>,
}

/// Keeps holes the forest votes valid (class 1). `tie` decides split votes;
/// the hole selector normally uses [`TiePolicy::Positive`] to keep them.
pub fn select_candidates<T: Scalar>(
    holes: &[CoronalHole<T>],
    features: &[HoleFeatureVector<T>],
    model: &TrainedForest<T>,
    tie: TiePolicy,
) -> Result<Selection<T>> {
    if holes.len() != features.len() {
        return contract(format!("{} holes but {} feature vectors", holes.len(), features.len()));
    }
    if model.n_features() != FEATURE_DIM {
        return Err(Error::DimensionMismatch {
            expected: format!("{FEATURE_DIM} features"),
            actual: format!("model trained on {}", model.n_features()),
        });
    }
    let mut sel = Selection { kept: Vec::new(), rejected: Vec::new() };
    for (h, f) in holes.iter().zip(features) {
        let x = f.to_vec();
        let v = model.votes(&x)?;
        let pred = model.predict_with(&x, tie)?;
        if pred.label == 1 {
            sel.kept.push(h.clone());
        } else {
            sel.rejected.push(Rejected { hole: h.clone(), valid_vote: v[1] as f64 / (v[0] + v[1]) as f64 });
        }
    }
    Ok(sel)
}

/// Mask holding only `holes`, with `NoObservation` where `observed` is false.
pub fn mask_from_holes<T: Scalar>(holes: &[CoronalHole<T>], observed: &crate::field::BoolField) -> SegmentationMask {
    let mut m = SegmentationMask::blank_like(observed);
    for h in holes {
        for &p in &h.pixels {
            m.labels_mut()[p] = h.polarity.label();
        }
    }
    m
}

/// Pixelwise union. `NoObservation` in any input wins; a pixel claimed with
/// both polarities takes the sign of the magnetic map there (positive when
/// the flux is zero or no map is given).
pub fn union_masks<T: Scalar>(masks: &[SegmentationMask], mag: Option<&SynopticMap<T>>) -> Result<SegmentationMask> {
    let Some(first) = masks.first() else {
        return contract("union of zero masks");
    };
    let dims = first.dims();
    if let Some(m) = masks.iter().find(|m| m.dims() != dims) {
        return Err(Error::DimensionMismatch { expected: dims.to_string(), actual: m.dims().to_string() });
    }
    if let Some(mag) = mag {
        if mag.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims.to_string(), actual: mag.dims().to_string() });
        }
    }
    let labels = Field::from_fn(dims, |p| {
        let (mut pos, mut neg, mut noobs) = (false, false, false);
        for m in masks {
            match m.labels()[p] {
                Label::PositiveHole => pos = true,
                Label::NegativeHole => neg = true,
                Label::NoObservation => noobs = true,
                Label::Background => {}
            }
        }
        match (noobs, pos, neg) {
            (true, _, _) => Label::NoObservation,
            (false, true, false) => Label::PositiveHole,
            (false, false, true) => Label::NegativeHole,
            (false, false, false) => Label::Background,
            (false, true, true) => {
                let flux = mag.map(|m| m.values()[p]).unwrap_or_else(T::zero);
                match Polarity::of(flux) {
                    Some(Polarity::Negative) => Label::NegativeHole,
                    _ => Label::PositiveHole,
                }
            }
        }
    });
    Ok(SegmentationMask::new(labels))
}

/// Loads an externally produced initialisation mask and brings it to `dims`
/// (bilinear per-polarity resize when the native size differs).
pub fn load_external_mask(path: &Path, dims: Dims) -> Result<SegmentationMask> {
    let mask = load_map::<f64>(path, MapKind::Mask)?.into_mask()?;
    if mask.dims() == dims {
        Ok(mask)
    } else {
        mask.resize_bilinear(dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Dims, Pixel};
    use crate::forest::DecisionTree;
    use crate::geometry::GridSpec;

    fn pair(
        dims: Dims,
        euv: impl FnMut(Pixel) -> f64,
        mag: impl FnMut(Pixel) -> f64,
    ) -> (SynopticMap<f64>, SynopticMap<f64>) {
        let grid = GridSpec::from_dims(dims).unwrap();
        let obs = Field::filled(dims, true);
        (
            SynopticMap::new(grid, MapKind::Euv, Field::from_fn(dims, euv), obs.clone()).unwrap(),
            SynopticMap::new(grid, MapKind::Magnetic, Field::from_fn(dims, mag), obs).unwrap(),
        )
    }

    fn in_blob(p: Pixel) -> bool {
        (8..14).contains(&p.row) && (10..18).contains(&p.col)
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.25), Some(2.0));
        assert_eq!(quantile(&v, 0.1), Some(1.4));
        assert_eq!(quantile(&v, 1.0), Some(5.0));
        assert_eq!(quantile::<f64>(&[], 0.5), None);
    }

    #[test]
    fn single_dark_unipolar_blob_is_found() {
        let dims = Dims::new(24, 48);
        let (euv, mag) = pair(
            dims,
            |p| if in_blob(p) { 10.0 } else { 100.0 + (p.col % 3) as f64 },
            |p| {
                if in_blob(p) {
                    -5.0
                } else if p.col < 24 {
                    3.0
                } else {
                    -3.0
                }
            },
        );
        let m = henney_harvey_init(&euv, &mag, &InitParams::default()).unwrap();
        for p in dims.pixels() {
            let want = if in_blob(p) { Label::NegativeHole } else { Label::Background };
            assert_eq!(m.labels()[p], want, "{p:?}");
        }
    }

    #[test]
    fn bipolar_blob_rejected_even_at_zero_threshold() {
        let dims = Dims::new(24, 48);
        let (euv, mag) = pair(dims, |p| if in_blob(p) { 10.0 } else { 100.0 }, |p| if p.col < 14 { 2.0 } else { -2.0 });
        let params = InitParams { dark_quantile: 0.25, unipolarity_min: 0.0 };
        // Columns 10..14 positive, 14..18 negative: the mean flux is exactly zero.
        let m = henney_harvey_init(&euv, &mag, &params).unwrap();
        assert_eq!(m.hole_count(), 0);
    }

    #[test]
    fn uniform_image_gives_empty_mask() {
        let (euv, mag) = pair(Dims::new(10, 20), |_| 42.0, |_| 1.0);
        let m = henney_harvey_init(&euv, &mag, &InitParams::default()).unwrap();
        assert_eq!(m.hole_count(), 0);
    }

    #[test]
    fn mismatched_pair_rejected() {
        let (euv, _) = pair(Dims::new(10, 20), |_| 1.0, |_| 1.0);
        let (_, mag) = pair(Dims::new(12, 20), |_| 1.0, |_| 1.0);
        assert!(henney_harvey_init(&euv, &mag, &InitParams::default()).is_err());
    }

    #[test]
    fn one_pixel_hole_features_are_one_hot() {
        let (euv, mag) = pair(Dims::new(10, 20), |p| p.col as f64, |p| p.row as f64 - 4.5);
        let grid = euv.grid;
        let hole = CoronalHole::from_pixels(vec![Pixel::new(0, 7)], Polarity::Negative, &grid);
        let f = hole_features(&hole, &euv, &mag).unwrap();
        assert_eq!(f.to_vec().len(), FEATURE_DIM);
        assert_eq!(f.euv_hist.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(f.flux_hist.iter().filter(|&&v| v == 1.0).count(), 1);
        // Flux -4.5 is the extreme of [-4.5, 4.5]: first bin.
        assert_eq!(f.flux_hist[0], 1.0);
        // 7 of range [0, 19]: floor(7/19*255) = 93.
        assert_eq!(f.euv_hist[93], 1.0);
        assert_eq!(f.area, 1.0);
    }

    #[test]
    fn negative_flux_lands_below_centre() {
        let (euv, mag) = pair(Dims::new(10, 20), |p| p.col as f64, |p| p.col as f64 - 10.0);
        let pixels: Vec<Pixel> = (0..10).map(|c| Pixel::new(3, c)).collect();
        let hole = CoronalHole::from_pixels(pixels, Polarity::Negative, &euv.grid);
        let f = hole_features(&hole, &euv, &mag).unwrap();
        assert!(f.flux_hist[FLUX_BINS / 2..].iter().all(|&v| v == 0.0));
        assert!((f.flux_hist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_unobserved_holes_rejected() {
        let (euv, mag) = pair(Dims::new(10, 20), |_| 1.0, |_| 1.0);
        let hole = CoronalHole::from_pixels(vec![], Polarity::Positive, &euv.grid);
        assert!(hole_features(&hole, &euv, &mag).is_err());
    }

    fn constant_model(class: usize) -> TrainedForest<f64> {
        TrainedForest::from_trees(vec![DecisionTree::constant(class); 3], FEATURE_DIM).unwrap()
    }

    #[test]
    fn selection_with_constant_models() {
        let (euv, mag) = pair(Dims::new(10, 20), |p| p.col as f64, |_| 1.0);
        let holes: Vec<_> = (0..3)
            .map(|c| CoronalHole::from_pixels(vec![Pixel::new(4, 5 * c)], Polarity::Positive, &euv.grid))
            .collect();
        let feats = features_for_holes(&holes, &euv, &mag).unwrap();
        let all = select_candidates(&holes, &feats, &constant_model(1), TiePolicy::Positive).unwrap();
        assert_eq!(all.kept, holes);
        let none = select_candidates(&holes, &feats, &constant_model(0), TiePolicy::Positive).unwrap();
        assert!(none.kept.is_empty());
        assert_eq!(none.rejected.len(), 3);
        assert_eq!(none.rejected[0].valid_vote, 0.0);
        let wrong = TrainedForest::from_trees(vec![DecisionTree::<f64>::constant(1)], 5).unwrap();
        assert!(select_candidates(&holes, &feats, &wrong, TiePolicy::Positive).is_err());
    }

    #[test]
    fn selector_tie_keeps_hole() {
        let (euv, mag) = pair(Dims::new(10, 20), |p| p.col as f64, |_| 1.0);
        let holes = vec![CoronalHole::from_pixels(vec![Pixel::new(1, 1)], Polarity::Positive, &euv.grid)];
        let feats = features_for_holes(&holes, &euv, &mag).unwrap();
        let split =
            TrainedForest::from_trees(vec![DecisionTree::<f64>::constant(1), DecisionTree::constant(0)], FEATURE_DIM)
                .unwrap();
        assert_eq!(select_candidates(&holes, &feats, &split, TiePolicy::Positive).unwrap().kept.len(), 1);
        assert_eq!(select_candidates(&holes, &feats, &split, TiePolicy::Negative).unwrap().kept.len(), 0);
    }

    #[test]
    fn union_identities_and_conflicts() {
        let dims = Dims::new(6, 8);
        let mut a = SegmentationMask::empty(dims);
        a.labels_mut()[Pixel::new(1, 1)] = Label::PositiveHole;
        a.labels_mut()[Pixel::new(2, 2)] = Label::PositiveHole;
        let mut b = SegmentationMask::empty(dims);
        b.labels_mut()[Pixel::new(2, 2)] = Label::NegativeHole;
        b.labels_mut()[Pixel::new(4, 4)] = Label::NegativeHole;
        b.labels_mut()[Pixel::new(5, 0)] = Label::NoObservation;
        let none: Option<&SynopticMap<f64>> = None;
        assert_eq!(union_masks(&[a.clone()], none).unwrap(), a);
        assert_eq!(union_masks(&[a.clone(), SegmentationMask::empty(dims)], none).unwrap(), a);
        let (_, mag) = pair(dims, |_| 1.0, |_| -1.0);
        let u = union_masks(&[a, b], Some(&mag)).unwrap();
        assert_eq!(u.labels()[Pixel::new(1, 1)], Label::PositiveHole);
        assert_eq!(u.labels()[Pixel::new(2, 2)], Label::NegativeHole);
        assert_eq!(u.labels()[Pixel::new(4, 4)], Label::NegativeHole);
        assert_eq!(u.labels()[Pixel::new(5, 0)], Label::NoObservation);
        assert!(union_masks::<f64>(&[], None).is_err());
    }
}
