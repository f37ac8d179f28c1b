//! Bilinear resampling between grids.
//!
//! Sample positions use the half-pixel convention
//! `src = (dst + 0.5) * src_n / dst_n - 0.5`, clamped to the source extent.

use crate::error::{contract, Result};
use crate::field::{BoolField, Dims, Field, Pixel};
use crate::geometry::GridSpec;
use crate::scalar::Scalar;

use super::{Label, Polarity, SegmentationMask, SynopticMap};

pub trait Resize: Sized {
    fn resize_bilinear(&self, target: Dims) -> Result<Self>;
}

#[derive(Debug, Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    w: f64,
}

fn taps(src_n: usize, dst_n: usize) -> Vec<Tap> {
    let scale = src_n as f64 / dst_n as f64;
    (0..dst_n)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_n - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src_n - 1);
            Tap { lo, hi, w: s - lo as f64 }
        })
        .collect()
}

fn nearest(src_n: usize, dst_n: usize) -> Vec<usize> {
    let scale = src_n as f64 / dst_n as f64;
    (0..dst_n).map(|d| (((d as f64 + 0.5) * scale).floor() as usize).min(src_n - 1)).collect()
}

fn check_target(target: Dims) -> Result<()> {
    if target.rows < 2 || target.cols < 2 {
        return contract(format!("resize target {target} smaller than 2x2"));
    }
    Ok(())
}

/// Bilinear resample of a scalar field, ignoring samples where `weight_mask`
/// is false (their weight is redistributed over the remaining taps).
pub(crate) fn bilinear_field<T: Scalar>(src: &Field<T>, valid: Option<&BoolField>, target: Dims) -> Field<T> {
    let sd = src.dims();
    let rt = taps(sd.rows, target.rows);
    let ct = taps(sd.cols, target.cols);
    Field::from_fn(target, |p| {
        let ry = rt[p.row];
        let cx = ct[p.col];
        let corners = [
            (ry.lo, cx.lo, (1.0 - ry.w) * (1.0 - cx.w)),
            (ry.lo, cx.hi, (1.0 - ry.w) * cx.w),
            (ry.hi, cx.lo, ry.w * (1.0 - cx.w)),
            (ry.hi, cx.hi, ry.w * cx.w),
        ];
        let mut acc = T::zero();
        let mut wsum = T::zero();
        for (r, c, w) in corners {
            if valid.map(|v| *v.at(r, c)).unwrap_or(true) {
                let w = T::lit(w);
                acc += w * *src.at(r, c);
                wsum += w;
            }
        }
        if valid.is_none() {
            acc
        } else if wsum > T::zero() {
            acc / wsum
        } else {
            T::zero()
        }
    })
}

fn nearest_bool(src: &BoolField, target: Dims) -> BoolField {
    let sd = src.dims();
    let rn = nearest(sd.rows, target.rows);
    let cn = nearest(sd.cols, target.cols);
    BoolField::from_fn(target, |p| *src.at(rn[p.row], cn[p.col]))
}

impl<T: Scalar> Resize for SynopticMap<T> {
    fn resize_bilinear(&self, target: Dims) -> Result<Self> {
        check_target(target)?;
        let grid = GridSpec::with_radius(target.cols, target.rows, self.grid.radius)?;
        let values = bilinear_field(self.values(), Some(self.observed()), target);
        let observed = nearest_bool(self.observed(), target);
        SynopticMap::new(grid, self.kind, values, observed)
    }
}

impl Resize for SegmentationMask {
    /// Each polarity is resampled as an indicator and re-thresholded at 0.5
    /// (ties count as hole); observation coverage is resampled by nearest
    /// neighbour and wins over hole labels.
    fn resize_bilinear(&self, target: Dims) -> Result<Self> {
        check_target(target)?;
        let pos = self.polarity_indicator(Polarity::Positive).map(|&b| if b { 1.0 } else { 0.0 });
        let neg = self.polarity_indicator(Polarity::Negative).map(|&b| if b { 1.0 } else { 0.0 });
        let pos = bilinear_field::<f64>(&pos, None, target);
        let neg = bilinear_field::<f64>(&neg, None, target);
        let observed = nearest_bool(&self.observed(), target);
        let labels = Field::from_fn(target, |p: Pixel| {
            if !observed[p] {
                return Label::NoObservation;
            }
            let (a, b) = (pos[p], neg[p]);
            if a.max(b) >= 0.5 {
                if a >= b {
                    Label::PositiveHole
                } else {
                    Label::NegativeHole
                }
            } else {
                Label::Background
            }
        });
        Ok(SegmentationMask::new(labels))
    }
}
