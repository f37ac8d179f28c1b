use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::field::{BoolField, Field, Pixel};
use crate::geometry::{centroid, GridSpec, SpherePoint};
use crate::scalar::Scalar;

use super::{Polarity, SegmentationMask};

/// A connected, single-polarity set of hole pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CoronalHole<T: Scalar> {
    /// Sorted row-major.
    pub pixels: Vec<Pixel>,
    pub polarity: Polarity,
    pub image_area: usize,
    pub physical_area: T,
    pub centroid: SpherePoint<T>,
}

impl<T: Scalar> CoronalHole<T> {
    pub fn from_pixels(mut pixels: Vec<Pixel>, polarity: Polarity, grid: &GridSpec<T>) -> Self {
        pixels.sort_unstable();
        Self {
            image_area: pixels.len(),
            physical_area: grid.area_of(&pixels),
            centroid: centroid(&pixels, grid),
            pixels,
            polarity,
        }
    }
}

/// 8-connected components with longitudinal wrap, in order of each
/// component's first pixel in row-major scan order.
pub fn connected_components(indicator: &BoolField) -> Vec<Vec<Pixel>> {
    let dims = indicator.dims();
    let mut seen = Field::filled(dims, false);
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in dims.pixels() {
        if !indicator[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(p) = queue.pop_front() {
            comp.push(p);
            for q in dims.neighbors8(p) {
                if indicator[q] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Splits a mask into coronal holes: positive holes first, then negative.
pub fn extract_holes<T: Scalar>(mask: &SegmentationMask, grid: &GridSpec<T>) -> Vec<CoronalHole<T>> {
    Polarity::BOTH
        .iter()
        .flat_map(|&pol| {
            connected_components(&mask.polarity_indicator(pol))
                .into_iter()
                .map(move |px| CoronalHole::from_pixels(px, pol, grid))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Dims;
    use crate::maps::Label;

    fn paint(m: &mut SegmentationMask, rows: std::ops::Range<usize>, cols: &[usize], l: Label) {
        for r in rows {
            for &c in cols {
                m.labels_mut()[Pixel::new(r, c)] = l;
            }
        }
    }

    #[test]
    fn empty_mask_has_no_holes() {
        let g = GridSpec::<f64>::new(36, 18).unwrap();
        assert!(extract_holes(&SegmentationMask::empty(g.dims()), &g).is_empty());
    }

    #[test]
    fn counts_per_polarity() {
        let g = GridSpec::<f64>::new(36, 18).unwrap();
        let mut m = SegmentationMask::empty(g.dims());
        paint(&mut m, 2..4, &[2, 3], Label::PositiveHole);
        paint(&mut m, 10..12, &[20, 21], Label::PositiveHole);
        paint(&mut m, 6..8, &[10], Label::NegativeHole);
        let holes = extract_holes(&m, &g);
        let pos = holes.iter().filter(|h| h.polarity == Polarity::Positive).count();
        let neg = holes.iter().filter(|h| h.polarity == Polarity::Negative).count();
        assert_eq!((pos, neg), (2, 1));
        assert!(holes.iter().all(|h| h.image_area == h.pixels.len()));
    }

    #[test]
    fn wrap_blob_is_one_component() {
        let g = GridSpec::<f64>::new(36, 18).unwrap();
        let mut m = SegmentationMask::empty(g.dims());
        paint(&mut m, 8..10, &[34, 35, 0, 1], Label::NegativeHole);
        let holes = extract_holes(&m, &g);
        assert_eq!(holes.len(), 1);
        assert_eq!(holes[0].image_area, 8);

        // Oracle: rolling the map by half a turn puts the blob mid-grid.
        let rolled =
            SegmentationMask::new(Field::from_fn(g.dims(), |p| m.labels()[Pixel::new(p.row, (p.col + 18) % 36)]));
        assert_eq!(extract_holes(&rolled, &g).len(), 1);
    }

    #[test]
    fn no_wrap_across_poles() {
        let ind = BoolField::from_fn(Dims::new(6, 8), |p| p.row == 0 && (p.col == 0 || p.col == 4));
        assert_eq!(connected_components(&ind).len(), 2);
    }
}
