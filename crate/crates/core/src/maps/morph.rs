//! Binary morphology with a disc structuring element. Longitude wraps;
//! offsets that leave the grid in latitude are ignored, which keeps dilation
//! and erosion adjoint so closing is extensive and idempotent.

use crate::field::{BoolField, Dims, Pixel};

fn disc(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut offs = Vec::new();
    for dr in -r..=r {
        for dc in -r..=r {
            if dr * dr + dc * dc <= r * r {
                offs.push((dr, dc));
            }
        }
    }
    offs
}

pub fn dilate(mask: &BoolField, radius: usize) -> BoolField {
    let dims = mask.dims();
    let offs = disc(radius);
    let mut out = BoolField::filled(dims, false);
    for p in mask.set_pixels() {
        for &(dr, dc) in &offs {
            if let Some(q) = dims.offset(p, dr, dc) {
                out[q] = true;
            }
        }
    }
    out
}

pub fn erode(mask: &BoolField, radius: usize) -> BoolField {
    let dims = mask.dims();
    let offs = disc(radius);
    BoolField::from_fn(dims, |p| mask[p] && offs.iter().all(|&(dr, dc)| fits(mask, dims, p, dr, dc)))
}

#[inline]
fn fits(mask: &BoolField, dims: Dims, p: Pixel, dr: isize, dc: isize) -> bool {
    dims.offset(p, dr, dc).map(|q| mask[q]).unwrap_or(true)
}

/// Dilation followed by erosion; fills gaps narrower than the disc.
pub fn binary_close(mask: &BoolField, radius: usize) -> BoolField {
    if radius == 0 {
        return mask.clone();
    }
    erode(&dilate(mask, radius), radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Direct set-definition oracle: x in close(A) iff every disc translate
    // covering x intersects A.
    fn close_oracle(mask: &BoolField, radius: usize) -> BoolField {
        let dims = mask.dims();
        let offs = disc(radius);
        let dil = BoolField::from_fn(dims, |p| {
            offs.iter().any(|&(dr, dc)| dims.offset(p, -dr, -dc).map(|q| mask[q]).unwrap_or(false))
        });
        BoolField::from_fn(dims, |p| {
            offs.iter().all(|&(dr, dc)| dims.offset(p, dr, dc).map(|q| dil[q]).unwrap_or(true))
        })
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = BoolField::from_fn(Dims::new(5, 7), |p| (p.row + p.col) % 3 == 0);
        assert_eq!(binary_close(&m, 0), m);
    }

    #[test]
    fn closes_one_pixel_gap() {
        let dims = Dims::new(9, 12);
        // two 3x3 blobs at cols 1..4 and 5..8, gap at col 4
        let m = BoolField::from_fn(dims, |p| {
            (3..6).contains(&p.row) && ((1..4).contains(&p.col) || (5..8).contains(&p.col))
        });
        let c = binary_close(&m, 1);
        assert!(c[Pixel::new(4, 4)], "gap not closed");
        assert!(m.set_pixels().iter().all(|&p| c[p]));
        assert_eq!(crate::maps::holes::connected_components(&m).len(), 2);
        assert_eq!(crate::maps::holes::connected_components(&c).len(), 1);
    }

    proptest! {
        #[test]
        fn closing_matches_oracle_and_is_idempotent(bits in proptest::collection::vec(any::<bool>(), 256), radius in 0usize..3) {
            let m = BoolField::from_vec(Dims::new(16, 16), bits).unwrap();
            let c = binary_close(&m, radius);
            prop_assert_eq!(&c, &close_oracle(&m, radius));
            prop_assert_eq!(&binary_close(&c, radius), &c);
            prop_assert!(m.set_pixels().iter().all(|&p| c[p]));
        }
    }
}
