//! PNG overlays for visual review.

use std::path::Path;

use coronal_core::geometry::boundary_pixels;
use coronal_core::{Dims, Pixel, Polarity, SegmentationMask, SynopticMap};
use image::{Rgb, RgbImage};

use crate::error::{CliError, Result};
use crate::layout::write_bytes;

/// Each map pixel becomes a square of this many image pixels.
const SCALE: u32 = 4;

const POSITIVE: Rgb<u8> = Rgb([230, 40, 40]);
const NEGATIVE: Rgb<u8> = Rgb([40, 90, 235]);
const NO_OBSERVATION: Rgb<u8> = Rgb([60, 45, 70]);
const NEW: Rgb<u8> = Rgb([245, 150, 20]);
const MISSING: Rgb<u8> = Rgb([150, 40, 190]);
const OUTLINE: Rgb<u8> = Rgb([20, 20, 20]);

fn polarity_colour(p: Polarity) -> Rgb<u8> {
    match p {
        Polarity::Positive => POSITIVE,
        Polarity::Negative => NEGATIVE,
    }
}

fn canvas(dims: Dims, fill: Rgb<u8>) -> RgbImage {
    RgbImage::from_pixel(dims.cols as u32 * SCALE, dims.rows as u32 * SCALE, fill)
}

fn put(img: &mut RgbImage, p: Pixel, c: Rgb<u8>) {
    for dy in 0..SCALE {
        for dx in 0..SCALE {
            img.put_pixel(p.col as u32 * SCALE + dx, p.row as u32 * SCALE + dy, c);
        }
    }
}

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| CliError::Io(format!("png encoding for {}: {e}", path.display())))?;
    write_bytes(path, &bytes)
}

/// Hole boundaries of `mask`, coloured by polarity, over the grey EUV map.
pub fn segmentation_overlay(euv: &SynopticMap<f64>, mask: &SegmentationMask, path: &Path) -> Result<()> {
    let dims = euv.dims();
    let (lo, hi) = euv.observed_values().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut img = canvas(dims, NO_OBSERVATION);
    for p in dims.pixels() {
        if euv.observed()[p] {
            let g = ((euv.values()[p] - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
            put(&mut img, p, Rgb([g, g, g]));
        }
    }
    for pol in [Polarity::Positive, Polarity::Negative] {
        let set = mask.polarity_indicator(pol).set_pixels();
        for p in boundary_pixels(&set, dims) {
            put(&mut img, p, polarity_colour(pol));
        }
    }
    save(&img, path)
}

/// One cluster to draw on a match map.
pub struct Region<'a> {
    pub pixels: &'a [Pixel],
    pub polarity: Polarity,
    pub kind: RegionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Matched model cluster, drawn solid.
    Matched,
    /// Matched reference cluster, drawn as a thin outline.
    MatchedReference,
    /// Model cluster without a partner, drawn hollow.
    New,
    /// Reference cluster without a partner, drawn hollow.
    Missing,
}

/// Matched clusters solid, new and missing ones hollow, on white.
pub fn match_map(dims: Dims, regions: &[Region<'_>], path: &Path) -> Result<()> {
    let mut img = canvas(dims, Rgb([255, 255, 255]));
    let order = [RegionKind::Matched, RegionKind::MatchedReference, RegionKind::Missing, RegionKind::New];
    for kind in order {
        for r in regions.iter().filter(|r| r.kind == kind) {
            match kind {
                RegionKind::Matched => r.pixels.iter().for_each(|&p| put(&mut img, p, polarity_colour(r.polarity))),
                RegionKind::MatchedReference => {
                    boundary_pixels(r.pixels, dims).into_iter().for_each(|p| put(&mut img, p, OUTLINE))
                }
                RegionKind::New => boundary_pixels(r.pixels, dims).into_iter().for_each(|p| put(&mut img, p, NEW)),
                RegionKind::Missing => {
                    boundary_pixels(r.pixels, dims).into_iter().for_each(|p| put(&mut img, p, MISSING))
                }
            }
        }
    }
    save(&img, path)
}
