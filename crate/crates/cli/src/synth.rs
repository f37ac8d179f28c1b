//! Seeded synthetic dataset: EUV and magnetic maps, a consensus mask, external
//! initializer masks and twelve perturbed physical-model masks per date.
//!
//! The model ensemble is a stand-in for physical-model parameter sweeps. Each
//! model is drawn from a low-perturbation group (rank 1) or a high one
//! (rank 2); its good/bad label is then decided from the realised error: the
//! spherical area where the model's hole labels differ from the consensus,
//! divided by the consensus hole area, both taken outside the polar bands
//! that matching ignores. A model is good iff that fraction is at most
//! `label_threshold`.

use std::f64::consts::{PI, TAU};

use chrono::NaiveDate;
use coronal_core::geometry::set_distance;
use coronal_core::maps::POLAR_BAND_LAT;
use coronal_core::{Dims, Field, GridSpec, Label, MapKind, Pixel, Polarity, SegmentationMask, SynopticMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest |latitude| of a mid-latitude hole centre, degrees.
const MAX_CENTRE_LAT: f64 = 55.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_dates: usize,
    /// First date, `YYYY-MM-DD`; dates are consecutive days.
    pub start: String,
    pub rows: usize,
    pub cols: usize,
    pub holes_min: usize,
    pub holes_max: usize,
    /// Semi-axis range of mid-latitude holes, pixels.
    pub axis_min: f64,
    pub axis_max: f64,
    /// Chance of a north polar hole.
    pub polar_prob: f64,
    /// Minimum arc between hole boundaries, radians.
    pub separation: f64,
    /// Unobserved rows at the south pole.
    pub nobs_rows: usize,
    pub background: f64,
    /// Amplitude of the smooth large-scale background variation.
    pub background_var: f64,
    pub noise: f64,
    /// Intensity drop across a hole edge.
    pub edge_depth: f64,
    pub edge_width: f64,
    /// Extra darkening that decays outside the edge.
    pub halo_depth: f64,
    pub halo_scale: f64,
    pub hole_flux: f64,
    pub background_flux: f64,
    /// Period of the mixed-polarity background flux, pixels.
    pub flux_wavelength: f64,
    /// Width of the unipolar ring around each hole, pixels.
    pub unipolar_margin: f64,
    pub n_models: usize,
    /// Chance that a model is drawn from the low-perturbation group.
    pub good_fraction: f64,
    /// Largest centre shift, pixels.
    pub jitter_good: f64,
    pub jitter_bad: f64,
    /// Standard deviation of the log axis scale.
    pub scale_sd_good: f64,
    pub scale_sd_bad: f64,
    pub remove_good: f64,
    pub remove_bad: f64,
    /// Chance, per consensus hole, that the model gains an unrelated hole.
    pub add_good: f64,
    pub add_bad: f64,
    /// Largest relative label error of a good model.
    pub label_threshold: f64,
    /// Largest number of false blobs per external mask.
    pub ext_fakes_max: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_dates: 20,
            start: "2010-07-01".into(),
            rows: 90,
            cols: 180,
            holes_min: 4,
            holes_max: 7,
            axis_min: 3.0,
            axis_max: 7.0,
            polar_prob: 0.5,
            separation: 0.3,
            nobs_rows: 3,
            background: 200.0,
            background_var: 8.0,
            noise: 0.4,
            edge_depth: 110.0,
            edge_width: 0.6,
            halo_depth: 25.0,
            halo_scale: 2.5,
            hole_flux: 12.0,
            background_flux: 4.0,
            flux_wavelength: 16.0,
            unipolar_margin: 5.0,
            n_models: 12,
            good_fraction: 0.5,
            jitter_good: 1.0,
            jitter_bad: 5.0,
            scale_sd_good: 0.1,
            scale_sd_bad: 0.5,
            remove_good: 0.03,
            remove_bad: 0.35,
            add_good: 0.03,
            add_bad: 0.3,
            label_threshold: 0.5,
            ext_fakes_max: 2,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(format!("[synth] {m}")));
        for (name, p) in [
            ("polar_prob", self.polar_prob),
            ("good_fraction", self.good_fraction),
            ("remove_good", self.remove_good),
            ("remove_bad", self.remove_bad),
            ("add_good", self.add_good),
            ("add_bad", self.add_bad),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must be a probability, got {p}"));
            }
        }
        if self.rows < 20 || self.cols < 40 {
            return bad("grid must be at least 40x20");
        }
        if self.holes_min > self.holes_max {
            return bad("holes_min exceeds holes_max");
        }
        if !(self.axis_min >= 1.5 && self.axis_min <= self.axis_max) {
            return bad("need 1.5 <= axis_min <= axis_max");
        }
        if self.nobs_rows >= self.rows / 4 {
            return bad("nobs_rows too large for the grid");
        }
        let non_negative = [
            self.separation,
            self.background_var,
            self.noise,
            self.edge_depth,
            self.edge_width,
            self.halo_depth,
            self.halo_scale,
            self.hole_flux,
            self.background_flux,
            self.flux_wavelength,
            self.unipolar_margin,
            self.jitter_good,
            self.jitter_bad,
            self.scale_sd_good,
            self.scale_sd_bad,
            self.label_threshold,
        ];
        if non_negative.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("geometry, intensity and perturbation parameters must be finite and non-negative");
        }
        if self.edge_width == 0.0 || self.flux_wavelength == 0.0 {
            return bad("edge_width and flux_wavelength must be positive");
        }
        self.dates().map(|_| ())
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.rows, self.cols)
    }

    pub fn dates(&self) -> Result<Vec<String>> {
        let start = NaiveDate::parse_from_str(&self.start, "%Y-%m-%d")
            .map_err(|e| CliError::Config(format!("[synth] start = '{}': {e}", self.start)))?;
        Ok((0..self.n_dates).map(|i| (start + chrono::Days::new(i as u64)).format("%Y-%m-%d").to_string()).collect())
    }
}

/// A hole shape on the pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// Ellipse with centre and semi-axes in pixel units.
    Ellipse { r0: f64, c0: f64, ar: f64, ac: f64 },
    /// North cap whose edge row is `base + amp * sin(lon + phase)`.
    Polar { base: f64, amp: f64, phase: f64 },
}

impl Shape {
    /// Approximate signed distance to the edge in pixels, negative inside.
    pub fn signed_distance(&self, p: Pixel, dims: Dims) -> f64 {
        let r = p.row as f64 + 0.5;
        let c = p.col as f64 + 0.5;
        match *self {
            Shape::Ellipse { r0, c0, ar, ac } => {
                let dr = r - r0;
                let w = dims.cols as f64;
                let mut dc = (c - c0).rem_euclid(w);
                if dc > w / 2.0 {
                    dc -= w;
                }
                let t = dr.hypot(dc);
                if t == 0.0 {
                    return -ar.min(ac);
                }
                let rho = ((dr / ar).powi(2) + (dc / ac).powi(2)).sqrt();
                t - t / rho
            }
            Shape::Polar { base, amp, phase } => {
                let edge = base + amp * (TAU * c / dims.cols as f64 + phase).sin();
                r - edge
            }
        }
    }

    pub fn contains(&self, p: Pixel, dims: Dims) -> bool {
        self.signed_distance(p, dims) <= 0.0
    }

    /// A pixel guaranteed to lie inside the shape.
    pub fn anchor(&self, dims: Dims) -> Pixel {
        match *self {
            Shape::Ellipse { r0, c0, .. } => Pixel {
                row: (r0.floor().max(0.0) as usize).min(dims.rows - 1),
                col: (c0.rem_euclid(dims.cols as f64).floor() as usize) % dims.cols,
            },
            Shape::Polar { .. } => Pixel { row: 0, col: 0 },
        }
    }

    pub fn pixels(&self, dims: Dims) -> Vec<Pixel> {
        dims.pixels().filter(|&p| self.contains(p, dims)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub shape: Shape,
    pub polarity: Polarity,
}

/// Ground-truth status of one cluster, located by a pixel inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthStatus {
    Matched,
    Missing,
    New,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTruth {
    pub row: usize,
    pub col: usize,
    pub status: TruthStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTruth {
    pub index: usize,
    /// 1 for the low-perturbation group, 2 for the high one.
    pub rank: u8,
    pub good: bool,
    pub label_error: f64,
    pub reference: Vec<AnchorTruth>,
    pub model: Vec<AnchorTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTruth {
    pub date: String,
    pub holes: Vec<Blob>,
    pub models: Vec<ModelTruth>,
}

/// Everything generated for one date.
#[derive(Debug, Clone)]
pub struct Day {
    pub euv: SynopticMap<f64>,
    pub mag: SynopticMap<f64>,
    pub consensus: SegmentationMask,
    pub external: Vec<(String, SegmentationMask)>,
    pub models: Vec<SegmentationMask>,
    pub truth: DayTruth,
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Smooth field in [-1, 1] built from a few low-order modes.
fn large_scale_field(rng: &mut ChaCha8Rng, dims: Dims) -> Field<f64> {
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(1..=3) as f64,
                rng.gen_range(1..=2) as f64,
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let raw = Field::from_fn(dims, |p| {
        let x = TAU * (p.col as f64 + 0.5) / dims.cols as f64;
        let y = PI * (p.row as f64 + 0.5) / dims.rows as f64;
        modes.iter().map(|&(kx, ky, px, py, w)| w * (kx * x + px).cos() * (ky * y + py).cos()).sum::<f64>()
    });
    let peak = raw.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    raw.map(|v| v / peak)
}

fn random_polarity(rng: &mut ChaCha8Rng) -> Polarity {
    if rng.gen_bool(0.5) {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

struct Placer {
    dims: Dims,
    grid: GridSpec<f64>,
    /// Lowest row a mid-latitude hole may reach, and the highest.
    top: f64,
    bottom: f64,
    /// Row range allowed for ellipse centres.
    centre_min: f64,
    centre_max: f64,
}

impl Placer {
    fn far_from(&self, pixels: &[Pixel], others: &[Vec<Pixel>], gap: f64) -> bool {
        others.iter().all(|o| set_distance(pixels, o, &self.grid).map(|d| d >= gap).unwrap_or(false))
    }

    /// Rejection-samples an ellipse at least `gap` from `others`, optionally
    /// on bright background.
    fn ellipse(
        &self,
        rng: &mut ChaCha8Rng,
        axes: (f64, f64),
        others: &[Vec<Pixel>],
        gap: f64,
        bright: Option<&Field<f64>>,
    ) -> Option<Shape> {
        for _ in 0..400 {
            let ar = rng.gen_range(axes.0..=axes.1);
            let ac = rng.gen_range(axes.0..=axes.1) * rng.gen_range(1.0..1.5);
            let lo = (self.top + ar + 1.0).max(self.centre_min);
            let hi = (self.bottom - ar - 1.0).min(self.centre_max);
            if lo >= hi {
                continue;
            }
            let shape =
                Shape::Ellipse { r0: rng.gen_range(lo..hi), c0: rng.gen_range(0.0..self.dims.cols as f64), ar, ac };
            let anchor = shape.anchor(self.dims);
            if let Some(v) = bright {
                if v[anchor] < 0.2 {
                    continue;
                }
            }
            let px = shape.pixels(self.dims);
            if !px.is_empty() && self.far_from(&px, others, gap) {
                return Some(shape);
            }
        }
        None
    }
}

/// Paints blobs into a mask; later blobs win on overlap.
fn paint(blobs: &[Blob], dims: Dims, nobs_rows: usize) -> SegmentationMask {
    let mut labels = Field::filled(dims, Label::Background);
    for b in blobs {
        for p in b.shape.pixels(dims) {
            labels[p] = b.polarity.label();
        }
    }
    for r in dims.rows - nobs_rows..dims.rows {
        for c in 0..dims.cols {
            labels[Pixel { row: r, col: c }] = Label::NoObservation;
        }
    }
    SegmentationMask::new(labels)
}

fn scaled(shape: Shape, factor: f64, shift: (f64, f64)) -> Shape {
    match shape {
        Shape::Ellipse { r0, c0, ar, ac } => Shape::Ellipse {
            r0: r0 + shift.0,
            c0: c0 + shift.1,
            ar: (ar * factor).max(1.5),
            ac: (ac * factor).max(1.5),
        },
        Shape::Polar { base, amp, phase } => {
            Shape::Polar { base: (base * factor + shift.0).max(2.0), amp, phase: phase + shift.1 * TAU / 360.0 }
        }
    }
}

/// Generates one date. `index` selects an independent random stream.
pub fn generate_day(spec: &SynthSpec, seed: u64, index: usize, date: &str) -> Result<Day> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let dims = spec.dims();
    let grid = GridSpec::from_dims(dims)?;
    let normal = |sd: f64| Normal::new(0.0, sd.max(0.0)).expect("finite sd");

    let bright = large_scale_field(&mut rng, dims);

    // Holes of the consensus.
    let mut holes: Vec<Blob> = Vec::new();
    let mut top = 2.0;
    if rng.gen_bool(spec.polar_prob) {
        let lat0: f64 = rng.gen_range(60.0..68.0);
        let base = (90.0 - lat0) / 180.0 * dims.rows as f64;
        let amp = rng.gen_range(0.5..1.5);
        let shape = Shape::Polar { base, amp, phase: rng.gen_range(0.0..TAU) };
        top = base + amp + spec.separation / grid.dlat();
        holes.push(Blob { shape, polarity: random_polarity(&mut rng) });
    }
    let placer = Placer {
        dims,
        grid,
        top,
        bottom: (dims.rows - spec.nobs_rows) as f64 - 2.0,
        centre_min: (90.0 - MAX_CENTRE_LAT) / 180.0 * dims.rows as f64,
        centre_max: (90.0 + MAX_CENTRE_LAT) / 180.0 * dims.rows as f64,
    };
    let n_holes = rng.gen_range(spec.holes_min..=spec.holes_max);
    let mut taken: Vec<Vec<Pixel>> = holes.iter().map(|b| b.shape.pixels(dims)).collect();
    for _ in 0..n_holes {
        let Some(shape) =
            placer.ellipse(&mut rng, (spec.axis_min, spec.axis_max), &taken, spec.separation, Some(&bright))
        else {
            break;
        };
        taken.push(shape.pixels(dims));
        holes.push(Blob { shape, polarity: random_polarity(&mut rng) });
    }

    // Maps.
    let (fx, fy) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
    let noise = normal(spec.noise);
    let flux_noise = normal(0.5);
    let observed = Field::from_fn(dims, |p| p.row < dims.rows - spec.nobs_rows);
    let mut euv_v = Field::filled(dims, 0.0);
    let mut mag_v = Field::filled(dims, 0.0);
    for p in dims.pixels() {
        let mut dark = 0.0;
        let mut unipolar = 0.0;
        let mut hole_flux = 0.0;
        for b in &holes {
            let d = b.shape.signed_distance(p, dims);
            let halo = if d <= 0.0 { 1.0 } else { (-d / spec.halo_scale).exp() };
            dark += spec.edge_depth * 0.5 * (1.0 - (d / spec.edge_width).tanh()) + spec.halo_depth * halo;
            let u = 0.5 * (1.0 - ((d - spec.unipolar_margin) / 1.5).tanh());
            unipolar += u;
            hole_flux += u * spec.hole_flux * if b.polarity == Polarity::Positive { 1.0 } else { -1.0 };
        }
        let dark = dark.min(spec.edge_depth + spec.halo_depth);
        let euv = spec.background + spec.background_var * bright[p] - dark + noise.sample(&mut rng);
        let x = TAU * (p.col as f64 + 0.5) / spec.flux_wavelength + fx;
        let y = TAU * (p.row as f64 + 0.5) / spec.flux_wavelength + fy;
        let background_flux = spec.background_flux * x.sin() * y.sin();
        let w = unipolar.min(1.0);
        let flux = (1.0 - w) * background_flux + hole_flux + flux_noise.sample(&mut rng);
        euv_v[p] = round3(euv);
        mag_v[p] = round3(flux);
    }
    let euv = SynopticMap::new(grid, MapKind::Euv, euv_v, observed.clone())?;
    let mag = SynopticMap::new(grid, MapKind::Magnetic, mag_v, observed)?;
    let consensus = paint(&holes, dims, spec.nobs_rows);

    // External initializers: one under-covering, one over-covering, each
    // missing some holes and carrying a few false blobs.
    let mut external = Vec::new();
    for (name, factor, jitter) in [("ext_a", 0.75, 0.0), ("ext_b", 1.2, 1.0)] {
        let mut blobs: Vec<Blob> = Vec::new();
        for b in &holes {
            if rng.gen_bool(0.1) {
                continue;
            }
            let shift = (rng.gen_range(-jitter..=jitter), rng.gen_range(-jitter..=jitter));
            blobs.push(Blob { shape: scaled(b.shape, factor, shift), polarity: b.polarity });
        }
        let n_fakes = rng.gen_range(0..=spec.ext_fakes_max);
        for _ in 0..n_fakes {
            if let Some(shape) = placer.ellipse(&mut rng, (2.0, 3.0), &taken, spec.separation, None) {
                let pol = Polarity::of(mag.values()[shape.anchor(dims)]).unwrap_or(Polarity::Positive);
                blobs.push(Blob { shape, polarity: pol });
            }
        }
        external.push((name.to_string(), paint(&blobs, dims, spec.nobs_rows)));
    }

    // Physical models.
    // Errors are scored where matching looks: outside the polar bands.
    let scored = |p: Pixel| grid.lat_of_row(p.row).abs() <= POLAR_BAND_LAT;
    let truth_area: f64 =
        grid.area_of(&consensus.hole_indicator().set_pixels().into_iter().filter(|&p| scored(p)).collect::<Vec<_>>());
    let mut models = Vec::new();
    let mut model_truth = Vec::new();
    for k in 0..spec.n_models {
        let rank1 = rng.gen_bool(spec.good_fraction);
        let (jitter, scale_sd, remove, add) = if rank1 {
            (spec.jitter_good, spec.scale_sd_good, spec.remove_good, spec.add_good)
        } else {
            (spec.jitter_bad, spec.scale_sd_bad, spec.remove_bad, spec.add_bad)
        };
        let scale = normal(scale_sd);
        let mut blobs = Vec::new();
        let mut ref_anchors = Vec::new();
        let mut model_anchors = Vec::new();
        for b in &holes {
            let anchor = b.shape.anchor(dims);
            if rng.gen_bool(remove) {
                ref_anchors.push(AnchorTruth { row: anchor.row, col: anchor.col, status: TruthStatus::Missing });
                continue;
            }
            let angle = rng.gen_range(0.0..TAU);
            let mag_shift = rng.gen_range(0.0..=jitter);
            let factor = scale.sample(&mut rng).clamp(-1.2, 1.2).exp();
            let shape = match b.shape {
                Shape::Polar { .. } => scaled(b.shape, factor.sqrt(), (0.0, mag_shift * angle.cos())),
                Shape::Ellipse { .. } => scaled(b.shape, factor, (mag_shift * angle.sin(), mag_shift * angle.cos())),
            };
            ref_anchors.push(AnchorTruth { row: anchor.row, col: anchor.col, status: TruthStatus::Matched });
            let a = shape.anchor(dims);
            model_anchors.push(AnchorTruth { row: a.row, col: a.col, status: TruthStatus::Matched });
            blobs.push(Blob { shape, polarity: b.polarity });
        }
        let mut occupied: Vec<Vec<Pixel>> = taken.clone();
        occupied.extend(blobs.iter().map(|b| b.shape.pixels(dims)));
        for _ in 0..holes.len() {
            if !rng.gen_bool(add) {
                continue;
            }
            let gap = 1.2 * spec.separation.max(0.35);
            if let Some(shape) = placer.ellipse(&mut rng, (spec.axis_min, spec.axis_max), &occupied, gap, None) {
                occupied.push(shape.pixels(dims));
                let a = shape.anchor(dims);
                model_anchors.push(AnchorTruth { row: a.row, col: a.col, status: TruthStatus::New });
                blobs.push(Blob { shape, polarity: random_polarity(&mut rng) });
            }
        }
        let mask = paint(&blobs, dims, 0);
        let differing: Vec<Pixel> = dims
            .pixels()
            .filter(|&p| scored(p))
            .filter(|&p| {
                let t = consensus.labels()[p];
                t != Label::NoObservation && t.is_hole() != mask.labels()[p].is_hole()
                    || t.is_hole() && mask.labels()[p].is_hole() && t != mask.labels()[p]
            })
            .collect();
        let label_error = grid.area_of(&differing) / truth_area.max(grid.pixel_area(dims.rows / 2));
        model_truth.push(ModelTruth {
            index: k,
            rank: if rank1 { 1 } else { 2 },
            good: label_error <= spec.label_threshold,
            label_error,
            reference: ref_anchors,
            model: model_anchors,
        });
        models.push(mask);
    }

    Ok(Day {
        euv,
        mag,
        consensus,
        external,
        models,
        truth: DayTruth { date: date.to_string(), holes, models: model_truth },
    })
}
