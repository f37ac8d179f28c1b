//! Distance-regularised level-set segmentation with a magnetic neutral-line
//! barrier in the edge function, and compass-search tuning of (alpha, sigma).

mod stencil;
mod tune;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::field::{BoolField, Field};
use crate::initseg::check_pair;
use crate::maps::{connected_components, Label, Polarity, SegmentationMask, SynopticMap};
use crate::scalar::Scalar;

pub use stencil::{gaussian_smooth, gaussian_taps, gradient, laplacian, mirror_row, Stencil};
pub use tune::{pattern_search, tune, Bounds, PatternSearchResult, TrainingImage, TuneOptions, Tuned};

/// Smoothing (pixels) applied to the flux before the neutral-line scan.
pub const NEUTRAL_LINE_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelSetParams {
    pub mu: f64,
    pub lambda: f64,
    /// Area weight: positive shrinks the zero level set, negative expands it.
    pub alpha: f64,
    /// Half-width of the smoothed Dirac delta, in level-set units.
    pub epsilon: f64,
    /// Gaussian std (pixels) for the edge function.
    pub sigma: f64,
    pub timestep: f64,
    pub n_iters: usize,
    /// Side of the square Gaussian window.
    pub kernel_size: usize,
    /// Magnitude of the initial binary step.
    pub init_step: f64,
}

impl Default for LevelSetParams {
    fn default() -> Self {
        Self {
            mu: 0.2,
            lambda: 5.0,
            alpha: 0.0,
            epsilon: 1.5,
            sigma: 0.5,
            timestep: 1.0,
            n_iters: 300,
            kernel_size: 15,
            init_step: 2.0,
        }
    }
}

pub const ALPHA_RANGE: (f64, f64) = (-3.0, 3.0);
pub const SIGMA_RANGE: (f64, f64) = (0.2, 1.0);

impl LevelSetParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.lambda, self.alpha, self.epsilon, self.sigma, self.timestep, self.init_step]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return contract("level-set parameters must be finite");
        }
        if self.timestep <= 0.0 || self.mu < 0.0 || self.timestep * self.mu >= 0.25 {
            return contract(format!(
                "need timestep > 0, mu >= 0 and timestep*mu < 0.25 (got {} * {})",
                self.timestep, self.mu
            ));
        }
        if self.epsilon <= 0.0 || self.init_step <= 0.0 {
            return contract("epsilon and init_step must be positive");
        }
        if !(ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&self.alpha) {
            return contract(format!("alpha {} outside [-3, 3]", self.alpha));
        }
        if !(SIGMA_RANGE.0..=SIGMA_RANGE.1).contains(&self.sigma) {
            return contract(format!("sigma {} outside [0.2, 1]", self.sigma));
        }
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return contract("kernel_size must be odd");
        }
        Ok(())
    }
}

/// Level-set function over the grid; negative inside holes.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField<T: Scalar> {
    pub phi: Field<T>,
}

impl<T: Scalar> LevelSetField<T> {
    /// Binary step: `-c` on `inside`, `+c` elsewhere.
    pub fn from_indicator(inside: &BoolField, c: T) -> Self {
        Self { phi: inside.map(|&b| if b { -c } else { c }) }
    }

    pub fn inside(&self) -> BoolField {
        self.phi.map(|&v| v < T::zero())
    }
}

/// `1 / (1 + |grad(G_sigma * I)|^2)` with unobserved pixels filled by the
/// observed mean before smoothing.
pub fn edge_function<T: Scalar>(euv: &SynopticMap<T>, sigma: T, kernel_size: usize) -> Field<T> {
    let smooth = gaussian_smooth(&euv.filled_values(), sigma, kernel_size);
    let (gx, gy) = gradient(&smooth);
    gx.zip_map(&gy, |&a, &b| T::one() / (T::one() + a * a + b * b)).expect("same dims")
}

/// Marks both pixels of every 4-neighbour pair whose smoothed flux changes
/// sign. Unobserved pixels count as zero flux and are never marked.
pub fn neutral_line_mask<T: Scalar>(mag: &SynopticMap<T>) -> BoolField {
    neutral_line_mask_with(mag, NEUTRAL_LINE_SIGMA, 15)
}

/// [`neutral_line_mask`] with explicit smoothing; `sigma <= 0` scans the raw flux.
pub fn neutral_line_mask_with<T: Scalar>(mag: &SynopticMap<T>, sigma: f64, kernel_size: usize) -> BoolField {
    let raw = mag
        .values()
        .zip_map(mag.observed(), |&v, &o| if o { v } else { T::zero() })
        .expect("dims checked at construction");
    let flux = if sigma > 0.0 { gaussian_smooth(&raw, T::lit(sigma), kernel_size) } else { raw };
    let dims = flux.dims();
    let mut p = Field::filled(dims, false);
    for a in dims.pixels() {
        // East and south neighbours cover every 4-neighbour pair once.
        for (dr, dc) in [(0, 1), (1, 0)] {
            if let Some(b) = dims.offset(a, dr, dc) {
                if flux[a] * flux[b] < T::zero() {
                    p[a] = true;
                    p[b] = true;
                }
            }
        }
    }
    p.zip_map(mag.observed(), |&v, &o| v && o).expect("same dims")
}

/// `(1 - p) g`.
pub fn barrier_edge<T: Scalar>(g: &Field<T>, p: &BoolField) -> Result<Field<T>> {
    g.zip_map(p, |&g, &p| if p { T::zero() } else { g })
}

/// Smoothed Dirac delta of half-width `eps`.
pub fn dirac<T: Scalar>(x: T, eps: T) -> T {
    if x.abs() > eps {
        T::zero()
    } else {
        (T::one() + (T::PI() * x / eps).cos()) / (T::lit(2.0) * eps)
    }
}

/// `d_p(s) = p'(s) / s` for the double-well potential.
pub fn double_well_dp<T: Scalar>(s: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let ps = if s <= T::one() { (two_pi * s).sin() / two_pi } else { s - T::one() };
    if s == T::zero() {
        // Limit of sin(2 pi s) / (2 pi s).
        T::one()
    } else {
        ps / s
    }
}

/// Runs `params.n_iters` explicit Euler steps of the level-set equation with
/// edge function `pg`. Fails with [`Error::Numerical`] on the first step that
/// produces a non-finite value.
pub fn evolve<T: Scalar>(phi0: &LevelSetField<T>, pg: &Field<T>, params: &LevelSetParams) -> Result<LevelSetField<T>> {
    params.validate()?;
    let dims = phi0.phi.dims();
    if pg.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims.to_string(), actual: pg.dims().to_string() });
    }
    let st = Stencil::new(dims);
    let n = dims.len();
    let z = || vec![T::zero(); n];
    let g = pg.as_slice();
    let (mut vx, mut vy) = (z(), z());
    st.gradient(g, &mut vx, &mut vy);

    let mu = T::lit(params.mu);
    let lambda = T::lit(params.lambda);
    let alpha = T::lit(params.alpha);
    let ts = T::lit(params.timestep);
    let eps = T::lit(params.epsilon);
    let tiny = T::lit(1e-10);

    let mut phi = phi0.phi.as_slice().to_vec();
    let (mut px, mut py) = (z(), z());
    let (mut nx, mut ny) = (z(), z());
    let (mut rx, mut ry) = (z(), z());
    let (mut curv, mut dist, mut lap) = (z(), z(), z());
    for iter in 0..params.n_iters {
        st.gradient(&phi, &mut px, &mut py);
        for i in 0..n {
            let s = (px[i] * px[i] + py[i] * py[i]).sqrt();
            nx[i] = px[i] / (s + tiny);
            ny[i] = py[i] / (s + tiny);
            let k = double_well_dp(s) - T::one();
            rx[i] = k * px[i];
            ry[i] = k * py[i];
        }
        st.divergence(&nx, &ny, &mut curv);
        st.divergence(&rx, &ry, &mut dist);
        st.laplacian(&phi, &mut lap);
        let mut bad = false;
        for i in 0..n {
            let d = dirac(phi[i], eps);
            let f_d = dist[i] + lap[i];
            let f_e = d * (vx[i] * nx[i] + vy[i] * ny[i]) + d * g[i] * curv[i];
            let f_a = d * g[i];
            phi[i] += ts * (mu * f_d + lambda * f_e + alpha * f_a);
            bad |= !phi[i].is_finite();
        }
        if bad {
            return Err(Error::Numerical { iteration: iter, msg: "level-set function became non-finite".into() });
        }
    }
    Ok(LevelSetField { phi: Field::from_vec(dims, phi)? })
}

/// Everything `segment` computes on the way to its mask.
#[derive(Debug, Clone)]
pub struct SegmentOutput<T: Scalar> {
    pub mask: SegmentationMask,
    pub phi: LevelSetField<T>,
    pub pg: Field<T>,
    pub neutral_line: BoolField,
}

/// Level-set refinement of `init`. Hole pixels are `phi < 0` on observed
/// pixels; each 8-connected component takes the sign of its mean flux and is
/// dropped when that mean is exactly zero.
pub fn segment<T: Scalar>(
    euv: &SynopticMap<T>,
    mag: &SynopticMap<T>,
    init: &SegmentationMask,
    params: &LevelSetParams,
) -> Result<SegmentationMask> {
    segment_detailed(euv, mag, init, params).map(|o| o.mask)
}

pub fn segment_detailed<T: Scalar>(
    euv: &SynopticMap<T>,
    mag: &SynopticMap<T>,
    init: &SegmentationMask,
    params: &LevelSetParams,
) -> Result<SegmentOutput<T>> {
    params.validate()?;
    check_pair(euv, mag)?;
    if init.dims() != euv.dims() {
        return Err(Error::DimensionMismatch { expected: euv.dims().to_string(), actual: init.dims().to_string() });
    }
    let g = edge_function(euv, T::lit(params.sigma), params.kernel_size);
    let p = neutral_line_mask(mag);
    let pg = barrier_edge(&g, &p)?;
    let phi0 = LevelSetField::from_indicator(&init.hole_indicator(), T::lit(params.init_step));
    let phi = evolve(&phi0, &pg, params)?;
    let inside = phi.inside().zip_map(euv.observed(), |&a, &o| a && o)?;
    let mask = label_by_flux(&inside, mag);
    Ok(SegmentOutput { mask, phi, pg, neutral_line: p })
}

/// Labels each 8-connected component of `inside` by the sign of its mean
/// flux; zero-mean components are left as background.
pub fn label_by_flux<T: Scalar>(inside: &BoolField, mag: &SynopticMap<T>) -> SegmentationMask {
    let mut out = SegmentationMask::blank_like(mag.observed());
    for comp in connected_components(inside) {
        let sum: T = comp.iter().map(|&p| mag.values()[p]).sum();
        if let Some(pol) = Polarity::of(sum) {
            for &p in &comp {
                out.labels_mut()[p] = pol.label();
            }
        }
    }
    out
}

/// Pixel-level agreement with a reference mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensSpec {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    /// `sqrt((1 - spec)^2 + (1 - sens)^2)`.
    pub distance: f64,
}

/// Polarity-agnostic confusion counts over pixels observed in both masks.
pub fn sens_spec(result: &SegmentationMask, truth: &SegmentationMask) -> Result<SensSpec> {
    let (tp, fp, tn, fn_) = confusion(result, truth)?;
    if tp + fn_ == 0 {
        return Err(Error::SensitivityUndefined);
    }
    if tn + fp == 0 {
        return Err(Error::SpecificityUndefined);
    }
    Ok(from_counts(tp, fp, tn, fn_))
}

pub(crate) fn confusion(result: &SegmentationMask, truth: &SegmentationMask) -> Result<(usize, usize, usize, usize)> {
    if result.dims() != truth.dims() {
        return Err(Error::DimensionMismatch { expected: truth.dims().to_string(), actual: result.dims().to_string() });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&r, &t) in result.labels().as_slice().iter().zip(truth.labels().as_slice()) {
        if r == Label::NoObservation || t == Label::NoObservation {
            continue;
        }
        match (r.is_hole(), t.is_hole()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok((tp, fp, tn, fn_))
}

pub(crate) fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> SensSpec {
    let sens = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
    let spec = if tn + fp == 0 { 1.0 } else { tn as f64 / (tn + fp) as f64 };
    SensSpec {
        tp,
        fp,
        tn,
        fn_,
        sensitivity: sens,
        specificity: spec,
        distance: ((1.0 - spec).powi(2) + (1.0 - sens).powi(2)).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Dims, Pixel};
    use crate::geometry::GridSpec;
    use crate::maps::MapKind;

    fn scalar(dims: Dims, kind: MapKind, f: impl FnMut(Pixel) -> f64) -> SynopticMap<f64> {
        SynopticMap::new(GridSpec::from_dims(dims).unwrap(), kind, Field::from_fn(dims, f), Field::filled(dims, true))
            .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(LevelSetParams::default().validate().is_ok());
        let bad = [
            LevelSetParams { mu: 0.3, ..Default::default() },
            LevelSetParams { alpha: 3.5, ..Default::default() },
            LevelSetParams { sigma: 0.1, ..Default::default() },
            LevelSetParams { epsilon: 0.0, ..Default::default() },
            LevelSetParams { kernel_size: 14, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn constant_image_has_unit_edge_function() {
        let euv = scalar(Dims::new(12, 24), MapKind::Euv, |_| 7.0);
        let g = edge_function(&euv, 0.5, 15);
        assert!(g.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn step_edge_minimises_g_on_the_edge() {
        let euv = scalar(Dims::new(12, 24), MapKind::Euv, |p| if p.col < 12 { 10.0 } else { 90.0 });
        let g = edge_function(&euv, 0.5, 15);
        let row: Vec<f64> = (0..24).map(|c| *g.at(5, c)).collect();
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(row[11] == min || row[12] == min);
        assert!(row[5] > 0.99);
    }

    #[test]
    fn neutral_line_cases() {
        let dims = Dims::new(10, 16);
        let pos = scalar(dims, MapKind::Magnetic, |_| 3.0);
        assert_eq!(neutral_line_mask(&pos).count(), 0);
        let halves = scalar(dims, MapKind::Magnetic, |p| if p.col < 8 { 1.0 } else { -1.0 });
        let p = neutral_line_mask(&halves);
        // Longitude is periodic, so the seam between the last and first
        // columns is a second sign change.
        for px in dims.pixels() {
            assert_eq!(p[px], [0, 7, 8, 15].contains(&px.col), "{px:?}");
        }
    }

    #[test]
    fn barrier_edge_extremes() {
        let g = Field::from_fn(Dims::new(3, 4), |p| 0.1 * (p.col + 1) as f64);
        let none = Field::filled(g.dims(), false);
        let all = Field::filled(g.dims(), true);
        assert_eq!(barrier_edge(&g, &none).unwrap(), g);
        assert!(barrier_edge(&g, &all).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirac_and_potential_values() {
        assert_eq!(dirac(2.0, 1.5), 0.0);
        assert!((dirac(0.0f64, 1.5) - 1.0 / 1.5).abs() < 1e-15);
        assert_eq!(double_well_dp(0.0f64), 1.0);
        assert!((double_well_dp(2.0f64) - 0.5).abs() < 1e-15);
        assert!((double_well_dp(0.25f64) - 1.0 / (2.0 * std::f64::consts::PI * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn sens_spec_fixture_counts() {
        let dims = Dims::new(10, 100);
        // Row-major index i: truth holes at i < 100, result holes at
        // i < 90 (TP=90, FN=10) and 100 <= i < 120 (FP=20); TN = 880.
        let truth = SegmentationMask::new(Field::from_fn(dims, |p| {
            if dims.index(p) < 100 {
                Label::PositiveHole
            } else {
                Label::Background
            }
        }));
        let result = SegmentationMask::new(Field::from_fn(dims, |p| {
            let i = dims.index(p);
            if i < 90 || (100..120).contains(&i) {
                Label::NegativeHole
            } else {
                Label::Background
            }
        }));
        let s = sens_spec(&result, &truth).unwrap();
        assert_eq!((s.tp, s.fn_, s.fp, s.tn), (90, 10, 20, 880));
        assert!((s.sensitivity - 0.9).abs() < 1e-12);
        assert!((s.specificity - 880.0 / 900.0).abs() < 1e-12);
        let want = ((1.0f64 - 880.0 / 900.0).powi(2) + 0.01).sqrt();
        assert!((s.distance - want).abs() < 1e-12);
        assert!((s.distance - 0.10244).abs() < 1e-5);
    }

    #[test]
    fn sens_spec_extremes() {
        let dims = Dims::new(4, 6);
        let truth = SegmentationMask::new(Field::from_fn(dims, |p| {
            if p.col < 2 {
                Label::PositiveHole
            } else if p.col == 5 {
                Label::NoObservation
            } else {
                Label::Background
            }
        }));
        let s = sens_spec(&truth, &truth).unwrap();
        assert_eq!((s.sensitivity, s.specificity, s.distance), (1.0, 1.0, 0.0));
        let comp = SegmentationMask::new(truth.labels().map(|&l| match l {
            Label::Background => Label::PositiveHole,
            Label::NoObservation => Label::NoObservation,
            _ => Label::Background,
        }));
        let s = sens_spec(&comp, &truth).unwrap();
        assert_eq!((s.sensitivity, s.specificity), (0.0, 0.0));
        assert!((s.distance - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(sens_spec(&truth, &SegmentationMask::empty(dims)), Err(Error::SensitivityUndefined)));
    }

    #[test]
    fn empty_init_gives_empty_output() {
        let dims = Dims::new(20, 40);
        let euv = scalar(dims, MapKind::Euv, |p| (p.col * 3) as f64);
        let mag = scalar(dims, MapKind::Magnetic, |_| 1.0);
        let out = segment(&euv, &mag, &SegmentationMask::empty(dims), &LevelSetParams::default()).unwrap();
        assert_eq!(out.hole_count(), 0);
    }

    #[test]
    fn blowup_reports_iteration() {
        let dims = Dims::new(8, 8);
        let phi0 = LevelSetField { phi: Field::from_fn(dims, |p| if p.col == 3 { f64::MAX } else { 0.0 }) };
        let pg = Field::filled(dims, 1.0);
        let err = evolve(&phi0, &pg, &LevelSetParams::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical { iteration: 0, .. }), "{err:?}");
    }
}
