//! Synoptic maps, segmentation masks, and the pre-processing chain applied
//! before cluster matching.

pub(crate) mod holes;
pub mod io;
mod morph;
mod resize;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::field::{BoolField, Dims, Field};
use crate::geometry::GridSpec;
use crate::scalar::Scalar;

pub use holes::{connected_components, extract_holes, CoronalHole};
pub use io::{load_map, save_mask, save_scalar_map, LoadedMap, MapKind};
pub use morph::{binary_close, dilate, erode};
pub use resize::Resize;

/// Magnetic polarity of a hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Positive, Polarity::Negative];

    pub fn label(self) -> Label {
        match self {
            Polarity::Positive => Label::PositiveHole,
            Polarity::Negative => Label::NegativeHole,
        }
    }

    /// Polarity of a signed flux value; zero has none.
    pub fn of<T: Scalar>(flux: T) -> Option<Polarity> {
        if flux > T::zero() {
            Some(Polarity::Positive)
        } else if flux < T::zero() {
            Some(Polarity::Negative)
        } else {
            None
        }
    }
}

impl std::fmt::Display for Polarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "+",
            Polarity::Negative => "-",
        })
    }
}

/// Per-pixel segmentation label. The discriminants are the on-disk codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Label {
    #[default]
    Background = 0,
    PositiveHole = 1,
    NegativeHole = 2,
    NoObservation = 3,
}

impl Label {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Background),
            1 => Some(Label::PositiveHole),
            2 => Some(Label::NegativeHole),
            3 => Some(Label::NoObservation),
            _ => None,
        }
    }

    pub fn is_hole(self) -> bool {
        matches!(self, Label::PositiveHole | Label::NegativeHole)
    }

    pub fn polarity(self) -> Option<Polarity> {
        match self {
            Label::PositiveHole => Some(Polarity::Positive),
            Label::NegativeHole => Some(Polarity::Negative),
            _ => None,
        }
    }
}

/// An EUV intensity or signed magnetic flux map with its observation mask.
///
/// Unobserved pixels hold zero in `values`; they are written back out as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SynopticMap<T: Scalar> {
    pub grid: GridSpec<T>,
    pub kind: MapKind,
    values: Field<T>,
    observed: BoolField,
}

impl<T: Scalar> SynopticMap<T> {
    pub fn new(grid: GridSpec<T>, kind: MapKind, values: Field<T>, observed: BoolField) -> Result<Self> {
        if values.dims() != grid.dims() || observed.dims() != grid.dims() {
            return Err(crate::Error::DimensionMismatch {
                expected: grid.dims().to_string(),
                actual: format!("values {} / observed {}", values.dims(), observed.dims()),
            });
        }
        if !matches!(kind, MapKind::Euv | MapKind::Magnetic) {
            return contract(format!("scalar map cannot have kind {kind}"));
        }
        let mut values = values;
        for (v, &obs) in values.as_mut_slice().iter_mut().zip(observed.as_slice()) {
            if !obs {
                *v = T::zero();
            } else if !v.is_finite() {
                return contract("observed pixel holds a non-finite value");
            } else if kind == MapKind::Euv && *v < T::zero() {
                return contract("EUV intensity must be non-negative where observed");
            }
        }
        Ok(Self { grid, kind, values, observed })
    }

    /// Builds a map where non-finite values mark unobserved pixels.
    pub fn from_values(grid: GridSpec<T>, kind: MapKind, raw: Field<T>) -> Result<Self> {
        let observed = raw.map(|v| v.is_finite());
        Self::new(grid, kind, raw, observed)
    }

    pub fn dims(&self) -> Dims {
        self.grid.dims()
    }

    pub fn values(&self) -> &Field<T> {
        &self.values
    }

    pub fn observed(&self) -> &BoolField {
        &self.observed
    }

    pub fn observed_values(&self) -> impl Iterator<Item = T> + '_ {
        self.values.as_slice().iter().zip(self.observed.as_slice()).filter(|(_, &o)| o).map(|(&v, _)| v)
    }

    /// Values with unobserved pixels replaced by the observed mean.
    pub fn filled_values(&self) -> Field<T> {
        let (sum, n) = self.observed_values().fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
        let mean = if n == 0 { T::zero() } else { sum / T::count(n) };
        self.values.zip_map(&self.observed, |&v, &o| if o { v } else { mean }).expect("dims checked at construction")
    }
}

/// Label field over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMask {
    labels: Field<Label>,
}

impl SegmentationMask {
    pub fn new(labels: Field<Label>) -> Self {
        Self { labels }
    }

    pub fn empty(dims: Dims) -> Self {
        Self::new(Field::filled(dims, Label::Background))
    }

    /// Background everywhere except `NoObservation` where `observed` is false.
    pub fn blank_like(observed: &BoolField) -> Self {
        Self::new(observed.map(|&o| if o { Label::Background } else { Label::NoObservation }))
    }

    pub fn dims(&self) -> Dims {
        self.labels.dims()
    }

    pub fn labels(&self) -> &Field<Label> {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut Field<Label> {
        &mut self.labels
    }

    pub fn hole_indicator(&self) -> BoolField {
        self.labels.map(|l| l.is_hole())
    }

    pub fn polarity_indicator(&self, polarity: Polarity) -> BoolField {
        let want = polarity.label();
        self.labels.map(|&l| l == want)
    }

    pub fn observed(&self) -> BoolField {
        self.labels.map(|&l| l != Label::NoObservation)
    }

    pub fn hole_count(&self) -> usize {
        self.labels.as_slice().iter().filter(|l| l.is_hole()).count()
    }

    /// Copy of this mask with `NoObservation` wherever `observed` is false.
    pub fn with_observation(&self, observed: &BoolField) -> Result<Self> {
        Ok(Self::new(self.labels.zip_map(observed, |&l, &o| if o { l } else { Label::NoObservation })?))
    }
}

/// Latitude (degrees) beyond which the polar bands are cleared before matching.
pub const POLAR_BAND_LAT: f64 = 60.0;

/// Clears the polar bands (co-latitude 0-30 and 150-180 degrees) to
/// background and marks unobserved pixels as `NoObservation`.
pub fn remove_regions(mask: &SegmentationMask, observed: Option<&BoolField>) -> Result<SegmentationMask> {
    let dims = mask.dims();
    let grid = GridSpec::<f64>::from_dims(dims)?;
    if let Some(obs) = observed {
        if obs.dims() != dims {
            return contract(format!("observation mask {} vs mask {}", obs.dims(), dims));
        }
    }
    let mut out = mask.clone();
    for r in 0..dims.rows {
        let polar = grid.lat_of_row(r).abs() > POLAR_BAND_LAT;
        for c in 0..dims.cols {
            let p = crate::field::Pixel::new(r, c);
            let unobserved = observed.map(|o| !o[p]).unwrap_or(false);
            let l = &mut out.labels[p];
            if unobserved {
                *l = Label::NoObservation;
            } else if polar && l.is_hole() {
                *l = Label::Background;
            }
        }
    }
    Ok(out)
}

/// Pre-processing ahead of cluster matching: close small gaps at native
/// resolution, resize to the target grid, then drop polar bands and
/// unobserved regions.
pub fn preprocess(
    mask: &SegmentationMask,
    target: Dims,
    close_radius: usize,
    observed: Option<&BoolField>,
) -> Result<SegmentationMask> {
    let closed = close_mask(mask, close_radius);
    let resized = closed.resize_bilinear(target)?;
    remove_regions(&resized, observed)
}

/// Closes each polarity layer separately. A pixel claimed by both closed
/// layers keeps its original label.
pub fn close_mask(mask: &SegmentationMask, radius: usize) -> SegmentationMask {
    if radius == 0 {
        return mask.clone();
    }
    let pos = binary_close(&mask.polarity_indicator(Polarity::Positive), radius);
    let neg = binary_close(&mask.polarity_indicator(Polarity::Negative), radius);
    let labels = Field::from_fn(mask.dims(), |p| {
        let orig = mask.labels[p];
        if orig == Label::NoObservation || orig.is_hole() {
            return orig;
        }
        match (pos[p], neg[p]) {
            (true, false) => Label::PositiveHole,
            (false, true) => Label::NegativeHole,
            _ => orig,
        }
    });
    SegmentationMask::new(labels)
}
