//! Coronal hole segmentation, cluster matching and physical-map
//! classification on equirectangular synoptic grids.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for everyday use.

pub mod classify;
pub mod error;
pub mod field;
pub mod forest;
pub mod geometry;
pub mod initseg;
pub mod levelset;
pub mod maps;
pub mod matchcluster;
pub mod scalar;

pub use error::{Error, Result};
pub use field::{BoolField, Dims, Field, Pixel};
pub use geometry::{GridSpec, SpherePoint};
pub use maps::{CoronalHole, Label, MapKind, Polarity, SegmentationMask, SynopticMap};
pub use scalar::Scalar;

pub type Grid = GridSpec<f64>;
pub type Point = SpherePoint<f64>;
pub type Map = SynopticMap<f64>;
pub type Hole = CoronalHole<f64>;

pub type GridF32 = GridSpec<f32>;
pub type MapF32 = SynopticMap<f32>;
pub type Forest = forest::TrainedForest<f64>;
