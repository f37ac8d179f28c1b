//! Per-model match features and the good/bad map decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{TiePolicy, TrainedForest};
use crate::matchcluster::{ClusterSummary, MatchResult};
use crate::scalar::Scalar;

/// Forest class index of a bad map.
pub const BAD: usize = 0;
/// Forest class index of a good map.
pub const GOOD: usize = 1;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; 6] = ["newN", "newA", "missN", "missA", "overA", "sameA"];

/// How the new/missing areas are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaMode {
    /// New and missing areas as fractions of the image pixel count; matched
    /// areas on the sphere.
    #[default]
    Mixed,
    /// Every area on the sphere.
    Spherical,
}

/// Which features feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    #[default]
    Six,
    /// Without `sameA`.
    Five,
}

impl FeatureSet {
    pub fn len(self) -> usize {
        match self {
            FeatureSet::Six => 6,
            FeatureSet::Five => 5,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn names(self) -> &'static [&'static str] {
        &FEATURE_NAMES[..self.len()]
    }
}

/// Summary of how one model map matches the reference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MapFeatures<T: Scalar> {
    #[serde(rename = "newN")]
    pub new_n: T,
    #[serde(rename = "newA")]
    pub new_a: T,
    #[serde(rename = "missN")]
    pub miss_n: T,
    #[serde(rename = "missA")]
    pub miss_a: T,
    /// Model area of matched pairs outside the overlap.
    #[serde(rename = "overA")]
    pub over_a: T,
    /// Overlap area of matched pairs.
    #[serde(rename = "sameA")]
    pub same_a: T,
}

impl<T: Scalar> MapFeatures<T> {
    pub fn to_vec(&self, set: FeatureSet) -> Vec<T> {
        let all = [self.new_n, self.new_a, self.miss_n, self.miss_a, self.over_a, self.same_a];
        all[..set.len()].to_vec()
    }
}

impl<T: Scalar> std::ops::Add for MapFeatures<T> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            new_n: self.new_n + o.new_n,
            new_a: self.new_a + o.new_a,
            miss_n: self.miss_n + o.miss_n,
            miss_a: self.miss_a + o.miss_a,
            over_a: self.over_a + o.over_a,
            same_a: self.same_a + o.same_a,
        }
    }
}

fn unmatched_area<T: Scalar>(clusters: &[ClusterSummary<T>], mode: AreaMode, grid_pixels: usize) -> T {
    match mode {
        AreaMode::Spherical => clusters.iter().map(|c| c.physical_area).sum(),
        AreaMode::Mixed => {
            T::count(clusters.iter().map(|c| c.image_area).sum::<usize>()) / T::count(grid_pixels.max(1))
        }
    }
}

/// Counts and areas of new, missing and matched clusters.
pub fn extract_features<T: Scalar>(m: &MatchResult<T>, mode: AreaMode) -> MapFeatures<T> {
    MapFeatures {
        new_n: T::count(m.new_clusters.len()),
        new_a: unmatched_area(&m.new_clusters, mode, m.grid_pixels),
        miss_n: T::count(m.missing_clusters.len()),
        miss_a: unmatched_area(&m.missing_clusters, mode, m.grid_pixels),
        over_a: m.matched.iter().map(|p| (p.model_area - p.overlap_area).max(T::zero())).sum(),
        same_a: m.matched.iter().map(|p| p.overlap_area).sum(),
    }
}

/// Verdict on a physical map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapClass {
    Good,
    Bad,
}

impl MapClass {
    pub fn from_label(label: usize) -> Self {
        if label == GOOD {
            MapClass::Good
        } else {
            MapClass::Bad
        }
    }

    pub fn label(self) -> usize {
        match self {
            MapClass::Good => GOOD,
            MapClass::Bad => BAD,
        }
    }
}

/// Forest decision with the vote share of the winning class. Split votes
/// count as bad.
pub fn classify_map<T: Scalar>(
    f: &MapFeatures<T>,
    set: FeatureSet,
    model: &TrainedForest<T>,
) -> Result<(MapClass, f64)> {
    if model.n_features() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} features", set.len()),
            actual: format!("{} features", model.n_features()),
        });
    }
    let p = model.predict_with(&f.to_vec(set), TiePolicy::Negative)?;
    Ok((MapClass::from_label(p.label), p.vote_fraction))
}
