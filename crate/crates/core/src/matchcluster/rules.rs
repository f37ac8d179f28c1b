//! The manual clustering and matching protocol as explicit rule checks.
//!
//! These are not the production matcher. They validate hand-made and
//! synthetic ground truth: a truth clustering should merge exactly the pairs
//! the protocol merges, and a truth correspondence should satisfy a matching
//! rule.

use serde::{Deserialize, Serialize};

use crate::geometry::GridSpec;
use crate::maps::CoronalHole;
use crate::scalar::Scalar;

use super::Cluster;

/// Holes reaching beyond this latitude (degrees) belong to a polar cluster.
pub const POLAR_LATITUDE: f64 = 60.0;

/// Clustering rules, in the order they are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterRule {
    /// Both holes reach into the same polar cap.
    Polar,
    /// Any two holes almost touching.
    Nearby,
    /// Two small holes close to each other.
    SmallSmall,
    /// A small hole close to a much larger one.
    LargeSmall,
}

/// Matching rules for clusters of equal polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchRule {
    PolarToPolar,
    PolarToMidLatitude,
    MidToMidLatitude,
}

/// Thresholds of the protocol; distances in grid-radius units, areas in
/// squared grid-radius units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Protocol<T: Scalar> {
    /// "Extremely close" separation.
    pub nearby: T,
    /// "Relatively close" separation for small holes.
    pub close: T,
    /// Holes below this area are small.
    pub small_area: T,
    /// A hole at least this many times larger than a small one is "much larger".
    pub large_ratio: T,
    /// Minimum overlap fraction for polar-to-polar matches.
    pub polar_overlap: T,
    /// Minimum overlap fraction for a mid-latitude reference cluster on a polar model cluster.
    pub polar_mid_overlap: T,
    /// Overlap fraction that alone justifies a mid-latitude match.
    pub mid_overlap: T,
    /// Centroid separation counted as good localisation for weakly overlapping clusters.
    pub localisation: T,
}

impl<T: Scalar> Default for Protocol<T> {
    fn default() -> Self {
        Self {
            nearby: T::lit(0.02),
            close: T::lit(0.1),
            small_area: T::lit(0.005),
            large_ratio: T::lit(4.0),
            polar_overlap: T::lit(0.7),
            polar_mid_overlap: T::lit(0.15),
            mid_overlap: T::lit(0.3),
            localisation: T::lit(0.1),
        }
    }
}

/// Which polar cap a pixel set reaches into: `1` north, `-1` south, `0` none.
/// A set reaching both caps counts as northern.
pub fn polar_cap<T: Scalar>(pixels: &[crate::field::Pixel], grid: &GridSpec<T>) -> i8 {
    let limit = T::lit(POLAR_LATITUDE);
    let lats = pixels.iter().map(|p| grid.lat_of_row(p.row));
    let mut south = false;
    for lat in lats {
        if lat > limit {
            return 1;
        }
        if lat < -limit {
            south = true;
        }
    }
    if south {
        -1
    } else {
        0
    }
}

impl<T: Scalar> Protocol<T> {
    /// The first clustering rule joining two same-polarity holes, if any.
    pub fn cluster_rule(&self, a: &CoronalHole<T>, b: &CoronalHole<T>, grid: &GridSpec<T>) -> Option<ClusterRule> {
        if a.polarity != b.polarity {
            return None;
        }
        let cap = polar_cap(&a.pixels, grid);
        if cap != 0 && cap == polar_cap(&b.pixels, grid) {
            return Some(ClusterRule::Polar);
        }
        let d = crate::geometry::set_distance(&a.pixels, &b.pixels, grid).ok()?;
        if d < self.nearby {
            return Some(ClusterRule::Nearby);
        }
        if d >= self.close {
            return None;
        }
        let (small, large) = if a.physical_area <= b.physical_area { (a, b) } else { (b, a) };
        if small.physical_area >= self.small_area {
            // Two large holes stay apart unless nearby.
            return None;
        }
        if large.physical_area < self.small_area {
            Some(ClusterRule::SmallSmall)
        } else if large.physical_area >= self.large_ratio * small.physical_area {
            Some(ClusterRule::LargeSmall)
        } else {
            None
        }
    }

    /// Partition of `holes` (as index groups, each ascending, groups ordered by
    /// first index) under the transitive closure of the clustering rules.
    pub fn clustering(&self, holes: &[CoronalHole<T>], grid: &GridSpec<T>) -> Vec<Vec<usize>> {
        let mut uf = super::UnionFind::new(holes.len());
        for i in 0..holes.len() {
            for j in i + 1..holes.len() {
                if self.cluster_rule(&holes[i], &holes[j], grid).is_some() {
                    uf.union(i, j);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); holes.len()];
        for i in 0..holes.len() {
            groups[uf.find(i)].push(i);
        }
        groups.retain(|g| !g.is_empty());
        groups
    }

    /// The matching rule that accepts a reference/model pair, if any.
    ///
    /// Overlap fractions are relative to the smaller of the two clusters.
    pub fn match_rule(&self, reference: &Cluster<T>, model: &Cluster<T>, grid: &GridSpec<T>) -> Option<MatchRule> {
        if reference.polarity != model.polarity {
            return None;
        }
        let overlap = reference.overlap_area(model, grid);
        let frac = overlap / reference.physical_area.min(model.physical_area);
        let ref_polar = polar_cap(&reference.pixels, grid) != 0;
        let model_polar = polar_cap(&model.pixels, grid) != 0;
        match (ref_polar, model_polar) {
            (true, true) => (frac >= self.polar_overlap).then_some(MatchRule::PolarToPolar),
            (false, true) | (true, false) => (frac >= self.polar_mid_overlap).then_some(MatchRule::PolarToMidLatitude),
            (false, false) => {
                let sep = crate::geometry::geodesic_distance(reference.centroid, model.centroid, grid.radius);
                let good = frac > self.mid_overlap || (overlap > T::zero() && sep <= self.localisation);
                good.then_some(MatchRule::MidToMidLatitude)
            }
        }
    }
}
