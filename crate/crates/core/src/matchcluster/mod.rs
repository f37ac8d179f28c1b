//! Clustering of coronal holes, new/missing screening, re-clustering to equal
//! counts and optimal cluster assignment between a reference map and model maps.

mod hungarian;
pub mod rules;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::field::Pixel;
use crate::geometry::{boundary_pixels, centroid, min_pair_distance, GridSpec, SpherePoint};
use crate::maps::{extract_holes, CoronalHole, Polarity, SegmentationMask};
use crate::scalar::Scalar;

pub use hungarian::hungarian;

/// Default clustering threshold in radians of arc.
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.1;

/// √χ²₂(0.99): the 99th percentile of a two-degree-of-freedom chi-square,
/// expressed as a Mahalanobis distance.
pub const CHI2_2_99_DISTANCE: f64 = 3.034_854_258_770_292;

/// Assignment costs are arc lengths in units of one millionth of the grid radius.
pub const MICRO: f64 = 1e6;

/// A set of same-polarity holes treated as one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T: Scalar> {
    /// Ids of the original clusters merged into this one, ascending.
    pub ids: Vec<usize>,
    pub polarity: Polarity,
    pub holes: Vec<CoronalHole<T>>,
    /// Union of member pixels, sorted row-major.
    pub pixels: Vec<Pixel>,
    pub image_area: usize,
    pub physical_area: T,
    pub centroid: SpherePoint<T>,
    boundary: Vec<Pixel>,
}

impl<T: Scalar> Cluster<T> {
    /// Builds a cluster from a non-empty list of same-polarity holes.
    pub fn from_holes(id: usize, holes: Vec<CoronalHole<T>>, grid: &GridSpec<T>) -> Result<Self> {
        Self::build(vec![id], holes, grid)
    }

    fn build(ids: Vec<usize>, mut holes: Vec<CoronalHole<T>>, grid: &GridSpec<T>) -> Result<Self> {
        let Some(first) = holes.first() else {
            return contract("a cluster needs at least one hole");
        };
        let polarity = first.polarity;
        if holes.iter().any(|h| h.polarity != polarity) {
            return contract("cluster members must share polarity");
        }
        holes.sort_by(|a, b| a.pixels.first().cmp(&b.pixels.first()));
        let mut pixels: Vec<Pixel> = holes.iter().flat_map(|h| h.pixels.iter().copied()).collect();
        pixels.sort_unstable();
        let before = pixels.len();
        pixels.dedup();
        if pixels.len() != before || pixels.is_empty() {
            return contract("cluster members must be disjoint and non-empty");
        }
        let boundary = holes.iter().flat_map(|h| boundary_pixels(&h.pixels, grid.dims())).collect();
        Ok(Self {
            ids,
            polarity,
            image_area: pixels.len(),
            physical_area: holes.iter().map(|h| h.physical_area).sum(),
            centroid: centroid(&pixels, grid),
            holes,
            pixels,
            boundary,
        })
    }

    /// Union of two clusters; ids are merged.
    pub fn merge(&self, other: &Self, grid: &GridSpec<T>) -> Result<Self> {
        let mut ids: Vec<usize> = self.ids.iter().chain(&other.ids).copied().collect();
        ids.sort_unstable();
        let holes = self.holes.iter().chain(&other.holes).cloned().collect();
        Self::build(ids, holes, grid)
    }

    /// Minimum great-circle distance to another cluster, zero on overlap.
    pub fn distance(&self, other: &Self, grid: &GridSpec<T>) -> T {
        if overlap_count(&self.pixels, &other.pixels) > 0 {
            return T::zero();
        }
        min_pair_distance(&self.boundary, &other.boundary, grid)
    }

    /// Spherical area of the pixels shared with `other`.
    pub fn overlap_area(&self, other: &Self, grid: &GridSpec<T>) -> T {
        intersect(&self.pixels, &other.pixels).map(|p| grid.pixel_area(p.row)).sum()
    }

    pub fn summary(&self) -> ClusterSummary<T> {
        ClusterSummary {
            id: self.ids[0],
            polarity: self.polarity,
            centroid: self.centroid,
            physical_area: self.physical_area,
            image_area: self.image_area,
            n_holes: self.holes.len(),
        }
    }
}

fn intersect<'a>(a: &'a [Pixel], b: &'a [Pixel]) -> impl Iterator<Item = Pixel> + 'a {
    let mut i = 0;
    let mut j = 0;
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                    return Some(a[i - 1]);
                }
            }
        }
        None
    })
}

fn overlap_count(a: &[Pixel], b: &[Pixel]) -> usize {
    intersect(a, b).count()
}

/// Disjoint-set forest with path halving.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups holes whose set distance is below `threshold`, transitively.
///
/// Output order is canonical: clusters sorted by their first pixel, ids
/// numbered from `first_id`. Shuffling the input therefore changes nothing.
pub fn cluster_by_distance<T: Scalar>(
    holes: &[CoronalHole<T>],
    threshold: T,
    first_id: usize,
    grid: &GridSpec<T>,
) -> Result<Vec<Cluster<T>>> {
    if threshold.is_nan() || threshold < T::zero() {
        return contract("clustering threshold must be non-negative");
    }
    if holes.is_empty() {
        return Ok(Vec::new());
    }
    let polarity = holes[0].polarity;
    if holes.iter().any(|h| h.polarity != polarity) {
        return contract("cluster_by_distance needs holes of one polarity");
    }
    let singles: Vec<Cluster<T>> =
        holes.iter().map(|h| Cluster::from_holes(0, vec![h.clone()], grid)).collect::<Result<_>>()?;
    let mut uf = UnionFind::new(holes.len());
    for i in 0..holes.len() {
        for j in i + 1..holes.len() {
            if singles[i].distance(&singles[j], grid) < threshold {
                uf.union(i, j);
            }
        }
    }
    let mut groups: Vec<Vec<CoronalHole<T>>> = vec![Vec::new(); holes.len()];
    for (i, h) in holes.iter().enumerate() {
        groups[uf.find(i)].push(h.clone());
    }
    let mut clusters: Vec<Cluster<T>> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| Cluster::build(vec![0], g, grid))
        .collect::<Result<_>>()?;
    clusters.sort_by(|a, b| a.pixels[0].cmp(&b.pixels[0]));
    for (k, c) in clusters.iter_mut().enumerate() {
        c.ids = vec![first_id + k];
    }
    Ok(clusters)
}

/// Feature vector of a cross-map pair: `(|ln(area ratio)|, set distance)`.
pub fn pair_features<T: Scalar>(a: &Cluster<T>, b: &Cluster<T>, grid: &GridSpec<T>) -> [T; 2] {
    [(a.physical_area / b.physical_area).ln().abs(), a.distance(b, grid)]
}

/// Gaussian model of the pair features of clusters that belong together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MahalanobisModel<T: Scalar> {
    pub mean: [T; 2],
    pub covariance: [[T; 2]; 2],
    pub threshold: T,
}

impl<T: Scalar> MahalanobisModel<T> {
    pub fn new(mean: [T; 2], covariance: [[T; 2]; 2], threshold: T) -> Result<Self> {
        let m = Self { mean, covariance, threshold };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let [[a, b], [c, d]] = self.covariance;
        let finite = self.mean.iter().chain([a, b, c, d].iter()).all(|v| v.is_finite());
        if !finite || !self.threshold.is_finite() || self.threshold <= T::zero() {
            return Err(Error::Model(
                "mahalanobis mean, covariance and threshold must be finite, threshold > 0".into(),
            ));
        }
        if b != c {
            return Err(Error::Model("mahalanobis covariance is not symmetric".into()));
        }
        if a <= T::zero() || a * d - b * c <= T::zero() {
            return Err(Error::Model("mahalanobis covariance is not positive definite".into()));
        }
        Ok(())
    }

    /// Sample mean and unbiased covariance of feature vectors of known pairs.
    pub fn fit(samples: &[[T; 2]], threshold: T) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Model(format!("mahalanobis fit needs at least 3 pairs, got {}", samples.len())));
        }
        let n = T::count(samples.len());
        let mean = [samples.iter().map(|s| s[0]).sum::<T>() / n, samples.iter().map(|s| s[1]).sum::<T>() / n];
        let mut cov = [[T::zero(); 2]; 2];
        for s in samples {
            let e = [s[0] - mean[0], s[1] - mean[1]];
            for r in 0..2 {
                for c in 0..2 {
                    cov[r][c] += e[r] * e[c];
                }
            }
        }
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v /= n - T::one();
            }
        }
        cov[1][0] = cov[0][1];
        Self::new(mean, cov, threshold)
    }

    /// `√((v − mean)ᵀ Σ⁻¹ (v − mean))`.
    pub fn distance(&self, v: [T; 2]) -> T {
        let [[a, b], [_, d]] = self.covariance;
        let det = a * d - b * b;
        let e0 = v[0] - self.mean[0];
        let e1 = v[1] - self.mean[1];
        let q = (d * e0 * e0 - (b + b) * e0 * e1 + a * e1 * e1) / det;
        q.max(T::zero()).sqrt()
    }

    pub fn accepts(&self, v: [T; 2]) -> bool {
        self.distance(v) <= self.threshold
    }
}

impl<T: Scalar> Default for MahalanobisModel<T> {
    /// Centred on a perfect match; one standard deviation is a factor e^0.5
    /// in area or 0.1 rad of separation.
    fn default() -> Self {
        Self {
            mean: [T::zero(); 2],
            covariance: [[T::lit(0.25), T::zero()], [T::zero(), T::lit(0.01)]],
            threshold: T::lit(CHI2_2_99_DISTANCE),
        }
    }
}

/// Result of new/missing screening, as indices into the input lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Screening {
    pub matchable_ref: Vec<usize>,
    pub matchable_model: Vec<usize>,
    pub new: Vec<usize>,
    pub missing: Vec<usize>,
}

/// Splits clusters into those with at least one cross-map candidate partner
/// and those without: model-only clusters are new, reference-only are missing.
pub fn detect_new_missing<T: Scalar>(
    reference: &[Cluster<T>],
    model: &[Cluster<T>],
    mm: &MahalanobisModel<T>,
    grid: &GridSpec<T>,
) -> Result<Screening> {
    mm.validate()?;
    check_polarity(reference.iter().chain(model))?;
    let mut ref_ok = vec![false; reference.len()];
    let mut model_ok = vec![false; model.len()];
    for (i, r) in reference.iter().enumerate() {
        for (j, m) in model.iter().enumerate() {
            if mm.accepts(pair_features(r, m, grid)) {
                ref_ok[i] = true;
                model_ok[j] = true;
            }
        }
    }
    let split = |ok: &[bool]| -> (Vec<usize>, Vec<usize>) { (0..ok.len()).partition(|&i| ok[i]) };
    let (matchable_ref, missing) = split(&ref_ok);
    let (matchable_model, new) = split(&model_ok);
    Ok(Screening { matchable_ref, matchable_model, new, missing })
}

fn check_polarity<'a, T: Scalar + 'a>(mut clusters: impl Iterator<Item = &'a Cluster<T>>) -> Result<()> {
    let Some(first) = clusters.next() else {
        return Ok(());
    };
    if clusters.any(|c| c.polarity != first.polarity) {
        return contract("clusters of both polarities passed to one matching step");
    }
    Ok(())
}

/// Merges clusters on the larger side, closest pair first, until both sides
/// have the same count.
///
/// Ties in distance go to the pair with the smallest combined area, then to
/// the lexicographically first index pair.
pub fn recluster_equal<T: Scalar>(
    reference: Vec<Cluster<T>>,
    model: Vec<Cluster<T>>,
    grid: &GridSpec<T>,
) -> Result<(Vec<Cluster<T>>, Vec<Cluster<T>>)> {
    if reference.is_empty() || model.is_empty() {
        return contract("recluster_equal needs clusters on both sides");
    }
    check_polarity(reference.iter().chain(&model))?;
    let target = reference.len().min(model.len());
    Ok((merge_down(reference, target, grid)?, merge_down(model, target, grid)?))
}

fn merge_down<T: Scalar>(mut clusters: Vec<Cluster<T>>, target: usize, grid: &GridSpec<T>) -> Result<Vec<Cluster<T>>> {
    if clusters.len() <= target {
        return Ok(clusters);
    }
    let n = clusters.len();
    let mut dist = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = clusters[i].distance(&clusters[j], grid);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    while clusters.len() > target {
        let n = clusters.len();
        let mut best: Option<(T, T, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let cand = (dist[i][j], clusters[i].physical_area + clusters[j].physical_area, i, j);
                let better = match best {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (_, _, i, j) = best.expect("at least two clusters");
        // The set distance to a union is the smaller of the two distances.
        for k in 0..n {
            let d = dist[i][k].min(dist[j][k]);
            dist[i][k] = d;
            dist[k][i] = d;
        }
        dist[i][i] = T::zero();
        clusters[i] = clusters[i].merge(&clusters[j], grid)?;
        clusters.remove(j);
        dist.remove(j);
        for row in dist.iter_mut() {
            row.remove(j);
        }
    }
    Ok(clusters)
}

/// One assigned pair, as indices into the equal-length input lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment<T: Scalar> {
    pub ref_index: usize,
    pub model_index: usize,
    pub cost_micro: i64,
    pub cost: T,
}

/// Converts an arc length to integer micro-units.
pub fn to_micro<T: Scalar>(d: T) -> i64 {
    (d.to_f64_lossy() * MICRO).round() as i64
}

/// Optimal one-to-one assignment minimising the summed set distances.
pub fn match_assign<T: Scalar>(
    reference: &[Cluster<T>],
    model: &[Cluster<T>],
    grid: &GridSpec<T>,
) -> Result<(Vec<Assignment<T>>, i64)> {
    if reference.len() != model.len() || reference.is_empty() {
        return contract(format!(
            "match_assign needs equal non-zero counts, got {} and {}",
            reference.len(),
            model.len()
        ));
    }
    check_polarity(reference.iter().chain(model))?;
    let arcs: Vec<Vec<T>> = reference.iter().map(|r| model.iter().map(|m| r.distance(m, grid)).collect()).collect();
    let micro: Vec<Vec<i64>> = arcs.iter().map(|row| row.iter().map(|&d| to_micro(d)).collect()).collect();
    let (perm, total) = hungarian(&micro);
    let pairs = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| Assignment { ref_index: i, model_index: j, cost_micro: micro[i][j], cost: arcs[i][j] })
        .collect();
    Ok((pairs, total))
}

/// Matching settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct MatchConfig<T: Scalar> {
    /// Holes closer than this arc length share a cluster.
    pub cluster_threshold: T,
    pub mahalanobis: MahalanobisModel<T>,
}

impl<T: Scalar> Default for MatchConfig<T> {
    fn default() -> Self {
        Self { cluster_threshold: T::lit(DEFAULT_CLUSTER_THRESHOLD), mahalanobis: MahalanobisModel::default() }
    }
}

impl<T: Scalar> MatchConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.cluster_threshold.is_finite() || self.cluster_threshold < T::zero() {
            return contract("cluster_threshold must be finite and non-negative");
        }
        self.mahalanobis.validate()
    }
}

/// Descriptor of one original cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClusterSummary<T: Scalar> {
    pub id: usize,
    pub polarity: Polarity,
    pub centroid: SpherePoint<T>,
    pub physical_area: T,
    pub image_area: usize,
    pub n_holes: usize,
}

/// A matched pair of (possibly merged) clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MatchedPair<T: Scalar> {
    pub polarity: Polarity,
    pub ref_ids: Vec<usize>,
    pub model_ids: Vec<usize>,
    pub cost_micro: i64,
    pub cost: T,
    pub ref_area: T,
    pub model_area: T,
    pub overlap_area: T,
    pub ref_image_area: usize,
    pub model_image_area: usize,
}

/// Matching of one model map against the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MatchResult<T: Scalar> {
    /// Pixel count of the grid, for image-area fractions.
    pub grid_pixels: usize,
    pub ref_clusters: Vec<ClusterSummary<T>>,
    pub model_clusters: Vec<ClusterSummary<T>>,
    pub matched: Vec<MatchedPair<T>>,
    pub new_clusters: Vec<ClusterSummary<T>>,
    pub missing_clusters: Vec<ClusterSummary<T>>,
    pub total_cost_micro: i64,
}

impl<T: Scalar> MatchResult<T> {
    /// The part of the result concerning one polarity.
    pub fn polarity_part(&self, polarity: Polarity) -> Self {
        let keep = |v: &[ClusterSummary<T>]| v.iter().filter(|c| c.polarity == polarity).cloned().collect();
        let matched: Vec<MatchedPair<T>> = self.matched.iter().filter(|m| m.polarity == polarity).cloned().collect();
        Self {
            grid_pixels: self.grid_pixels,
            ref_clusters: keep(&self.ref_clusters),
            model_clusters: keep(&self.model_clusters),
            total_cost_micro: matched.iter().map(|m| m.cost_micro).sum(),
            matched,
            new_clusters: keep(&self.new_clusters),
            missing_clusters: keep(&self.missing_clusters),
        }
    }

    /// Every original cluster appears exactly once, as matched or as
    /// new/missing, and no pair mixes polarities.
    pub fn check_conservation(&self) -> Result<()> {
        fn side<T: Scalar>(
            all: &[ClusterSummary<T>],
            matched: impl Iterator<Item = (usize, Polarity)>,
            unmatched: &[ClusterSummary<T>],
            what: &str,
        ) -> Result<()> {
            let mut seen = HashSet::new();
            let polarity_of = |id: usize| all.iter().find(|c| c.id == id).map(|c| c.polarity);
            let listed = matched.chain(unmatched.iter().map(|c| (c.id, c.polarity)));
            for (id, pol) in listed {
                if polarity_of(id) != Some(pol) {
                    return contract(format!("{what} cluster {id} unknown or of the wrong polarity"));
                }
                if !seen.insert(id) {
                    return contract(format!("{what} cluster {id} listed twice"));
                }
            }
            if seen.len() != all.len() {
                return contract(format!("{} of {} {what} clusters accounted for", seen.len(), all.len()));
            }
            Ok(())
        }
        side(
            &self.ref_clusters,
            self.matched.iter().flat_map(|m| m.ref_ids.iter().map(move |&i| (i, m.polarity))),
            &self.missing_clusters,
            "reference",
        )?;
        side(
            &self.model_clusters,
            self.matched.iter().flat_map(|m| m.model_ids.iter().map(move |&i| (i, m.polarity))),
            &self.new_clusters,
            "model",
        )
    }
}

/// Clusters each polarity of a mask; ids run over positive clusters first.
pub fn clusters_of_mask<T: Scalar>(
    mask: &SegmentationMask,
    threshold: T,
    grid: &GridSpec<T>,
) -> Result<Vec<Vec<Cluster<T>>>> {
    if mask.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", grid.dims()),
            actual: format!("{:?}", mask.dims()),
        });
    }
    let holes = extract_holes(mask, grid);
    let mut next = 0;
    let mut out = Vec::new();
    for pol in Polarity::BOTH {
        let same: Vec<CoronalHole<T>> = holes.iter().filter(|h| h.polarity == pol).cloned().collect();
        let clusters = cluster_by_distance(&same, threshold, next, grid)?;
        next += clusters.len();
        out.push(clusters);
    }
    Ok(out)
}

/// Full matching of one model mask against the reference mask.
pub fn match_maps<T: Scalar>(
    reference: &SegmentationMask,
    model: &SegmentationMask,
    cfg: &MatchConfig<T>,
    grid: &GridSpec<T>,
) -> Result<MatchResult<T>> {
    cfg.validate()?;
    let ref_by_pol = clusters_of_mask(reference, cfg.cluster_threshold, grid)?;
    let model_by_pol = clusters_of_mask(model, cfg.cluster_threshold, grid)?;
    let mut result = MatchResult {
        grid_pixels: grid.dims().len(),
        ref_clusters: ref_by_pol.iter().flatten().map(Cluster::summary).collect(),
        model_clusters: model_by_pol.iter().flatten().map(Cluster::summary).collect(),
        matched: Vec::new(),
        new_clusters: Vec::new(),
        missing_clusters: Vec::new(),
        total_cost_micro: 0,
    };
    for (refs, models) in ref_by_pol.into_iter().zip(model_by_pol) {
        let screen = detect_new_missing(&refs, &models, &cfg.mahalanobis, grid)?;
        let pick =
            |list: &[Cluster<T>], idx: &[usize]| -> Vec<Cluster<T>> { idx.iter().map(|&i| list[i].clone()).collect() };
        let mut missing = pick(&refs, &screen.missing);
        let mut new = pick(&models, &screen.new);
        let ref_m = pick(&refs, &screen.matchable_ref);
        let model_m = pick(&models, &screen.matchable_model);
        // Screening pairs clusters symmetrically, so one side empty implies both.
        if ref_m.is_empty() || model_m.is_empty() {
            missing.extend(ref_m);
            new.extend(model_m);
        } else {
            let (ref_eq, model_eq) = recluster_equal(ref_m, model_m, grid)?;
            let (pairs, total) = match_assign(&ref_eq, &model_eq, grid)?;
            result.total_cost_micro += total;
            for a in pairs {
                let r = &ref_eq[a.ref_index];
                let m = &model_eq[a.model_index];
                result.matched.push(MatchedPair {
                    polarity: r.polarity,
                    ref_ids: r.ids.clone(),
                    model_ids: m.ids.clone(),
                    cost_micro: a.cost_micro,
                    cost: a.cost,
                    ref_area: r.physical_area,
                    model_area: m.physical_area,
                    overlap_area: r.overlap_area(m, grid),
                    ref_image_area: r.image_area,
                    model_image_area: m.image_area,
                });
            }
        }
        missing.sort_by_key(|c| c.ids[0]);
        new.sort_by_key(|c| c.ids[0]);
        result.missing_clusters.extend(missing.iter().map(Cluster::summary));
        result.new_clusters.extend(new.iter().map(Cluster::summary));
    }
    result.matched.sort_by(|a, b| a.ref_ids.cmp(&b.ref_ids));
    Ok(result)
}

/// Matches every model mask against the reference independently.
pub fn run_matching<T: Scalar>(
    reference: &SegmentationMask,
    models: &[SegmentationMask],
    cfg: &MatchConfig<T>,
    grid: &GridSpec<T>,
) -> Result<Vec<MatchResult<T>>> {
    models.par_iter().map(|m| match_maps(reference, m, cfg, grid)).collect()
}
