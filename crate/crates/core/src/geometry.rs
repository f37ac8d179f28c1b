//! Spherical geometry on equirectangular (longitude x latitude) grids.
//!
//! Pixel (r, c) covers the cell whose centre sits at
//! `lon = (c + 0.5) * 360 / n_cols` and `lat = 90 - (r + 0.5) * 180 / n_rows`,
//! so row 0 is the northernmost band.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::field::{Dims, Pixel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GridSpec<T: Scalar> {
    pub n_cols: usize,
    pub n_rows: usize,
    /// Sphere radius; lengths and areas come out in units of it.
    pub radius: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(n_cols: usize, n_rows: usize) -> Result<Self> {
        Self::with_radius(n_cols, n_rows, T::one())
    }

    pub fn with_radius(n_cols: usize, n_rows: usize, radius: T) -> Result<Self> {
        if n_cols < 2 || n_rows < 2 {
            return contract(format!("grid must be at least 2x2, got {n_cols}x{n_rows}"));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return contract("radius must be positive and finite");
        }
        Ok(Self { n_cols, n_rows, radius })
    }

    pub fn from_dims(dims: Dims) -> Result<Self> {
        Self::new(dims.cols, dims.rows)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.n_rows, self.n_cols)
    }

    /// Longitude step in radians.
    pub fn dlon(&self) -> T {
        T::TAU() / T::count(self.n_cols)
    }

    /// Latitude step in radians.
    pub fn dlat(&self) -> T {
        T::PI() / T::count(self.n_rows)
    }

    pub fn lat_of_row(&self, r: usize) -> T {
        T::lit(90.0) - (T::count(r) + T::lit(0.5)) * T::lit(180.0) / T::count(self.n_rows)
    }

    pub fn lon_of_col(&self, c: usize) -> T {
        (T::count(c) + T::lit(0.5)) * T::lit(360.0) / T::count(self.n_cols)
    }

    /// Pixel-centre coordinates.
    pub fn pixel_to_sphere(&self, r: usize, c: usize) -> Result<SpherePoint<T>> {
        if r >= self.n_rows || c >= self.n_cols {
            return contract(format!("pixel ({r}, {c}) outside {}x{} grid", self.n_cols, self.n_rows));
        }
        Ok(SpherePoint { lat: self.lat_of_row(r), lon: self.lon_of_col(c) })
    }

    pub(crate) fn center(&self, p: Pixel) -> SpherePoint<T> {
        SpherePoint { lat: self.lat_of_row(p.row), lon: self.lon_of_col(p.col) }
    }

    /// Exact spherical area of every cell in row `r`:
    /// `R^2 * dlon * (sin(lat_top) - sin(lat_bottom))`.
    ///
    /// Summed over the grid this is `4 pi R^2` up to rounding.
    pub fn pixel_area(&self, r: usize) -> T {
        let top = (T::lit(90.0) - T::count(r) * T::lit(180.0) / T::count(self.n_rows)).to_radians();
        let bottom = (T::lit(90.0) - T::count(r + 1) * T::lit(180.0) / T::count(self.n_rows)).to_radians();
        self.radius * self.radius * self.dlon() * (top.sin() - bottom.sin())
    }

    /// Midpoint-rule cell area `R^2 * cos(lat_centre) * dlon * dlat`.
    pub fn pixel_area_midpoint(&self, r: usize) -> T {
        let lat = self.lat_of_row(r).to_radians();
        self.radius * self.radius * lat.cos() * self.dlon() * self.dlat()
    }

    pub fn total_area(&self) -> T {
        (0..self.n_rows).map(|r| self.pixel_area(r) * T::count(self.n_cols)).sum()
    }

    pub fn area_of(&self, pixels: &[Pixel]) -> T {
        pixels.iter().map(|p| self.pixel_area(p.row)).sum()
    }

    pub(crate) fn unit_vector(&self, p: Pixel) -> [T; 3] {
        self.center(p).unit_vector()
    }
}

/// A point on the sphere in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpherePoint<T: Scalar> {
    pub lat: T,
    pub lon: T,
}

impl<T: Scalar> SpherePoint<T> {
    /// Latitude is clamped to [-90, 90]; longitude is reduced into [0, 360).
    pub fn new(lat: T, lon: T) -> Self {
        let full = T::lit(360.0);
        let mut lon = lon % full;
        if lon < T::zero() {
            lon += full;
        }
        if lon >= full {
            lon = T::zero();
        }
        Self { lat: lat.max(T::lit(-90.0)).min(T::lit(90.0)), lon }
    }

    pub fn unit_vector(&self) -> [T; 3] {
        let (slat, clat) = self.lat.to_radians().sin_cos();
        let (slon, clon) = self.lon.to_radians().sin_cos();
        [clat * clon, clat * slon, slat]
    }

    pub fn from_unit_vector(v: [T; 3]) -> Self {
        let h = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let lat = v[2].atan2(h).to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        Self::new(lat, lon)
    }
}

/// Great-circle distance (haversine form). Longitude differences are
/// periodic, so points either side of the 0/360 seam are close.
pub fn geodesic_distance<T: Scalar>(a: SpherePoint<T>, b: SpherePoint<T>, radius: T) -> T {
    let two = T::lit(2.0);
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlam = (b.lon - a.lon).to_radians();
    let s1 = (dphi / two).sin();
    let s2 = (dlam / two).sin();
    let h = s1 * s1 + phi1.cos() * phi2.cos() * s2 * s2;
    let h = h.max(T::zero()).min(T::one());
    radius * two * h.sqrt().atan2((T::one() - h).sqrt())
}

/// Pixels of `set` that touch its complement under 8-connectivity, plus any
/// pixel on the first or last row (the sphere continues over the pole there).
pub fn boundary_pixels(set: &[Pixel], dims: Dims) -> Vec<Pixel> {
    let members: HashSet<Pixel> = set.iter().copied().collect();
    set.iter()
        .copied()
        .filter(|&p| p.row == 0 || p.row + 1 == dims.rows || dims.neighbors8(p).any(|q| !members.contains(&q)))
        .collect()
}

/// Minimum great-circle distance between two pixel sets.
///
/// Zero when the sets share a pixel. Otherwise the minimum is searched over
/// boundary pixels only.
pub fn set_distance<T: Scalar>(a: &[Pixel], b: &[Pixel], grid: &GridSpec<T>) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return contract("set_distance of an empty pixel set");
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let lookup: HashSet<Pixel> = small.iter().copied().collect();
    if large.iter().any(|p| lookup.contains(p)) {
        return Ok(T::zero());
    }
    let dims = grid.dims();
    let ba = boundary_pixels(a, dims);
    let bb = boundary_pixels(b, dims);
    Ok(min_pair_distance(&ba, &bb, grid))
}

/// Exhaustive minimum over all pairs; the boundary search is checked against this.
pub fn set_distance_exhaustive<T: Scalar>(a: &[Pixel], b: &[Pixel], grid: &GridSpec<T>) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return contract("set_distance of an empty pixel set");
    }
    Ok(min_pair_distance(a, b, grid))
}

pub(crate) fn min_pair_distance<T: Scalar>(a: &[Pixel], b: &[Pixel], grid: &GridSpec<T>) -> T {
    // Chord length is monotone in arc length, so the closest pair is found on
    // unit vectors and only that pair is converted to an arc.
    let vb: Vec<[T; 3]> = b.iter().map(|&p| grid.unit_vector(p)).collect();
    let mut best = (T::infinity(), a[0], b[0]);
    for &pa in a {
        let u = grid.unit_vector(pa);
        for (j, v) in vb.iter().enumerate() {
            let dx = u[0] - v[0];
            let dy = u[1] - v[1];
            let dz = u[2] - v[2];
            let c2 = dx * dx + dy * dy + dz * dz;
            if c2 < best.0 {
                best = (c2, pa, b[j]);
            }
        }
    }
    geodesic_distance(grid.center(best.1), grid.center(best.2), grid.radius)
}

/// Area-weighted centroid of a pixel set, projected back onto the sphere.
pub fn centroid<T: Scalar>(pixels: &[Pixel], grid: &GridSpec<T>) -> SpherePoint<T> {
    let mut acc = [T::zero(); 3];
    for &p in pixels {
        let w = grid.pixel_area(p.row);
        let v = grid.unit_vector(p);
        for k in 0..3 {
            acc[k] += w * v[k];
        }
    }
    SpherePoint::from_unit_vector(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g360() -> GridSpec<f64> {
        GridSpec::new(360, 180).unwrap()
    }

    #[test]
    fn pixel_centres() {
        let g = g360();
        let p = g.pixel_to_sphere(89, 179).unwrap();
        assert!((p.lat - 0.5).abs() < 1e-12 && (p.lon - 179.5).abs() < 1e-12);
        let p = g.pixel_to_sphere(0, 0).unwrap();
        assert!((p.lat - 89.5).abs() < 1e-12 && (p.lon - 0.5).abs() < 1e-12);
        // 90 - 45.5 = 44.5; 300.5 * 1 = 300.5
        let p = g.pixel_to_sphere(45, 300).unwrap();
        assert!((p.lat - 44.5).abs() < 1e-12 && (p.lon - 300.5).abs() < 1e-12);
        assert!(g.pixel_to_sphere(180, 0).is_err());
        assert!(g.pixel_to_sphere(0, 360).is_err());
    }

    #[test]
    fn geodesic_reference_values() {
        let a = SpherePoint::new(0.0, 0.0);
        assert_eq!(geodesic_distance(a, a, 1.0), 0.0);
        let b = SpherePoint::new(0.0, 180.0);
        assert!((geodesic_distance(a, b, 3.0) - 3.0 * std::f64::consts::PI).abs() < 1e-12);
        let c = SpherePoint::new(0.0f64, 359.5);
        let d = SpherePoint::new(0.0, 0.5);
        assert!((geodesic_distance(c, d, 1.0) - 0.017453292519943295).abs() < 1e-12);
    }

    #[test]
    fn area_rules() {
        let g = g360();
        let four_pi = 4.0 * std::f64::consts::PI;
        assert!((g.total_area() - four_pi).abs() / four_pi < 1e-12);
        let mid: f64 = (0..180).map(|r| g.pixel_area_midpoint(r) * 360.0).sum();
        assert!((mid - four_pi).abs() / four_pi < 1e-3);
        assert!(g.pixel_area(90) > g.pixel_area(0));
        let g2 = GridSpec::with_radius(360, 180, 2.0).unwrap();
        assert!((g2.pixel_area(40) / g.pixel_area(40) - 4.0).abs() < 1e-12);
        assert!((0..180).all(|r| g.pixel_area(r) > 0.0));
    }

    #[test]
    fn set_distance_across_seam() {
        let g = g360();
        let a = [Pixel::new(90, 358), Pixel::new(90, 359)];
        let b = [Pixel::new(90, 1)];
        let d = set_distance(&a, &b, &g).unwrap();
        // closest centres: 359.5 and 1.5 -> 2 degrees apart at lat -0.5
        let oracle = set_distance_exhaustive(&a, &b, &g).unwrap();
        assert!((d - oracle).abs() < 1e-15);
        assert!(d > 1.9f64.to_radians() && d < 3.0f64.to_radians());
        assert_eq!(set_distance(&a, &a[..1], &g).unwrap(), 0.0);
        assert!(set_distance(&a, &[], &g).is_err());
    }

    #[test]
    fn singleton_sets_reduce_to_point_distance() {
        let g = g360();
        let a = [Pixel::new(10, 20)];
        let b = [Pixel::new(100, 200)];
        let d = set_distance(&a, &b, &g).unwrap();
        let e = geodesic_distance(g.center(a[0]), g.center(b[0]), 1.0);
        assert_eq!(d, e);
    }

    #[test]
    fn centroid_handles_wrap() {
        let g = g360();
        let c = centroid(&[Pixel::new(89, 359), Pixel::new(89, 0)], &g);
        assert!(c.lon < 1e-9 || c.lon > 360.0 - 1e-9, "lon {}", c.lon);
        // great-circle midpoint sits a hair poleward of the common latitude
        assert!((c.lat - 0.5).abs() < 1e-4);
    }

    #[test]
    fn f32_grid_works() {
        let g = GridSpec::<f32>::new(360, 180).unwrap();
        let t = g.total_area();
        assert!((t - 4.0 * std::f32::consts::PI).abs() < 1e-3);
    }
}
