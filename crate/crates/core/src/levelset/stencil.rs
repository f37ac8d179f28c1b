//! Finite-difference stencils on the equirectangular grid: longitude wraps,
//! latitude reflects about the first and last rows.

use crate::field::{Dims, Field};
use crate::scalar::Scalar;

/// Reflects an out-of-range row index about the edge rows (row -1 maps to
/// row 1), so central differences vanish across the lat edges.
pub fn mirror_row(r: isize, rows: usize) -> usize {
    let last = rows as isize - 1;
    if last <= 0 {
        return 0;
    }
    let mut r = r;
    loop {
        if r < 0 {
            r = -r;
        } else if r > last {
            r = 2 * last - r;
        } else {
            return r as usize;
        }
    }
}

#[inline]
fn wrap(c: isize, cols: usize) -> usize {
    c.rem_euclid(cols as isize) as usize
}

/// Unit-sum 1-D Gaussian taps of length `size` (odd) and std `sigma` pixels.
pub fn gaussian_taps<T: Scalar>(size: usize, sigma: T) -> Vec<T> {
    let half = (size / 2) as isize;
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let taps: Vec<T> = (-half..=half)
        .map(|k| {
            let k = T::lit(k as f64);
            (-(k * k) / two_s2).exp()
        })
        .collect();
    let sum: T = taps.iter().copied().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable convolution with a truncated, normalised `size`×`size` Gaussian.
pub fn gaussian_smooth<T: Scalar>(f: &Field<T>, sigma: T, size: usize) -> Field<T> {
    let taps = gaussian_taps(size, sigma);
    let half = (size / 2) as isize;
    let Dims { rows, cols } = f.dims();
    let horiz = Field::from_fn(f.dims(), |p| {
        let mut acc = T::zero();
        for (k, &w) in taps.iter().enumerate() {
            let c = wrap(p.col as isize + k as isize - half, cols);
            acc += w * *f.at(p.row, c);
        }
        acc
    });
    Field::from_fn(f.dims(), |p| {
        let mut acc = T::zero();
        for (k, &w) in taps.iter().enumerate() {
            let r = mirror_row(p.row as isize + k as isize - half, rows);
            acc += w * *horiz.at(r, p.col);
        }
        acc
    })
}

/// Precomputed neighbour indices (east/west wrap, north/south mirror) for
/// the stencils below.
#[derive(Debug, Clone)]
pub struct Stencil {
    dims: Dims,
    east: Vec<usize>,
    west: Vec<usize>,
    north: Vec<usize>,
    south: Vec<usize>,
}

impl Stencil {
    pub fn new(dims: Dims) -> Self {
        let Dims { rows, cols } = dims;
        let mut s = Self {
            dims,
            east: Vec::with_capacity(dims.len()),
            west: Vec::with_capacity(dims.len()),
            north: Vec::with_capacity(dims.len()),
            south: Vec::with_capacity(dims.len()),
        };
        for r in 0..rows {
            let up = mirror_row(r as isize - 1, rows);
            let down = mirror_row(r as isize + 1, rows);
            for c in 0..cols {
                s.east.push(r * cols + wrap(c as isize + 1, cols));
                s.west.push(r * cols + wrap(c as isize - 1, cols));
                s.north.push(up * cols + c);
                s.south.push(down * cols + c);
            }
        }
        s
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Central differences `(d/dcol, d/drow)` in pixel units.
    pub fn gradient<T: Scalar>(&self, f: &[T], gx: &mut [T], gy: &mut [T]) {
        let half = T::lit(0.5);
        for i in 0..f.len() {
            gx[i] = (f[self.east[i]] - f[self.west[i]]) * half;
            gy[i] = (f[self.south[i]] - f[self.north[i]]) * half;
        }
    }

    /// Divergence of `(fx, fy)` with the same central differences.
    pub fn divergence<T: Scalar>(&self, fx: &[T], fy: &[T], out: &mut [T]) {
        let half = T::lit(0.5);
        for i in 0..fx.len() {
            out[i] = (fx[self.east[i]] - fx[self.west[i]] + fy[self.south[i]] - fy[self.north[i]]) * half;
        }
    }

    /// Five-point Laplacian.
    pub fn laplacian<T: Scalar>(&self, f: &[T], out: &mut [T]) {
        let four = T::lit(4.0);
        for i in 0..f.len() {
            out[i] = f[self.east[i]] + f[self.west[i]] + f[self.north[i]] + f[self.south[i]] - four * f[i];
        }
    }
}

/// Central differences `(d/dcol, d/drow)` of a whole field.
pub fn gradient<T: Scalar>(f: &Field<T>) -> (Field<T>, Field<T>) {
    let st = Stencil::new(f.dims());
    let mut gx = vec![T::zero(); f.dims().len()];
    let mut gy = gx.clone();
    st.gradient(f.as_slice(), &mut gx, &mut gy);
    (Field::from_vec(f.dims(), gx).expect("sized from dims"), Field::from_vec(f.dims(), gy).expect("sized from dims"))
}

/// Five-point Laplacian of a whole field.
pub fn laplacian<T: Scalar>(f: &Field<T>) -> Field<T> {
    let st = Stencil::new(f.dims());
    let mut out = vec![T::zero(); f.dims().len()];
    st.laplacian(f.as_slice(), &mut out);
    Field::from_vec(f.dims(), out).expect("sized from dims")
}
