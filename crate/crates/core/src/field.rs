//! Dense row-major 2-D containers over a longitude/latitude grid.
//!
//! Row 0 is the northernmost latitude band; column 0 starts at longitude 0.
//! Columns are periodic (longitude wraps), rows are not.

use std::ops::{Index, IndexMut};

use crate::error::{contract, Result};

/// Grid dimensions without any physical scale attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
}

impl Dims {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> usize {
        p.row * self.cols + p.col
    }

    #[inline]
    pub fn pixel(&self, idx: usize) -> Pixel {
        Pixel::new(idx / self.cols, idx % self.cols)
    }

    #[inline]
    pub fn wrap_col(&self, col: isize) -> usize {
        col.rem_euclid(self.cols as isize) as usize
    }

    /// Neighbour offset by (dr, dc): columns wrap, rows off the grid yield `None`.
    #[inline]
    pub fn offset(&self, p: Pixel, dr: isize, dc: isize) -> Option<Pixel> {
        let r = p.row as isize + dr;
        if r < 0 || r >= self.rows as isize {
            return None;
        }
        Some(Pixel::new(r as usize, self.wrap_col(p.col as isize + dc)))
    }

    /// 4-neighbours with longitudinal wrap.
    pub fn neighbors4(&self, p: Pixel) -> impl Iterator<Item = Pixel> + '_ {
        const OFFS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        OFFS.iter().filter_map(move |&(dr, dc)| self.offset(p, dr, dc))
    }

    /// 8-neighbours with longitudinal wrap.
    pub fn neighbors8(&self, p: Pixel) -> impl Iterator<Item = Pixel> + '_ {
        const OFFS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        OFFS.iter().filter_map(move |&(dr, dc)| self.offset(p, dr, dc))
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> {
        let cols = self.cols;
        (0..self.len()).map(move |i| Pixel::new(i / cols, i % cols))
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.cols, self.rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<V> {
    dims: Dims,
    data: Vec<V>,
}

impl<V: Clone> Field<V> {
    pub fn filled(dims: Dims, value: V) -> Self {
        Self { dims, data: vec![value; dims.len()] }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(Pixel) -> V) -> Self {
        let data = dims.pixels().map(&mut f).collect();
        Self { dims, data }
    }

    pub fn from_vec(dims: Dims, data: Vec<V>) -> Result<Self> {
        if data.len() != dims.len() {
            return contract(format!("field data has {} values, grid {} needs {}", data.len(), dims, dims.len()));
        }
        Ok(Self { dims, data })
    }

    pub fn map<W: Clone>(&self, f: impl Fn(&V) -> W) -> Field<W> {
        Field { dims: self.dims, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U: Clone, W: Clone>(&self, other: &Field<U>, f: impl Fn(&V, &U) -> W) -> Result<Field<W>> {
        if self.dims != other.dims {
            return contract(format!("grid {} vs {}", self.dims, other.dims));
        }
        Ok(Field { dims: self.dims, data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect() })
    }
}

impl<V> Field<V> {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn rows(&self) -> usize {
        self.dims.rows
    }

    pub fn cols(&self) -> usize {
        self.dims.cols
    }

    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<V> {
        self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pixel, &V)> {
        let cols = self.dims.cols;
        self.data.iter().enumerate().map(move |(i, v)| (Pixel::new(i / cols, i % cols), v))
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> &V {
        &self.data[row * self.dims.cols + col]
    }

    /// Row clamped to the grid, column wrapped.
    #[inline]
    pub fn at_clamped(&self, row: isize, col: isize) -> &V {
        let r = row.clamp(0, self.dims.rows as isize - 1) as usize;
        let c = self.dims.wrap_col(col);
        &self.data[r * self.dims.cols + c]
    }
}

impl<V> Index<Pixel> for Field<V> {
    type Output = V;

    #[inline]
    fn index(&self, p: Pixel) -> &V {
        &self.data[p.row * self.dims.cols + p.col]
    }
}

impl<V> IndexMut<Pixel> for Field<V> {
    #[inline]
    fn index_mut(&mut self, p: Pixel) -> &mut V {
        &mut self.data[p.row * self.dims.cols + p.col]
    }
}

pub type BoolField = Field<bool>;

impl BoolField {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn set_pixels(&self) -> Vec<Pixel> {
        self.iter().filter(|(_, &b)| b).map(|(p, _)| p).collect()
    }
}
