#![allow(dead_code)]

use std::collections::VecDeque;

use coronal_core::{BoolField, Dims, Field, GridSpec, MapKind, Pixel, SynopticMap};

pub fn scalar(dims: Dims, kind: MapKind, f: impl FnMut(Pixel) -> f64) -> SynopticMap<f64> {
    SynopticMap::new(GridSpec::from_dims(dims).unwrap(), kind, Field::from_fn(dims, f), Field::filled(dims, true))
        .unwrap()
}

/// Elliptical disc test in pixel units with longitudinal wrap.
pub fn in_ellipse(p: Pixel, dims: Dims, r0: f64, c0: f64, a_r: f64, a_c: f64) -> bool {
    let dr = p.row as f64 + 0.5 - r0;
    let mut dc = (p.col as f64 + 0.5 - c0).abs();
    dc = dc.min(dims.cols as f64 - dc);
    (dr / a_r).powi(2) + (dc / a_c).powi(2) <= 1.0
}

pub fn jaccard(a: &BoolField, b: &BoolField) -> f64 {
    let (mut inter, mut uni) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += usize::from(x && y);
        uni += usize::from(x || y);
    }
    if uni == 0 {
        1.0
    } else {
        inter as f64 / uni as f64
    }
}

/// Pixels reachable from `seeds` through 4-neighbour steps on `passable`.
pub fn flood4(seeds: &BoolField, passable: &BoolField) -> BoolField {
    let dims = seeds.dims();
    let mut out = Field::filled(dims, false);
    let mut q = VecDeque::new();
    for p in dims.pixels() {
        if seeds[p] && passable[p] {
            out[p] = true;
            q.push_back(p);
        }
    }
    while let Some(p) = q.pop_front() {
        for n in dims.neighbors4(p) {
            if passable[n] && !out[n] {
                out[n] = true;
                q.push_back(n);
            }
        }
    }
    out
}
