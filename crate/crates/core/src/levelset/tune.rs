//! Compass pattern search over bounded parameters and per-image tuning of
//! the level-set area weight and edge smoothing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::maps::{SegmentationMask, SynopticMap};
use crate::scalar::Scalar;

use super::{confusion, from_counts, segment, LevelSetParams, ALPHA_RANGE, SIGMA_RANGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    /// `alpha` in [-3, 3], `sigma` in [0.2, 1].
    pub fn alpha_sigma() -> Self {
        Self { lower: vec![ALPHA_RANGE.0, SIGMA_RANGE.0], upper: vec![ALPHA_RANGE.1, SIGMA_RANGE.1] }
    }

    fn validate(&self, x0: &[f64]) -> Result<()> {
        if self.lower.len() != x0.len() || self.upper.len() != x0.len() || x0.is_empty() {
            return contract("bounds and start point must have the same, non-zero length");
        }
        for ((&lo, &hi), &x) in self.lower.iter().zip(&self.upper).zip(x0) {
            if !(lo < hi) || !(lo..=hi).contains(&x) {
                return contract(format!("start {x} not inside bounds [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

/// Step sizes are fractions of each bound's width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { initial_step: 0.25, min_step: 1e-2, max_evals: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the step shrank
    /// below `min_step`.
    pub converged: bool,
}

/// Compass search: poll `+step` then `-step` along each coordinate in turn,
/// move to the first strictly better point, and halve the step when no
/// poll point improves. Stops when the step drops below `min_step` or the
/// evaluation budget is spent. The returned value never exceeds the value at
/// `x0`.
pub fn pattern_search(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    bounds: &Bounds,
    opts: &TuneOptions,
) -> Result<PatternSearchResult> {
    bounds.validate(x0)?;
    if !(opts.initial_step > 0.0 && opts.min_step > 0.0) || opts.max_evals == 0 {
        return contract("pattern search needs positive steps and at least one evaluation");
    }
    let width: Vec<f64> = bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| u - l).collect();
    let to_x =
        |u: &[f64]| -> Vec<f64> { u.iter().zip(&bounds.lower).zip(&width).map(|((u, l), w)| l + u * w).collect() };
    let mut u: Vec<f64> = x0.iter().zip(&bounds.lower).zip(&width).map(|((x, l), w)| (x - l) / w).collect();
    let mut best = f(&to_x(&u))?;
    let initial_value = best;
    let mut evals = 1;
    let mut step = opts.initial_step;
    let mut converged = false;
    'outer: loop {
        if step < opts.min_step {
            converged = true;
            break;
        }
        let mut improved = false;
        'poll: for k in 0..u.len() {
            for dir in [1.0, -1.0] {
                let mut cand = u.clone();
                cand[k] = (cand[k] + dir * step).clamp(0.0, 1.0);
                if cand[k] == u[k] {
                    continue;
                }
                if evals >= opts.max_evals {
                    break 'outer;
                }
                let v = f(&to_x(&cand))?;
                evals += 1;
                if v < best {
                    best = v;
                    u = cand;
                    improved = true;
                    break 'poll;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(PatternSearchResult { x: to_x(&u), value: best, initial_value, evaluations: evals, converged })
}

/// One tuning example: inputs, initial segmentation and reference mask.
#[derive(Debug, Clone)]
pub struct TrainingImage<T: Scalar> {
    pub euv: SynopticMap<T>,
    pub mag: SynopticMap<T>,
    pub init: SegmentationMask,
    pub consensus: SegmentationMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub alpha: f64,
    pub sigma: f64,
    pub per_image: Vec<PatternSearchResult>,
    /// Set when any per-image search hit its evaluation budget.
    pub warning: bool,
}

/// Sens/spec distance of a segmentation run, with the undefined cases
/// (reference without holes or without background) counted as perfect on
/// that axis, and a numerically failed run scored as infinitely bad.
fn objective<T: Scalar>(img: &TrainingImage<T>, params: &LevelSetParams) -> Result<f64> {
    match segment(&img.euv, &img.mag, &img.init, params) {
        Ok(mask) => {
            let (tp, fp, tn, fn_) = confusion(&mask, &img.consensus)?;
            Ok(from_counts(tp, fp, tn, fn_).distance)
        }
        Err(Error::Numerical { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-image compass search from `(alpha, sigma) = (0, 0.5)`; returns the
/// medians of the per-image optima. Other fields of `base` stay fixed.
pub fn tune<T: Scalar>(images: &[TrainingImage<T>], base: &LevelSetParams, opts: &TuneOptions) -> Result<Tuned> {
    if images.is_empty() {
        return contract("tuning needs at least one training image");
    }
    let bounds = Bounds::alpha_sigma();
    let per_image = images
        .par_iter()
        .map(|img| {
            pattern_search(
                |x| {
                    let p = LevelSetParams { alpha: x[0], sigma: x[1], ..*base };
                    objective(img, &p)
                },
                &[0.0, 0.5],
                &bounds,
                opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Tuned {
        alpha: median(per_image.iter().map(|r| r.x[0]).collect()),
        sigma: median(per_image.iter().map(|r| r.x[1]).collect()),
        warning: per_image.iter().any(|r| !r.converged),
        per_image,
    })
}
