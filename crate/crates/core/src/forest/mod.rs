//! Random forest for binary classification: bootstrap bagging of Gini trees,
//! majority vote, out-of-bag error and mean-decrease-in-impurity importance.
//!
//! Class `1` is the "good"/"valid" class and `0` the "bad"/"invalid" one.

mod io;
mod tree;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use io::FOREST_FORMAT_VERSION;
pub use tree::{DecisionTree, Node};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Optional cap on split nodes per tree (trees grow breadth-first).
    pub max_splits: Option<usize>,
    /// Features drawn per split; `None` means `round(sqrt(d))`.
    pub n_feature_sub: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 20,
            max_depth: 11,
            min_leaf: 1,
            max_splits: None,
            n_feature_sub: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return Err(Error::Contract(format!(
                "forest config needs n_trees, max_depth, min_leaf >= 1 (got {}, {}, {})",
                self.n_trees, self.max_depth, self.min_leaf
            )));
        }
        if self.n_feature_sub == Some(0) {
            return Err(Error::Contract("n_feature_sub must be >= 1".into()));
        }
        Ok(())
    }

    fn features_per_split(&self, d: usize) -> usize {
        self.n_feature_sub.unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1)).min(d)
    }
}

/// How an exactly split vote is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Ties go to class 0 (bad / invalid).
    Negative,
    /// Ties go to class 1 (good / valid).
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// Share of trees that voted for `label`; always in [0.5, 1].
    pub vote_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedForest<T: Scalar> {
    n_features: usize,
    trees: Vec<DecisionTree<T>>,
    oob_error: f64,
    oob_evaluated: usize,
    importances: Vec<f64>,
}

impl<T: Scalar> TrainedForest<T> {
    /// Wraps hand-built trees. Importances are zero and no OOB estimate exists.
    pub fn from_trees(trees: Vec<DecisionTree<T>>, n_features: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Contract("forest needs at least one tree".into()));
        }
        for t in &trees {
            if t.features_used().any(|f| f >= n_features) {
                return Err(Error::Contract("tree splits on a feature beyond n_features".into()));
            }
        }
        Ok(Self { n_features, trees, oob_error: 0.0, oob_evaluated: 0, importances: vec![0.0; n_features] })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[DecisionTree<T>] {
        &self.trees
    }

    /// Out-of-bag misclassification rate over samples that had at least one
    /// out-of-bag tree; 0 when none did.
    pub fn oob_error(&self) -> f64 {
        self.oob_error
    }

    pub fn oob_evaluated(&self) -> usize {
        self.oob_evaluated
    }

    /// Normalised mean decrease in impurity per feature.
    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.n_features),
                actual: format!("{} features", x.len()),
            });
        }
        Ok(())
    }

    pub fn votes(&self, x: &[T]) -> Result<[usize; 2]> {
        self.check_dim(x)?;
        let mut v = [0usize, 0];
        for t in &self.trees {
            v[t.vote(x)] += 1;
        }
        Ok(v)
    }

    /// Majority vote; ties go to class 0.
    pub fn predict(&self, x: &[T]) -> Result<Prediction> {
        self.predict_with(x, TiePolicy::Negative)
    }

    pub fn predict_with(&self, x: &[T], tie: TiePolicy) -> Result<Prediction> {
        let v = self.votes(x)?;
        let total = (v[0] + v[1]) as f64;
        let label = resolve(v, tie);
        Ok(Prediction { label, vote_fraction: v[label] as f64 / total })
    }
}

fn resolve(v: [usize; 2], tie: TiePolicy) -> usize {
    match v[1].cmp(&v[0]) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => match tie {
            TiePolicy::Negative => 0,
            TiePolicy::Positive => 1,
        },
    }
}

fn check_training_data<T: Scalar>(x: &[Vec<T>], y: &[usize]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Training(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Training("need at least two samples".into()));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::Training("samples have no features".into()));
    }
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Training("ragged feature matrix".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::Training("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training("both classes must be present".into()));
    }
    Ok(d)
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Trains a forest. Deterministic for a given `(x, y, cfg)`; trees are grown
/// in parallel but each owns a seed-derived RNG stream.
pub fn train<T: Scalar>(x: &[Vec<T>], y: &[usize], cfg: &ForestConfig) -> Result<TrainedForest<T>> {
    cfg.validate()?;
    let d = check_training_data(x, y)?;
    let n = x.len();
    let params = tree::GrowParams {
        max_depth: cfg.max_depth,
        min_leaf: cfg.min_leaf,
        max_splits: cfg.max_splits,
        n_feature_sub: cfg.features_per_split(d),
    };

    let grown: Vec<(DecisionTree<T>, Vec<f64>, Vec<bool>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(cfg.seed, t);
            let mut in_bag = vec![!cfg.bootstrap; n];
            let idx: Vec<usize> = if cfg.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            let (tree, imp) = tree::grow(x, y, idx, &params, &mut rng);
            (tree, imp, in_bag)
        })
        .collect();

    let mut oob_votes = vec![[0usize; 2]; n];
    for (tree, _, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_votes[i][tree.vote(&x[i])] += 1;
        }
    }
    let mut evaluated = 0usize;
    let mut wrong = 0usize;
    for (v, &label) in oob_votes.iter().zip(y) {
        if v[0] + v[1] == 0 {
            continue;
        }
        evaluated += 1;
        if resolve(*v, TiePolicy::Negative) != label {
            wrong += 1;
        }
    }
    let oob_error = if evaluated == 0 { 0.0 } else { wrong as f64 / evaluated as f64 };

    let mut importances = vec![0.0; d];
    for (_, imp, _) in &grown {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(imp) {
                *acc += v / total;
            }
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }

    Ok(TrainedForest {
        n_features: d,
        trees: grown.into_iter().map(|(t, _, _)| t).collect(),
        oob_error,
        oob_evaluated: evaluated,
        importances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobPoint {
    pub n_trees: usize,
    pub max_depth: usize,
    pub oob_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OobTuning {
    pub best: ForestConfig,
    pub surface: Vec<OobPoint>,
}

/// Trains one forest per `(n_trees, max_depth)` grid point with the seed of
/// `base` and picks the lowest OOB error; ties prefer fewer trees, then
/// shallower trees.
pub fn tune_oob<T: Scalar>(
    x: &[Vec<T>],
    y: &[usize],
    grid: &[(usize, usize)],
    base: &ForestConfig,
) -> Result<OobTuning> {
    if grid.is_empty() {
        return Err(Error::Contract("OOB tuning grid is empty".into()));
    }
    let mut surface = Vec::with_capacity(grid.len());
    for &(n_trees, max_depth) in grid {
        let cfg = ForestConfig { n_trees, max_depth, ..base.clone() };
        let f = train(x, y, &cfg)?;
        surface.push(OobPoint { n_trees, max_depth, oob_error: f.oob_error() });
    }
    let best = surface
        .iter()
        .min_by(|a, b| {
            a.oob_error.total_cmp(&b.oob_error).then(a.n_trees.cmp(&b.n_trees)).then(a.max_depth.cmp(&b.max_depth))
        })
        .expect("non-empty grid");
    Ok(OobTuning { best: ForestConfig { n_trees: best.n_trees, max_depth: best.max_depth, ..base.clone() }, surface })
}

/// Accuracy drop when each feature column is shuffled.
pub fn permutation_importance<T: Scalar>(
    forest: &TrainedForest<T>,
    x: &[Vec<T>],
    y: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let accuracy = |rows: &[Vec<T>]| -> Result<f64> {
        let mut ok = 0usize;
        for (r, &l) in rows.iter().zip(y) {
            if forest.predict(r)?.label == l {
                ok += 1;
            }
        }
        Ok(ok as f64 / rows.len().max(1) as f64)
    };
    let base = accuracy(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(forest.n_features());
    for f in 0..forest.n_features() {
        let mut col: Vec<T> = x.iter().map(|r| r[f]).collect();
        col.shuffle(&mut rng);
        let shuffled: Vec<Vec<T>> = x
            .iter()
            .zip(&col)
            .map(|(r, &v)| {
                let mut r = r.clone();
                r[f] = v;
                r
            })
            .collect();
        out.push(base - accuracy(&shuffled)?);
    }
    Ok(out)
}
