//! CART-style binary classification trees with Gini splits.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A node in a flattened tree; children are indices into the node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum Node<T: Scalar> {
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: T, left: usize, right: usize },
    /// Training class counts `[negative, positive]` that reached this leaf.
    Leaf { counts: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecisionTree<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> DecisionTree<T> {
    pub fn from_nodes(nodes: Vec<Node<T>>) -> crate::Result<Self> {
        if nodes.is_empty() {
            return crate::error::contract("tree needs at least one node");
        }
        for n in &nodes {
            if let Node::Split { left, right, .. } = *n {
                if left >= nodes.len() || right >= nodes.len() {
                    return crate::error::contract("tree child index out of range");
                }
            }
        }
        Ok(Self { nodes })
    }

    /// A single leaf that always votes `class`.
    pub fn constant(class: usize) -> Self {
        let mut counts = [0, 0];
        counts[class.min(1)] = 1;
        Self { nodes: vec![Node::Leaf { counts }] }
    }

    /// Depth-one tree: `x[feature] <= threshold` votes `left_class`, else `right_class`.
    pub fn stump(feature: usize, threshold: T, left_class: usize, right_class: usize) -> Self {
        let leaf = |c: usize| {
            let mut counts = [0, 0];
            counts[c.min(1)] = 1;
            Node::Leaf { counts }
        };
        Self { nodes: vec![Node::Split { feature, threshold, left: 1, right: 2 }, leaf(left_class), leaf(right_class)] }
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn leaf_counts(&self, x: &[T]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right }
                }
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    /// Majority class of the reached leaf; an evenly split leaf votes 0.
    pub fn vote(&self, x: &[T]) -> usize {
        let c = self.leaf_counts(x);
        usize::from(c[1] > c[0])
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk<T: Scalar>(nodes: &[Node<T>], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn features_used(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_splits: Option<usize>,
    pub n_feature_sub: usize,
}

pub(crate) fn gini(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = c[0] as f64 / n;
    let p1 = c[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

fn counts_of(y: &[usize], idx: &[usize]) -> [usize; 2] {
    let mut c = [0, 0];
    for &i in idx {
        c[y[i]] += 1;
    }
    c
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BestSplit<T> {
    pub feature: usize,
    pub threshold: T,
    /// Sample-weighted mean child impurity.
    pub child_impurity: f64,
}

/// Midpoint between two consecutive distinct values that still separates them.
pub(crate) fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let m = lo + (hi - lo) / T::lit(2.0);
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Best Gini split of `idx` over `features`; ties keep the first candidate
/// in feature order then threshold order.
pub(crate) fn best_split<T: Scalar>(
    x: &[Vec<T>],
    y: &[usize],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit<T>> {
    let n = idx.len();
    let total = counts_of(y, idx);
    let mut best: Option<BestSplit<T>> = None;
    let mut col: Vec<(T, usize)> = Vec::with_capacity(n);
    for &f in features {
        col.clear();
        col.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        col.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        let mut left = [0usize, 0];
        for k in 0..n - 1 {
            left[col[k].1] += 1;
            if col[k].0 == col[k + 1].0 {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let imp = (nl as f64 * gini(left) + nr as f64 * gini(right)) / n as f64;
            if best.is_none_or(|b| imp < b.child_impurity) {
                best = Some(BestSplit { feature: f, threshold: midpoint(col[k].0, col[k + 1].0), child_impurity: imp });
            }
        }
    }
    best
}

/// Grows one tree breadth-first over the (possibly repeated) sample indices.
/// Returns the tree and its raw per-feature impurity decrease.
pub(crate) fn grow<T: Scalar, R: Rng>(
    x: &[Vec<T>],
    y: &[usize],
    sample_idx: Vec<usize>,
    params: &GrowParams,
    rng: &mut R,
) -> (DecisionTree<T>, Vec<f64>) {
    let d = x[0].len();
    let n_root = sample_idx.len() as f64;
    let mut importance = vec![0.0; d];
    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { counts: [0, 0] }];
    let mut queue = VecDeque::new();
    queue.push_back((0usize, sample_idx, 0usize));
    let mut splits = 0usize;

    while let Some((id, idx, depth)) = queue.pop_front() {
        let counts = counts_of(y, &idx);
        nodes[id] = Node::Leaf { counts };
        let pure = counts[0] == 0 || counts[1] == 0;
        let budget_left = params.max_splits.is_none_or(|m| splits < m);
        if pure || depth >= params.max_depth || idx.len() < 2 * params.min_leaf || !budget_left {
            continue;
        }
        let mut feats = sample(rng, d, params.n_feature_sub.min(d)).into_vec();
        feats.sort_unstable();
        let Some(split) = best_split(x, y, &idx, &feats, params.min_leaf) else {
            continue;
        };
        let (li, ri): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
        let gain = gini(counts) - split.child_impurity;
        importance[split.feature] += idx.len() as f64 / n_root * gain.max(0.0);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        splits += 1;
        queue.push_back((left, li, depth + 1));
        queue.push_back((right, ri, depth + 1));
    }
    (DecisionTree { nodes }, importance)
}
