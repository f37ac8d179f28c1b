use coronal_core::forest::{train, ForestConfig, Node, TrainedForest};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gini_of(y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let p = y.iter().filter(|&&l| l == 1).count() as f64 / y.len() as f64;
    2.0 * p * (1.0 - p)
}

/// Weighted child impurity of splitting `x` on `feature <= threshold`.
fn split_impurity(x: &[Vec<f64>], y: &[usize], feature: usize, threshold: f64) -> f64 {
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for (row, &lab) in x.iter().zip(y) {
        if row[feature] <= threshold {
            l.push(lab);
        } else {
            r.push(lab);
        }
    }
    (l.len() as f64 * gini_of(&l) + r.len() as f64 * gini_of(&r)) / y.len() as f64
}

/// Exhaustive scan over every feature and every midpoint candidate.
fn best_stump_impurity(x: &[Vec<f64>], y: &[usize]) -> f64 {
    let d = x[0].len();
    let mut best = gini_of(y);
    for f in 0..d {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            best = best.min(split_impurity(x, y, f, 0.5 * (w[0] + w[1])));
        }
    }
    best
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (2usize..4, 6usize..40).prop_flat_map(|(d, n)| {
        (prop::collection::vec(prop::collection::vec(0i32..12, d), n), prop::collection::vec(0usize..2, n))
            .prop_filter("both classes", |(_, y)| y.contains(&0) && y.contains(&1))
            .prop_map(|(x, y)| {
                let x = x.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                (x, y)
            })
    })
}

fn stump_cfg(d: usize) -> ForestConfig {
    ForestConfig { n_trees: 1, max_depth: 1, bootstrap: false, n_feature_sub: Some(d), ..ForestConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stump_matches_exhaustive_scan((x, y) in dataset()) {
        let f = train(&x, &y, &stump_cfg(x[0].len())).unwrap();
        let oracle = best_stump_impurity(&x, &y);
        match f.trees()[0].nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                prop_assert!((split_impurity(&x, &y, feature, threshold) - oracle).abs() < 1e-12);
            }
            Node::Leaf { .. } => prop_assert!((gini_of(&y) - oracle).abs() < 1e-12),
        }
    }

    #[test]
    fn same_seed_same_forest((x, y) in dataset(), seed in any::<u64>()) {
        let cfg = ForestConfig { n_trees: 5, max_depth: 4, seed, ..ForestConfig::default() };
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&x, &y, &cfg).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn monotone_column_transform_keeps_predictions((x, y) in dataset(), seed in 0u64..1000, col in 0usize..2) {
        // A midpoint threshold is not mapped onto the midpoint of the
        // transformed values, so only values every tree saw during training
        // are comparable: queries are training points and bagging is off.
        let cfg = ForestConfig { n_trees: 7, max_depth: 5, seed, bootstrap: false, n_feature_sub: Some(1), ..ForestConfig::default() };
        let xt: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[col] = (r[col] * 0.7).exp() - 3.0;
                r
            })
            .collect();
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&xt, &y, &cfg).unwrap();
        for (p, q) in x.iter().zip(&xt) {
            prop_assert_eq!(a.predict(p).unwrap(), b.predict(q).unwrap());
        }
    }

    #[test]
    fn importances_sum_to_one_and_unused_are_zero((x, y) in dataset(), seed in 0u64..1000) {
        // Append a constant column: it can never be split on.
        let xc: Vec<Vec<f64>> = x.iter().map(|r| { let mut r = r.clone(); r.push(1.0); r }).collect();
        let f = train(&xc, &y, &ForestConfig { n_trees: 6, seed, ..ForestConfig::default() }).unwrap();
        let imp = f.importances();
        let used: std::collections::BTreeSet<usize> =
            f.trees().iter().flat_map(|t| t.features_used()).collect();
        let sum: f64 = imp.iter().sum();
        prop_assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-9);
        prop_assert!(imp.iter().all(|&v| v >= 0.0));
        for (i, &v) in imp.iter().enumerate() {
            if !used.contains(&i) {
                prop_assert_eq!(v, 0.0);
            }
        }
        prop_assert_eq!(imp[xc[0].len() - 1], 0.0);
        prop_assert!((0.0..=1.0).contains(&f.oob_error()));
    }
}

#[test]
fn random_labels_give_chance_oob() {
    let mut total = 0.0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 600;
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let f = train(&x, &y, &ForestConfig { seed, ..ForestConfig::default() }).unwrap();
        total += f.oob_error();
    }
    let mean = total / 5.0;
    assert!((0.35..=0.65).contains(&mean), "mean oob {mean}");
}

#[test]
fn saved_forest_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/model.json");
    let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
    let y: Vec<usize> = (0..30).map(|i| usize::from(i % 3 == 0)).collect();
    let f = train(&x, &y, &ForestConfig::default()).unwrap();
    f.save(&path).unwrap();
    assert_eq!(TrainedForest::<f64>::load(&path).unwrap(), f);
    std::fs::write(&path, "{\"version\": 99}").unwrap();
    assert!(TrainedForest::<f64>::load(&path).is_err());
}

#[test]
fn f32_forest_trains() {
    let x: Vec<Vec<f32>> = (0..50).map(|i| vec![i as f32 * 0.1]).collect();
    let y: Vec<usize> = (0..50).map(|i| usize::from(i >= 25)).collect();
    let f = train(&x, &y, &ForestConfig::default()).unwrap();
    assert_eq!(f.predict(&[4.0]).unwrap().label, 1);
    assert_eq!(f.predict(&[0.5]).unwrap().label, 0);
}
