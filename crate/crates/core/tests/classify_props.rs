use coronal_core::classify::{classify_map, extract_features, AreaMode, FeatureSet, MapClass, MapFeatures, BAD, GOOD};
use coronal_core::forest::{train, ForestConfig};
use coronal_core::matchcluster::{match_maps, MatchConfig};
use coronal_core::{Dims, Field, GridSpec, Label, Pixel, Polarity, SegmentationMask};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIMS: Dims = Dims { rows: 40, cols: 80 };

fn grid() -> GridSpec<f64> {
    GridSpec::from_dims(DIMS).unwrap()
}

#[derive(Clone, Copy)]
struct Rect {
    r0: usize,
    c0: usize,
    h: usize,
    w: usize,
    pol: Polarity,
}

fn paint(rects: &[Rect]) -> SegmentationMask {
    let mut labels = Field::filled(DIMS, Label::Background);
    for r in rects {
        for row in r.r0..(r.r0 + r.h).min(DIMS.rows) {
            for dc in 0..r.w {
                labels[Pixel { row, col: (r.c0 + dc) % DIMS.cols }] = r.pol.label();
            }
        }
    }
    SegmentationMask::new(labels)
}

fn random_rect(rng: &mut ChaCha8Rng) -> Rect {
    Rect {
        r0: rng.gen_range(2..DIMS.rows - 8),
        c0: rng.gen_range(0..DIMS.cols),
        h: rng.gen_range(2..6),
        w: rng.gen_range(2..7),
        pol: if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative },
    }
}

fn rects(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rect> {
    (0..n).map(|_| random_rect(rng)).collect()
}

fn features(reference: &SegmentationMask, model: &SegmentationMask, mode: AreaMode) -> MapFeatures<f64> {
    let r = match_maps(reference, model, &MatchConfig::default(), &grid()).unwrap();
    extract_features(&r, mode)
}

#[test]
fn identical_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = grid();
    let mask = paint(&rects(&mut rng, 6));
    let f = features(&mask, &mask, AreaMode::Mixed);
    assert_eq!((f.new_n, f.miss_n, f.new_a, f.miss_a, f.over_a), (0.0, 0.0, 0.0, 0.0, 0.0));
    let total = g.area_of(&mask.hole_indicator().set_pixels());
    assert!((f.same_a - total).abs() < 1e-12);
}

#[test]
fn empty_model_is_all_missing() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = grid();
    let mask = paint(&rects(&mut rng, 6));
    let n_ref = match_maps(&mask, &mask, &MatchConfig::default(), &g).unwrap().ref_clusters.len();
    let f = features(&mask, &SegmentationMask::empty(DIMS), AreaMode::Spherical);
    assert_eq!(f.miss_n, n_ref as f64);
    assert!((f.miss_a - g.area_of(&mask.hole_indicator().set_pixels())).abs() < 1e-12);
    assert_eq!((f.new_n, f.new_a, f.over_a, f.same_a), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn one_pair_by_hand() {
    let g = grid();
    // Reference 4x4 block at rows 10..14, cols 10..14; model 4x6 block shifted
    // by one row and two columns. Plus a far new model hole and a far missing
    // reference hole of the other polarity.
    let p = Polarity::Positive;
    let n = Polarity::Negative;
    let reference = paint(&[Rect { r0: 10, c0: 10, h: 4, w: 4, pol: p }, Rect { r0: 30, c0: 50, h: 2, w: 3, pol: n }]);
    let model = paint(&[Rect { r0: 11, c0: 12, h: 4, w: 6, pol: p }, Rect { r0: 20, c0: 60, h: 3, w: 3, pol: p }]);
    let area = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> f64 {
        rows.flat_map(|r| cols.clone().map(move |_| r)).map(|r| g.pixel_area(r)).sum()
    };
    let model_a = area(11..15, 12..18);
    let overlap = area(11..14, 12..14);
    let f = features(&reference, &model, AreaMode::Spherical);
    assert_eq!((f.new_n, f.miss_n), (1.0, 1.0));
    assert!((f.new_a - area(20..23, 60..63)).abs() < 1e-15);
    assert!((f.miss_a - area(30..32, 50..53)).abs() < 1e-15);
    assert!((f.same_a - overlap).abs() < 1e-15);
    assert!((f.over_a - (model_a - overlap)).abs() < 1e-15);

    let mixed = features(&reference, &model, AreaMode::Mixed);
    assert_eq!(mixed.new_a, 9.0 / DIMS.len() as f64);
    assert_eq!(mixed.miss_a, 6.0 / DIMS.len() as f64);
    assert_eq!(mixed.same_a, f.same_a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn additive_across_polarities(seed in any::<u64>(), spherical in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = if spherical { AreaMode::Spherical } else { AreaMode::Mixed };
        let n_ref = rng.gen_range(0..8);
        let n_model = rng.gen_range(0..8);
        let r = match_maps(&paint(&rects(&mut rng, n_ref)), &paint(&rects(&mut rng, n_model)), &MatchConfig::default(), &grid()).unwrap();
        let whole = extract_features(&r, mode);
        let sum = extract_features(&r.polarity_part(Polarity::Positive), mode)
            + extract_features(&r.polarity_part(Polarity::Negative), mode);
        let (a, b) = (whole.to_vec(FeatureSet::Six), sum.to_vec(FeatureSet::Six));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        prop_assert!(a.iter().all(|&v| v >= 0.0));
        let ref_matched: f64 = r.matched.iter().map(|m| m.ref_area).sum();
        let model_matched: f64 = r.matched.iter().map(|m| m.model_area).sum();
        prop_assert!(whole.same_a <= ref_matched.min(model_matched) + 1e-12);
    }
}

/// Good models jitter each reference hole by at most one pixel; bad models
/// lose half the holes and gain several far ones.
fn corpus(seed: u64, n_days: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for _ in 0..n_days {
        let base = rects(&mut rng, 6);
        let reference = paint(&base);
        for k in 0..8 {
            let good = k % 2 == 0;
            let model: Vec<Rect> = if good {
                base.iter()
                    .map(|r| Rect { r0: r.r0 + rng.gen_range(0..2), c0: r.c0 + rng.gen_range(0..2), ..*r })
                    .collect()
            } else {
                let mut m: Vec<Rect> = base.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                m.extend(rects(&mut rng, 3));
                m
            };
            x.push(features(&reference, &paint(&model), AreaMode::Mixed).to_vec(FeatureSet::Six));
            y.push(if good { GOOD } else { BAD });
        }
    }
    (x, y)
}

#[test]
fn trained_classifier_separates_corpus() {
    let (x, y) = corpus(3, 40);
    let cfg = ForestConfig { n_trees: 20, max_depth: 11, seed: 4, ..ForestConfig::default() };
    let forest = train(&x, &y, &cfg).unwrap();
    let perfect = MapFeatures { same_a: 0.05, ..MapFeatures::default() };
    assert_eq!(classify_map(&perfect, FeatureSet::Six, &forest).unwrap().0, MapClass::Good);
    let all_missing = MapFeatures { miss_n: 6.0, miss_a: 0.02, ..MapFeatures::default() };
    assert_eq!(classify_map(&all_missing, FeatureSet::Six, &forest).unwrap().0, MapClass::Bad);

    let (xt, yt) = corpus(30, 15);
    let mut correct = 0;
    for (xi, &yi) in xt.iter().zip(&yt) {
        let f = MapFeatures { new_n: xi[0], new_a: xi[1], miss_n: xi[2], miss_a: xi[3], over_a: xi[4], same_a: xi[5] };
        let (class, frac) = classify_map(&f, FeatureSet::Six, &forest).unwrap();
        assert!((0.5..=1.0).contains(&frac));
        correct += usize::from(class.label() == yi);
    }
    assert!(correct as f64 / yt.len() as f64 >= 0.9, "{correct}/{}", yt.len());
}
