use dragan_core::data::{fit_minmax, stratified_kfold, Dataset, Matrix};
use dragan_core::oversample::{mixup, polyfit_star, smote, target_count_balance};
use proptest::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

/// `p` lies on the segment `[a, b]` up to floating-point rounding.
fn on_segment(p: &[f64], a: &[f64], b: &[f64]) -> bool {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    if len2 == 0.0 {
        return p.iter().zip(a).all(|(x, y)| (x - y).abs() <= 1e-12 * scale);
    }
    let t = p.iter().zip(a).zip(&ab).map(|((p, a), d)| (p - a) * d).sum::<f64>() / len2;
    if !(-1e-12..=1.0 + 1e-12).contains(&t) {
        return false;
    }
    p.iter()
        .zip(a)
        .zip(&ab)
        .all(|((p, a), d)| (p - (a + t * d)).abs() <= 1e-12 * scale)
}

fn dataset(min_rows: Vec<Vec<f64>>, n_neg: usize) -> Dataset {
    let d = min_rows[0].len();
    let mut rows: Vec<Vec<f64>> = (0..n_neg).map(|i| vec![-(i as f64) - 10.0; d]).collect();
    let mut labels = vec![0u8; n_neg];
    rows.extend(min_rows.iter().cloned());
    labels.extend(std::iter::repeat(1).take(min_rows.len()));
    Dataset::new("p", Matrix::from_rows(&rows).unwrap(), labels).unwrap()
}

fn minority_set() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (1usize..4, 2usize..8).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n),
            n + 1..n + 20,
        )
    })
}

fn originals_untouched(before: &Dataset, after: &Dataset) -> bool {
    let n = before.len();
    after.features.as_slice()[..n * before.dim()]
        .iter()
        .zip(before.features.as_slice())
        .all(|(a, b)| a.to_bits() == b.to_bits())
        && after.labels[..n] == before.labels[..]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn smote_points_lie_on_minority_segments((min_rows, n_neg) in minority_set(), k in 1usize..6, seed in any::<u64>()) {
        let ds = dataset(min_rows.clone(), n_neg);
        let k = k.min(min_rows.len() - 1);
        let target = target_count_balance(&ds);
        let out = smote(&ds, target, k, seed).unwrap();
        prop_assert!(originals_untouched(&ds, &out));
        let (neg, pos) = out.class_counts();
        prop_assert_eq!(neg, pos);
        for i in ds.len()..out.len() {
            prop_assert_eq!(out.labels[i], 1);
            let p = out.features.row(i);
            let hit = min_rows.iter().any(|a| min_rows.iter().any(|b| on_segment(p, a, b)));
            prop_assert!(hit, "row {i} is on no minority segment");
        }
    }

    #[test]
    fn polyfit_points_lie_on_star_segments((min_rows, n_neg) in minority_set(), seed in any::<u64>()) {
        let ds = dataset(min_rows.clone(), n_neg);
        let d = min_rows[0].len();
        let centroid: Vec<f64> =
            (0..d).map(|c| min_rows.iter().map(|r| r[c]).sum::<f64>() / min_rows.len() as f64).collect();
        let out = polyfit_star(&ds, target_count_balance(&ds), seed).unwrap();
        prop_assert!(originals_untouched(&ds, &out));
        let (neg, pos) = out.class_counts();
        prop_assert_eq!(neg, pos);
        for i in ds.len()..out.len() {
            prop_assert_eq!(out.labels[i], 1);
            let p = out.features.row(i);
            prop_assert!(min_rows.iter().any(|tip| on_segment(p, &centroid, tip)));
        }
    }

    #[test]
    fn mixup_appends_convex_combinations((min_rows, n_neg) in minority_set(), seed in any::<u64>()) {
        let ds = dataset(min_rows, n_neg);
        let target = 15;
        let out = mixup(&ds, target, 0.2, seed).unwrap();
        prop_assert!(originals_untouched(&ds, &out));
        prop_assert_eq!(out.len(), ds.len() + target);
        let rows: Vec<&[f64]> = ds.features.iter_rows().collect();
        for i in ds.len()..out.len() {
            let p = out.features.row(i);
            prop_assert!(rows.iter().any(|a| rows.iter().any(|b| on_segment(p, a, b))));
        }
    }

    #[test]
    fn samplers_are_deterministic((min_rows, n_neg) in minority_set(), seed in any::<u64>()) {
        let ds = dataset(min_rows, n_neg);
        let t = target_count_balance(&ds);
        prop_assert_eq!(smote(&ds, t, 1, seed).unwrap(), smote(&ds, t, 1, seed).unwrap());
        prop_assert_eq!(polyfit_star(&ds, t, seed).unwrap(), polyfit_star(&ds, t, seed).unwrap());
        prop_assert_eq!(mixup(&ds, t, 0.4, seed).unwrap(), mixup(&ds, t, 0.4, seed).unwrap());
    }

    #[test]
    fn folds_are_disjoint_and_stratified(n_pos in 5usize..30, n_neg in 10usize..120, seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..n_pos + n_neg).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..n_pos + n_neg).map(|i| u8::from(i < n_pos)).collect();
        let ds = Dataset::new("s", Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let global = ds.minority_fraction();
        let plan = stratified_kfold(&ds, 5, 3, seed).unwrap();
        prop_assert_eq!(plan.folds.len(), 15);
        for f in &plan.folds {
            prop_assert!(f.test.iter().all(|i| !f.train.contains(i)));
            prop_assert_eq!(f.test.len() + f.train.len(), ds.len());
            let test = ds.subset(&f.test);
            prop_assert!((test.minority_fraction() - global).abs() <= 1.0 / f.test.len() as f64);
            // Train-fitted scaling may leave test rows outside the unit box.
            let scaled = fit_minmax(&ds.subset(&f.train)).apply_dataset(&test);
            prop_assert!(scaled.features.as_slice().iter().all(|v| v.is_finite()));
        }
    }
}

/// Kolmogorov-Smirnov statistic of `xs` against a continuous CDF.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn mixup_weights_follow_beta() {
    // Two rows at 0 and 1: every mixed value is λ or 1 − λ, and Beta(α, α)
    // is symmetric, so the appended values are Beta(α, α) distributed.
    for alpha in [0.2, 1.0, 2.5] {
        let ds = Dataset::new("b", Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(), vec![0, 1]).unwrap();
        let n = 5000;
        let out = mixup(&ds, n, alpha, 42).unwrap();
        let values: Vec<f64> = (2..out.len()).map(|i| out.features.get(i, 0)).collect();
        let beta = Beta::new(alpha, alpha).unwrap();
        let d = ks_statistic(values, |x| beta.cdf(x));
        // Critical value at significance 0.001.
        let critical = 1.95 / (n as f64).sqrt();
        assert!(d < critical, "alpha {alpha}: KS statistic {d} >= {critical}");
    }
    let ds = Dataset::new("b", Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(), vec![0, 1]).unwrap();
    let out = mixup(&ds, 100_000, 0.2, 7).unwrap();
    let values: Vec<f64> = (2..out.len()).map(|i| out.features.get(i, 0)).collect();
    let beta = Beta::new(0.2, 0.2).unwrap();
    let d = ks_statistic(values, |x| beta.cdf(x));
    assert!(d <= 0.01, "KS distance {d} over 1e5 draws");
}
