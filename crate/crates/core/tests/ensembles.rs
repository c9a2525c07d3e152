use minmax_core::ensembles::{
    bound_sparse, bound_spreadout, ks_two_sample, mc_min_quadform, min_quadform, min_quadform_diag,
    sample_haar_orthogonal, sparse_value, SpectrumSpec,
};
use minmax_core::linalg::DenseMatrix;
use minmax_core::rng;
use minmax_core::stats::mean_stderr;
use proptest::prelude::*;

#[test]
fn haar_matrices_are_orthogonal() {
    for seed in 0..20 {
        let u = sample_haar_orthogonal(8, &mut rng::stream(seed, 0));
        assert!((&u.transpose().matmul(&u) - &DenseMatrix::identity(8)).max_abs() < 1e-12);
    }
}

#[test]
fn haar_first_column_has_zero_mean() {
    let n = 4;
    let cols: Vec<Vec<f64>> = (0..10_000)
        .map(|t| {
            let u = sample_haar_orthogonal(n, &mut rng::stream(21, t));
            (0..n).map(|i| u[(i, 0)].re).collect()
        })
        .collect();
    for i in 0..n {
        let v: Vec<f64> = cols.iter().map(|c| c[i]).collect();
        let (m, se) = mean_stderr(&v);
        assert!(m.abs() < 3.0 * se, "entry {i}: mean {m} stderr {se}");
    }
}

#[test]
fn one_dimensional_haar_is_a_fair_sign() {
    let trials = 2000;
    let plus = (0..trials)
        .filter(|&t| {
            let u = sample_haar_orthogonal(1, &mut rng::stream(t, 0));
            assert_eq!(u[(0, 0)].re.abs(), 1.0);
            u[(0, 0)].re > 0.0
        })
        .count() as f64
        / trials as f64;
    assert!((plus - 0.5).abs() < 3.0 * (0.25f64 / trials as f64).sqrt());
}

#[test]
fn min_quadform_examples() {
    let id = DenseMatrix::identity(3);
    let u = sample_haar_orthogonal(3, &mut rng::stream(2, 0));
    let v = sample_haar_orthogonal(3, &mut rng::stream(2, 1));
    assert!((min_quadform(&id, &id, &u, &v) - 2.0).abs() < 1e-12);

    let q = DenseMatrix::from_real_diag(&[1.0, 0.0]);
    let i2 = DenseMatrix::identity(2);
    assert_eq!(min_quadform(&q, &DenseMatrix::zeros(2, 2), &i2, &i2), 0.0);

    let qd = [1.0, 1.0, 0.0];
    let scan = (0..3)
        .map(|j| u[(0, j)].re.powi(2) + u[(1, j)].re.powi(2))
        .fold(f64::INFINITY, f64::min);
    let dense = min_quadform(&DenseMatrix::from_real_diag(&qd), &DenseMatrix::zeros(3, 3), &u, &v);
    assert!((dense - scan).abs() < 1e-14);
    assert!((min_quadform_diag(&qd, &[0.0; 3], &u, &v) - scan).abs() < 1e-14);
}

#[test]
fn identity_spectrum_mean_is_exactly_two() {
    for n in [1, 5, 12] {
        let est = mc_min_quadform(&SpectrumSpec::identity(n), 100, 9);
        assert!((est.mean - 2.0).abs() < 1e-12 && est.stderr < 1e-12);
        assert!(est.q05 <= est.q95);
    }
}

#[test]
fn estimates_are_deterministic() {
    let spec = SpectrumSpec::from_values(&[3.0, 1.0, 0.5], 4);
    assert_eq!(mc_min_quadform(&spec, 200, 5), mc_min_quadform(&spec, 200, 5));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| mc_min_quadform(&spec, 200, 5));
    assert_eq!(single.samples, mc_min_quadform(&spec, 200, 5).samples);
}

#[test]
fn rotated_q_has_the_same_distribution() {
    let n = 4;
    let qd = [2.0, 1.0, 0.5, 0.0];
    let rd = [1.0, 0.0, 0.0, 0.0];
    let o = sample_haar_orthogonal(n, &mut rng::stream(99, 0));
    let q_rot = o.transpose().matmul(&DenseMatrix::from_real_diag(&qd)).matmul(&o);
    let r = DenseMatrix::from_real_diag(&rd);
    let trials = 2000;
    let sample = |seed: u64, q: &DenseMatrix| -> Vec<f64> {
        (0..trials)
            .map(|t| {
                let mut g = rng::stream(seed, t);
                let u = sample_haar_orthogonal(n, &mut g);
                let v = sample_haar_orthogonal(n, &mut g);
                min_quadform(q, &r, &u, &v)
            })
            .collect()
    };
    let a = sample(1, &DenseMatrix::from_real_diag(&qd));
    let b = sample(2, &q_rot);
    let (_, p) = ks_two_sample(&a, &b);
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn spreadout_limit_closes_the_sandwich() {
    let mut prev = f64::INFINITY;
    for n in [16, 256, 4096, 65536] {
        let b = bound_spreadout(&SpectrumSpec::identity(n));
        let gap = b.upper - b.lower;
        assert!(gap < prev && b.upper == 2.0);
        prev = gap;
    }
    assert!(prev < 0.1);
}

#[test]
fn sparse_bound_prefix_search_for_equal_values() {
    let spec = SpectrumSpec::q_only(&[0.7; 6], 20);
    let prefix = bound_sparse(&spec, false);
    let full = bound_sparse(&spec, true);
    assert!((prefix.value - full.value).abs() < 1e-15);
    assert_eq!(prefix.subset.len(), full.subset.len());
    let b = bound_sparse(&SpectrumSpec::q_only(&[1.0], 10), false);
    assert!((b.value - 1.0 / (1000.0 * std::f64::consts::E)).abs() < 1e-17);
}

proptest! {
    #[test]
    fn full_search_dominates_prefix(values in prop::collection::vec(0.01f64..10.0, 1..8), n in 8usize..40) {
        let spec = SpectrumSpec::q_only(&values, n);
        let prefix = bound_sparse(&spec, false);
        let full = bound_sparse(&spec, true);
        prop_assert!(full.value >= prefix.value * (1.0 - 1e-12));
        let s = spec.support();
        prop_assert!((sparse_value(&s, &full.subset, n) - full.value).abs() <= 1e-15 * full.value.max(1.0));
    }

    #[test]
    fn spectrum_spec_is_sorted_split(values in prop::collection::vec(0.0f64..5.0, 1..10)) {
        let n = values.len().div_ceil(2) + 1;
        let spec = SpectrumSpec::from_values(&values, n);
        prop_assert!(spec.validate().is_ok());
        let s = spec.sorted();
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((spec.trace() - values.iter().sum::<f64>()).abs() < 1e-12);
        prop_assert!(spec.q.iter().zip(&spec.r).all(|(a, b)| a >= b));
    }
}
