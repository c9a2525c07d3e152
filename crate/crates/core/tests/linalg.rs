use minmax_core::linalg::{
    eigenvalues, householder_qr, match_nearest, op_norm, svd, DenseMatrix, EigenSystem, C64,
};
use minmax_core::rng;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].re)
}

fn real_matrix(n: usize, seed: u64) -> DenseMatrix {
    rng::gaussian_matrix(&mut rng::stream(seed, 0), n, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_spectrum_matches_nalgebra(n in 1usize..9, seed in any::<u64>()) {
        let m = real_matrix(n, seed);
        let ours = eigenvalues(&m).unwrap();
        let theirs: Vec<C64> = to_nalgebra(&m)
            .complex_eigenvalues()
            .iter()
            .map(|z| C64::new(z.re, z.im))
            .collect();
        let idx = match_nearest(&ours, &theirs);
        let scale = op_norm(&m).max(1.0);
        for (k, &j) in idx.iter().enumerate() {
            prop_assert!((ours[k] - theirs[j]).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn complex_eigensystem_reconstructs(n in 1usize..9, seed in any::<u64>()) {
        let m = rng::complex_gaussian_matrix(&mut rng::stream(seed, 1), n, n);
        let es = EigenSystem::new(&m).unwrap();
        let scale = op_norm(&m).max(1.0);
        prop_assert!(es.reconstruct().approx_eq(&m, 1e-10 * scale * es.condition));
        let wv = es.dual.adjoint().matmul(&es.right);
        prop_assert!(wv.approx_eq(&DenseMatrix::identity(n), 1e-10 * es.condition));
        for k in 0..n {
            let v = es.right_vec(k);
            let mv = m.mul_vec(&v);
            let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - es.values[k] * b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(res < 1e-11 * scale);
        }
        for w in es.values.windows(2) {
            prop_assert!(w[0].re <= w[1].re + 1e-10 * scale);
        }
    }

    #[test]
    fn singular_values_match_nalgebra(r in 1usize..7, c in 1usize..7, seed in any::<u64>()) {
        let m = rng::gaussian_matrix(&mut rng::stream(seed, 2), r, c);
        let s = svd(&m).unwrap();
        let mut theirs: Vec<f64> = to_nalgebra(&m).singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.sigma.iter().zip(&theirs) {
            prop_assert!((a - b).abs() < 1e-12 * theirs[0].max(1.0));
        }
        prop_assert!(s.reconstruct().approx_eq(&m, 1e-12 * theirs[0].max(1.0)));
        prop_assert!(s.u.is_real(0.0) && s.v.is_real(0.0));
    }

    #[test]
    fn qr_factor_is_unitary(n in 1usize..10, seed in any::<u64>()) {
        let m = real_matrix(n, seed);
        let (q, r) = householder_qr(&m);
        prop_assert!(q.transpose().matmul(&q).approx_eq(&DenseMatrix::identity(n), 1e-13));
        prop_assert!(q.matmul(&r).approx_eq(&m, 1e-12 * op_norm(&m).max(1.0)));
    }
}

#[test]
fn normal_matrix_with_repeated_spectrum_keeps_orthogonal_vectors() {
    // A = [[0, I], [-I, 0]] has eigenvalues +-i, each twice.
    let mut a = DenseMatrix::zeros(4, 4);
    for i in 0..2 {
        a[(i, i + 2)] = C64::new(1.0, 0.0);
        a[(i + 2, i)] = C64::new(-1.0, 0.0);
    }
    let es = EigenSystem::new(&a).unwrap();
    assert!(es.condition < 10.0);
    assert!(es.reconstruct().approx_eq(&a, 1e-13));
}

#[test]
fn larger_random_matrices_converge() {
    for seed in 0..5 {
        let m = real_matrix(40, seed);
        let es = EigenSystem::new(&m).unwrap();
        assert!(es.reconstruct().approx_eq(&m, 1e-8));
    }
}
