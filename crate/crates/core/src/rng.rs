//! Deterministic random streams.
//!
//! A master seed `s` and a stream index `i` map to a ChaCha8 generator seeded
//! with `s` (expanded by `seed_from_u64`) whose ChaCha stream word is `i`.
//! Streams with distinct indices are independent, so per-trial results do not
//! depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DenseMatrix, C64};

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Real matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), 0.0))
}

/// Complex matrix with i.i.d. standard complex normal entries.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DenseMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng) * s, normal(rng) * s))
}

/// `G G^T / k` for a Gaussian `n x k` factor: PSD with rank `min(n, k)`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> DenseMatrix {
    if rank == 0 {
        return DenseMatrix::zeros(n, n);
    }
    let g = gaussian_matrix(rng, n, rank);
    g.matmul(&g.transpose()).scale_real(1.0 / rank as f64)
}
