//! Random-rotation ensembles for the leading rate term
//! `mu = min_j u_j^T Q u_j + v_j^T R v_j` with `U, V` Haar on `O(n)`.
//!
//! By rotation invariance `Q` and `R` may be taken diagonal, so a
//! [`SpectrumSpec`] stores their eigenvalues only. Trial `t` of a Monte-Carlo
//! run with seed `s` draws from [`rng::stream`]`(s, t)`, so estimates do not
//! depend on the number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{householder_qr, DenseMatrix};
use crate::rng;
use crate::stats::{mean_stderr, quantile};

/// Eigenvalues of `Q` and `R`, each of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl SpectrumSpec {
    /// Sorts `values` decreasingly, pads with zeros to `2n` and deals them
    /// alternately to `Q` and `R`.
    pub fn from_values(values: &[f64], n: usize) -> Self {
        assert!(values.len() <= 2 * n, "{} eigenvalues exceed 2n = {}", values.len(), 2 * n);
        let mut s = values.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s.resize(2 * n, 0.0);
        let q = s.iter().step_by(2).copied().collect();
        let r = s.iter().skip(1).step_by(2).copied().collect();
        Self { q, r }
    }

    /// `Q = diag(values)` padded with zeros and `R = 0`.
    pub fn q_only(values: &[f64], n: usize) -> Self {
        let mut q = values.to_vec();
        q.resize(n, 0.0);
        Self { q, r: vec![0.0; n] }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            q: vec![1.0; n],
            r: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// All `2n` eigenvalues of `S`, nonincreasing.
    pub fn sorted(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.q.iter().chain(&self.r).copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Positive eigenvalues, nonincreasing.
    pub fn support(&self) -> Vec<f64> {
        self.sorted().into_iter().filter(|&v| v > 0.0).collect()
    }

    pub fn trace(&self) -> f64 {
        self.q.iter().chain(&self.r).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.q.iter().chain(&self.r).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn op_norm(&self) -> f64 {
        self.q.iter().chain(&self.r).fold(0.0, |a, &b| a.max(b.abs()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.q.len() != self.r.len() || self.q.is_empty() {
            return Err("Q and R need the same positive size".into());
        }
        if self.q.iter().chain(&self.r).any(|v| !(*v >= 0.0)) {
            return Err("eigenvalues must be nonnegative".into());
        }
        Ok(())
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of `Q` rescaled by the signs of `diag(R)`.
pub fn sample_haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseMatrix {
    let g = rng::gaussian_matrix(rng, n, n);
    let (mut q, r) = householder_qr(&g);
    for j in 0..n {
        if r[(j, j)].re < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// `min_j u_j^T Q u_j + v_j^T R v_j` over the columns of `U` and `V`.
pub fn min_quadform(q: &DenseMatrix, r: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> f64 {
    let qu = q.matmul(u);
    let rv = r.matmul(v);
    (0..u.cols())
        .map(|j| {
            let a: f64 = (0..u.rows()).map(|i| u[(i, j)].re * qu[(i, j)].re).sum();
            let b: f64 = (0..v.rows()).map(|i| v[(i, j)].re * rv[(i, j)].re).sum();
            a + b
        })
        .fold(f64::INFINITY, f64::min)
}

/// [`min_quadform`] for diagonal `Q`, `R`.
pub fn min_quadform_diag(q: &[f64], r: &[f64], u: &DenseMatrix, v: &DenseMatrix) -> f64 {
    (0..u.cols())
        .map(|j| {
            let a: f64 = q.iter().enumerate().map(|(i, s)| s * u[(i, j)].re.powi(2)).sum();
            let b: f64 = r.iter().enumerate().map(|(i, s)| s * v[(i, j)].re.powi(2)).sum();
            a + b
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub q05: f64,
    pub q95: f64,
    pub trials: usize,
    pub seed: u64,
    /// Per-trial values in trial order.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl McEstimate {
    pub fn from_samples(samples: Vec<f64>, seed: u64) -> Self {
        let (mean, stderr) = mean_stderr(&samples);
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean,
            stderr,
            q05: quantile(&sorted, 0.05),
            q95: quantile(&sorted, 0.95),
            trials: samples.len(),
            seed,
            samples,
        }
    }

    /// Fraction of samples at or above `t`.
    pub fn frac_at_least(&self, t: f64) -> f64 {
        self.samples.iter().filter(|&&v| v >= t).count() as f64 / self.samples.len() as f64
    }

    /// Fraction of samples at or below `t`.
    pub fn frac_at_most(&self, t: f64) -> f64 {
        self.samples.iter().filter(|&&v| v <= t).count() as f64 / self.samples.len() as f64
    }
}

/// One trial with independent Haar `U`, `V`.
pub fn trial(spec: &SpectrumSpec, seed: u64, index: u64) -> f64 {
    let mut g = rng::stream(seed, index);
    let n = spec.n();
    let u = sample_haar_orthogonal(n, &mut g);
    let v = sample_haar_orthogonal(n, &mut g);
    min_quadform_diag(&spec.q, &spec.r, &u, &v)
}

pub fn mc_min_quadform(spec: &SpectrumSpec, trials: usize, seed: u64) -> McEstimate {
    let samples: Vec<f64> = (0..trials as u64).into_par_iter().map(|t| trial(spec, seed, t)).collect();
    McEstimate::from_samples(samples, seed)
}

/// A probability statement `P(mu >= threshold)` or `P(mu <= threshold)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub threshold: f64,
    /// Certified probability, clamped to `[0, 1]`.
    pub probability: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Expectation sandwich for spread-out spectra and its tail versions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadoutBound {
    pub n: usize,
    pub trace: f64,
    pub frobenius: f64,
    pub op_norm: f64,
    /// `tr(S)/n (1 - 2 ||S||_F / tr(S) sqrt(log n))`.
    pub lower: f64,
    /// `tr(S)/n`.
    pub upper: f64,
}

impl SpreadoutBound {
    /// `P(mu >= tr(S)/(2n) (1 - g)) >= 1 - n exp(-tr^2 g^2 / (4 F^2)) - 2 exp(-n/8)`, `0 <= g <= 1`.
    pub fn highprob_lower(&self, g: f64) -> TailBound {
        let n = self.n as f64;
        let ratio = (self.trace / self.frobenius).powi(2);
        TailBound {
            threshold: self.trace / (2.0 * n) * (1.0 - g),
            probability: clamp_prob(1.0 - n * (-ratio / 4.0 * g * g).exp() - 2.0 * (-n / 8.0).exp()),
        }
    }

    /// `P(mu <= 4 tr(S)/n (1 + g))`, sub-Gaussian for small `g` and
    /// sub-exponential beyond `F^2 / (tr ||S||)`.
    pub fn highprob_upper(&self, g: f64) -> TailBound {
        let n = self.n as f64;
        let tail = if g <= self.frobenius.powi(2) / (self.trace * self.op_norm) {
            (-(self.trace / self.frobenius).powi(2) / 8.0 * g * g).exp()
        } else {
            (-self.trace / (8.0 * self.op_norm) * g).exp()
        };
        TailBound {
            threshold: 4.0 * self.trace / n * (1.0 + g),
            probability: clamp_prob(1.0 - tail - 2.0 * (-n / 8.0).exp()),
        }
    }
}

pub fn bound_spreadout(spec: &SpectrumSpec) -> SpreadoutBound {
    let n = spec.n();
    let (trace, frobenius) = (spec.trace(), spec.frobenius());
    let upper = trace / n as f64;
    SpreadoutBound {
        n,
        trace,
        frobenius,
        op_norm: spec.op_norm(),
        lower: upper * (1.0 - 2.0 * frobenius / trace * (n as f64).ln().sqrt()),
        upper,
    }
}

/// Lower estimate for sparse spectra, maximised over candidate subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseBound {
    pub n: usize,
    pub value: f64,
    /// Indices into the nonincreasing positive spectrum.
    pub subset: Vec<usize>,
}

impl SparseBound {
    /// `P(mu >= value/2 (1 - g)) >= 1 - exp(-|S| g / 2) - 2 exp(-n/8)`, `0 <= g <= 1`.
    pub fn highprob(&self, g: f64) -> TailBound {
        let n = self.n as f64;
        TailBound {
            threshold: 0.5 * self.value * (1.0 - g),
            probability: clamp_prob(1.0 - (-(self.subset.len() as f64) * g / 2.0).exp() - 2.0 * (-n / 8.0).exp()),
        }
    }
}

/// `(1/e) (k/n) n^{-2/k} (prod_{l in S} s_l)^{1/k}` with `k = |S|`.
pub fn sparse_value(s: &[f64], subset: &[usize], n: usize) -> f64 {
    let k = subset.len() as f64;
    let nf = n as f64;
    let log_gm = subset.iter().map(|&l| s[l].ln()).sum::<f64>() / k;
    (k / nf) * nf.powf(-2.0 / k) * log_gm.exp() / std::f64::consts::E
}

/// Maximum of [`sparse_value`] over the prefixes `{1..k}` of the sorted
/// positive spectrum, or over all subsets when `full_search` is set and
/// `r <= 12`.
pub fn bound_sparse(spec: &SpectrumSpec, full_search: bool) -> SparseBound {
    let s = spec.support();
    let n = spec.n();
    let r = s.len();
    let mut best = SparseBound {
        n,
        value: 0.0,
        subset: Vec::new(),
    };
    let mut consider = |subset: Vec<usize>| {
        let v = sparse_value(&s, &subset, n);
        if v > best.value {
            best.value = v;
            best.subset = subset;
        }
    };
    if full_search && r <= 12 {
        for mask in 1u32..(1 << r) {
            consider((0..r).filter(|l| mask & (1 << l) != 0).collect());
        }
    } else {
        for k in 1..=r {
            consider((0..k).collect());
        }
    }
    best
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    (d, kolmogorov_q((en + 0.12 + 0.11 / en) * d))
}

/// `Q(l) = 2 sum_{k >= 1} (-1)^{k-1} exp(-2 k^2 l^2)`.
fn kolmogorov_q(l: f64) -> f64 {
    if l < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * l * l).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum_gives_two() {
        let est = mc_min_quadform(&SpectrumSpec::identity(6), 50, 3);
        assert!(est.samples.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(est.stderr < 1e-12);
    }

    #[test]
    fn sparse_plug_in() {
        let b = bound_sparse(&SpectrumSpec::q_only(&[1.0], 10), false);
        assert!((b.value - 1.0 / (1000.0 * std::f64::consts::E)).abs() < 1e-15);
        let spec = SpectrumSpec::q_only(&[4.0, 1.0], 100);
        let b = bound_sparse(&spec, false);
        let k1 = sparse_value(&[4.0, 1.0], &[0], 100);
        let k2 = sparse_value(&[4.0, 1.0], &[0, 1], 100);
        assert_eq!(b.value, k1.max(k2));
    }

    #[test]
    fn spreadout_identity() {
        let n = 16;
        let b = bound_spreadout(&SpectrumSpec::identity(n));
        let expect = 2.0 * (1.0 - 2.0 / (2.0 * n as f64).sqrt() * (n as f64).ln().sqrt());
        assert!((b.lower - expect).abs() < 1e-14 && b.upper == 2.0);
        assert_eq!(b.highprob_lower(0.0).probability, 0.0);
    }

    #[test]
    fn ks_detects_shift() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
        assert!(ks_two_sample(&a, &b).1 < 1e-6);
        assert!(ks_two_sample(&a, &a).1 > 0.99);
    }
}
