use super::factor::{householder, Lu};
use super::matrix::{vec_norm, DenseMatrix, C64, ZERO};
use super::LinalgError;

/// Eigenvector condition above which a matrix is treated as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e12;

/// Complex Schur form `A = Z T Z^H` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: DenseMatrix,
    pub z: DenseMatrix,
}

fn hessenberg(a: &DenseMatrix, want_z: bool) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut z = if want_z {
        DenseMatrix::identity(n)
    } else {
        DenseMatrix::zeros(0, 0)
    };
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let (v, beta, _) = householder(&x);
        if beta == 0.0 {
            continue;
        }
        let off = k + 1;
        for j in 0..n {
            let s: C64 = (off..n).map(|i| v[i - off].conj() * h[(i, j)]).sum::<C64>() * beta;
            for i in off..n {
                h[(i, j)] -= v[i - off] * s;
            }
        }
        for i in 0..n {
            let s: C64 = (off..n).map(|j| h[(i, j)] * v[j - off]).sum::<C64>() * beta;
            for j in off..n {
                h[(i, j)] -= s * v[j - off].conj();
            }
        }
        if want_z {
            for i in 0..n {
                let s: C64 = (off..n).map(|j| z[(i, j)] * v[j - off]).sum::<C64>() * beta;
                for j in off..n {
                    z[(i, j)] -= s * v[j - off].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, z)
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    (ax / r, y.conj() * x / (r * ax))
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Complex Schur decomposition via Hessenberg reduction and single-shift QR.
pub fn schur(a: &DenseMatrix, want_z: bool) -> Result<Schur, LinalgError> {
    let n = a.require_square()?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let (mut h, mut z) = hessenberg(a, want_z);
    if n < 2 {
        return Ok(Schur { t: h, z });
    }
    let eps = f64::EPSILON;
    let scale = h.max_abs();
    let max_iter = 60 * n;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let thresh = if diag == 0.0 { eps * scale } else { eps * diag };
            if sub <= thresh || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter * n {
            return Err(LinalgError::NoConvergence {
                routine: "schur",
                iterations: total,
            });
        }
        let mu = if iter % 11 == 0 {
            // Exceptional shift breaks cycles of the Wilkinson iteration.
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.25 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        let mut x = h[(lo, lo)] - mu;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let j0 = if k > lo { k - 1 } else { lo };
            // Rows k, k+1 of the full triangular factor.
            for j in j0..n {
                let u = h[(k, j)];
                let w = h[(k + 1, j)];
                h[(k, j)] = u * c + s * w;
                h[(k + 1, j)] = -s.conj() * u + w * c;
            }
            let i_end = (k + 2).min(hi);
            for i in 0..=i_end {
                let u = h[(i, k)];
                let w = h[(i, k + 1)];
                h[(i, k)] = u * c + w * s.conj();
                h[(i, k + 1)] = -u * s + w * c;
            }
            if want_z {
                for i in 0..n {
                    let u = z[(i, k)];
                    let w = z[(i, k + 1)];
                    z[(i, k)] = u * c + w * s.conj();
                    z[(i, k + 1)] = -u * s + w * c;
                }
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

/// Orders eigenvalues by real part, then imaginary part. Real parts equal up
/// to rounding are grouped so conjugate pairs order by imaginary part.
pub fn sort_spectrum(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].re.total_cmp(&values[j].re).then(i.cmp(&j)));
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-10 * scale;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]].re - values[idx[end - 1]].re <= tol {
            end += 1;
        }
        idx[start..end].sort_by(|&i, &j| values[i].im.total_cmp(&values[j].im).then(i.cmp(&j)));
        start = end;
    }
    idx
}

/// Eigenvalues only, sorted by real then imaginary part.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<C64>, LinalgError> {
    let s = schur(a, false)?;
    let d = s.t.diag();
    Ok(sort_spectrum(&d).into_iter().map(|i| d[i]).collect())
}

/// `min Re lambda(M)`.
pub fn spectral_abscissa_min(a: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

pub fn spectral_radius(a: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Minimum pairwise distance between eigenvalues (infinite for one value).
pub fn eigengap(values: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            g = g.min((values[i] - values[j]).norm());
        }
    }
    g
}

/// Greedy nearest matching: `result[k]` is the index in `candidates` matched
/// to `targets[k]`, resolving the globally closest pairs first.
pub fn match_nearest(targets: &[C64], candidates: &[C64]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(targets.len() * candidates.len());
    for (i, t) in targets.iter().enumerate() {
        for (j, c) in candidates.iter().enumerate() {
            pairs.push(((t - c).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![usize::MAX; targets.len()];
    let mut used = vec![false; candidates.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
        }
    }
    out
}

/// Eigendecomposition `M = V diag(lambda) W^H` with `W^H V = I`.
///
/// Right eigenvectors have unit norm; `w_k^H v_j = delta_jk` fixes the dual
/// basis. Eigenvalues are sorted by real part, then imaginary part.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<C64>,
    /// Columns are right eigenvectors.
    pub right: DenseMatrix,
    /// Columns are dual (left) eigenvectors.
    pub dual: DenseMatrix,
    /// `||V||_F ||V^{-1}||_F`.
    pub condition: f64,
}

impl EigenSystem {
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.require_square()?;
        let s = schur(a, true)?;
        let t = &s.t;
        let lambda = t.diag();
        let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
        let small = f64::EPSILON * tnorm;
        let mut y = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let mut col = vec![ZERO; n];
            col[k] = C64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let mut acc = ZERO;
                for l in j + 1..=k {
                    acc += t[(j, l)] * col[l];
                }
                let mut den = t[(j, j)] - lambda[k];
                if den.norm() < small {
                    // Repeated eigenvalue: decoupled blocks keep the Schur vector,
                    // genuine coupling is perturbed and surfaces as ill-conditioning.
                    if acc.norm() <= 100.0 * small {
                        col[j] = ZERO;
                        continue;
                    }
                    den = C64::new(small, 0.0);
                }
                col[j] = -acc / den;
            }
            y.set_col(k, &col);
        }
        let v_raw = s.z.matmul(&y);
        let order = sort_spectrum(&lambda);
        let mut right = DenseMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (k, &i) in order.iter().enumerate() {
            let mut c = v_raw.col(i);
            let nrm = vec_norm(&c);
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(LinalgError::DefectiveMatrix {
                    condition: f64::INFINITY,
                    limit: DEFECTIVE_CONDITION,
                });
            }
            for x in &mut c {
                *x /= nrm;
            }
            right.set_col(k, &c);
            values.push(lambda[i]);
        }
        let inv = match Lu::new(&right) {
            Ok(lu) => lu.inverse(),
            Err(_) => {
                return Err(LinalgError::DefectiveMatrix {
                    condition: f64::INFINITY,
                    limit: DEFECTIVE_CONDITION,
                })
            }
        };
        let condition = right.frobenius_norm() * inv.frobenius_norm();
        if !condition.is_finite() || condition > DEFECTIVE_CONDITION {
            return Err(LinalgError::DefectiveMatrix {
                condition,
                limit: DEFECTIVE_CONDITION,
            });
        }
        Ok(Self {
            values,
            right,
            dual: inv.adjoint(),
            condition,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn right_vec(&self, k: usize) -> Vec<C64> {
        self.right.col(k)
    }

    pub fn dual_vec(&self, k: usize) -> Vec<C64> {
        self.dual.col(k)
    }

    /// `w_j^H B v_k` for all `j, k`.
    pub fn coupling(&self, b: &DenseMatrix) -> DenseMatrix {
        self.dual.adjoint().matmul(b).matmul(&self.right)
    }

    /// `max_k ||v_k|| ||w_k||`.
    pub fn chi(&self) -> f64 {
        (0..self.dim())
            .map(|k| vec_norm(&self.right.col(k)) * vec_norm(&self.dual.col(k)))
            .fold(0.0, f64::max)
    }

    pub fn gap(&self) -> f64 {
        eigengap(&self.values)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.right
            .matmul(&DenseMatrix::from_diag(&self.values))
            .matmul(&self.dual.adjoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_like_matrix_has_sixth_roots() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 1.0, -1.0, 0.0]).unwrap();
        let es = EigenSystem::new(&a).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!((es.values[0] - C64::new(0.5, -r3)).norm() < 1e-14);
        assert!((es.values[1] - C64::new(0.5, r3)).norm() < 1e-14);
        assert!(es.reconstruct().approx_eq(&a, 1e-14));
        let wv = es.dual.adjoint().matmul(&es.right);
        assert!(wv.approx_eq(&DenseMatrix::identity(2), 1e-14));
    }

    #[test]
    fn jordan_block_is_defective() {
        let a = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            EigenSystem::new(&a),
            Err(LinalgError::DefectiveMatrix { .. })
        ));
        assert_eq!(spectral_abscissa_min(&a).unwrap(), 0.0);
    }

    #[test]
    fn greedy_matching_prefers_closest_pairs() {
        let t = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let c = [C64::new(1.1, 0.0), C64::new(0.05, 0.0)];
        assert_eq!(match_nearest(&t, &c), vec![1, 0]);
    }

    #[test]
    fn upper_triangular_input_keeps_diagonal() {
        let a = DenseMatrix::from_real(3, 3, &[3.0, 1.0, 2.0, 0.0, -1.0, 5.0, 0.0, 0.0, 2.0]).unwrap();
        let ev = eigenvalues(&a).unwrap();
        let re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        assert!((re[0] + 1.0).abs() < 1e-14 && (re[1] - 2.0).abs() < 1e-14 && (re[2] - 3.0).abs() < 1e-14);
    }
}
