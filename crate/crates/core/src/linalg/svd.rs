use super::matrix::{dot, vec_norm, DenseMatrix, C64, ZERO};
use super::LinalgError;

/// Full singular value decomposition `A = U diag(sigma) V^H`.
///
/// `u` is `m x m`, `v` is `n x n`, `sigma` has `min(m, n)` entries in
/// descending order. Real input yields real `u` and `v`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// Numerical rank with threshold `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    /// Singular value paired with left vector `j` (zero past `min(m, n)`).
    pub fn sigma_left(&self, j: usize) -> f64 {
        self.sigma.get(j).copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut s = DenseMatrix::zeros(m, n);
        for (i, &x) in self.sigma.iter().enumerate() {
            s[(i, i)] = C64::new(x, 0.0);
        }
        self.u.matmul(&s).matmul(&self.v.adjoint())
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD of a tall (or square) matrix. Returns thin factors.
fn jacobi_tall(a: &DenseMatrix) -> Result<(Vec<Vec<C64>>, Vec<f64>, DenseMatrix), LinalgError> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v = DenseMatrix::identity(n);
    let eps = f64::EPSILON;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // u_p' = c u_p - s e^{-i phi} u_q ; u_q' = s e^{i phi} u_p + c u_q
                let sp = phase.conj() * s;
                let sq = phase * s;
                for i in 0..m {
                    let up = cols[p][i];
                    let uq = cols[q][i];
                    cols[p][i] = up * c - uq * sp;
                    cols[q][i] = up * sq + uq * c;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * c - vq * sp;
                    v[(i, q)] = vp * sq + vq * c;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            routine: "jacobi svd",
            iterations: MAX_SWEEPS,
        });
    }
    let sigma: Vec<f64> = cols.iter().map(|c| vec_norm(c)).collect();
    Ok((cols, sigma, v))
}

/// Extends orthonormal columns to an orthonormal basis of `C^dim`.
pub fn orthonormal_completion(basis: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = basis.to_vec();
    while out.len() < dim {
        // Pick the coordinate axis with the largest residual; it is at least 1/dim.
        let mut best: Option<(f64, Vec<C64>)> = None;
        for i in 0..dim {
            let mut e = vec![ZERO; dim];
            e[i] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &out {
                    let c = dot(b, &e);
                    for (x, y) in e.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let nrm = vec_norm(&e);
            if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
                best = Some((nrm, e));
            }
        }
        let (nrm, mut e) = best.expect("dim > 0");
        for x in &mut e {
            *x /= nrm;
        }
        out.push(e);
    }
    out
}

pub fn svd(a: &DenseMatrix) -> Result<Svd, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (cols, sigma, v) = jacobi_tall(a)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let floor = smax * f64::EPSILON * (m.max(n) as f64);
    let mut left: Vec<Vec<C64>> = Vec::new();
    let mut sig_sorted = Vec::with_capacity(n);
    let mut v_sorted = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        sig_sorted.push(sigma[j]);
        v_sorted.set_col(k, &v.col(j));
        if sigma[j] > floor && sigma[j] > 0.0 {
            left.push(cols[j].iter().map(|z| z / sigma[j]).collect());
        }
    }
    let u_cols = orthonormal_completion(&left, m);
    Ok(Svd {
        u: DenseMatrix::from_columns(&u_cols),
        sigma: sig_sorted,
        v: v_sorted,
    })
}

/// Spectral (operator 2-) norm.
pub fn op_norm(a: &DenseMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    match svd(a) {
        Ok(s) => s.sigma[0],
        Err(_) => f64::NAN,
    }
}
