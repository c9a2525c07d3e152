use super::matrix::{DenseMatrix, C64, ONE, ZERO};
use super::LinalgError;

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.require_square()?;
        if !a.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            // Relative pivot floor keeps rank-deficient input from yielding garbage.
            if pmax <= scale * 1e-14 * n as f64 {
                return Err(LinalgError::Singular { col: k, pivot: pmax });
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / piv;
                lu[(i, k)] = l;
                if l != ZERO {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.rows();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_col(j, &self.solve_vec(&b.col(j)));
        }
        out
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.lu.rows()))
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for i in 0..self.lu.rows() {
            d *= self.lu[(i, i)];
        }
        d
    }
}

pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Ok(Lu::new(a)?.inverse())
}

pub fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Ok(Lu::new(a)?.solve(b))
}

/// Householder vector `v` (with `v[0]` real) and `beta` such that
/// `(I - beta v v^H) x = alpha e1`. Returns `alpha`.
pub(crate) fn householder(x: &[C64]) -> (Vec<C64>, f64, C64) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![ZERO; x.len()], 0.0, ZERO);
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if vnorm2 == 0.0 {
        return (vec![ZERO; x.len()], 0.0, x0);
    }
    (v, 2.0 / vnorm2, alpha)
}

/// Householder QR `A = Q R` of a square or tall matrix. `Q` is square.
pub fn householder_qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = DenseMatrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let x: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        let (v, beta, _) = householder(&x);
        if beta == 0.0 {
            continue;
        }
        // R <- H R on rows k..m
        for j in k..n {
            let s: C64 = (k..m).map(|i| v[i - k].conj() * r[(i, j)]).sum::<C64>() * beta;
            for i in k..m {
                r[(i, j)] -= v[i - k] * s;
            }
        }
        // Q <- Q H on columns k..m
        for i in 0..m {
            let s: C64 = (k..m).map(|j| q[(i, j)] * v[j - k]).sum::<C64>() * beta;
            for j in k..m {
                q[(i, j)] -= s * v[j - k].conj();
            }
        }
        for i in k + 1..m {
            r[(i, k)] = ZERO;
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_inverse_and_determinant() {
        let a = DenseMatrix::from_real(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]).unwrap();
        let lu = Lu::new(&a).unwrap();
        assert!((lu.det() - C64::new(18.0, 0.0)).norm() < 1e-12);
        let inv = lu.inverse();
        assert!(a.matmul(&inv).approx_eq(&DenseMatrix::identity(3), 1e-14));
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(Lu::new(&a), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn qr_reconstructs_with_unitary_q() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| C64::new((i * 3 + j) as f64 * 0.7 - 2.0, (i as f64 - j as f64) * 0.3));
        let (q, r) = householder_qr(&a);
        assert!(q.matmul(&r).approx_eq(&a, 1e-13));
        assert!(q.adjoint().matmul(&q).approx_eq(&DenseMatrix::identity(4), 1e-14));
        for i in 0..4 {
            for j in 0..i.min(3) {
                assert_eq!(r[(i, j)], ZERO);
            }
        }
    }
}
