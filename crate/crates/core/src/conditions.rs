//! Equivalent tests for `min Re lambda(M) > 0` with `M = S + A`,
//! `S = Diag(Q, R)` positive semidefinite and `A = [[0, P], [-P^T, 0]]`.
//!
//! Four conditions are evaluated independently:
//!
//! - (i) the spectral abscissa `mu = min Re lambda(M)` exceeds `tol`;
//! - (ii) no eigenvector of `A` lies in `Ker S`;
//! - (iii) every left-singular vector `x` of `P` has `Qx != 0` or `R P^T x != 0`;
//! - (iv) every right-singular vector `y` of `P` has `Q P y != 0` or `R y != 0`.
//!
//! A failing (iii) at `x` with singular value `s` yields the eigenpair
//! `M (i s x, P^T x) = -i s (i s x, P^T x)`, and symmetrically for (iv).
//! The equivalence assumes simple singular values; otherwise the tests run on
//! the computed basis and the report is flagged as degenerate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::{assemble_jacobian, GameError};
use crate::linalg::{op_norm, spectral_abscissa_min, svd, vec_norm, DenseMatrix, LinalgError, C64, ZERO};
use crate::rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConditionError {
    #[error("Q and R must be real symmetric positive semidefinite: {0}")]
    NotPsd(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Relative default tolerance, scaled by `||M||`.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Certificate that a condition fails: `M z = lambda z` with `Re lambda = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: String,
    pub eigenvalue: C64,
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub tol: f64,
    pub mu_tilde: f64,
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_iii: bool,
    pub cond_iv: bool,
    /// `min_z ||S z||` over the unit eigenbasis of `A`.
    pub margin_ii: f64,
    /// `min_x max(||Q x||, ||R P^T x|| / ||P^T x||)` over left-singular vectors.
    pub margin_iii: f64,
    /// `min_y max(||Q P y|| / ||P y||, ||R y||)` over right-singular vectors.
    pub margin_iv: f64,
    /// Repeated eigenvalues of `A` within `tol`.
    pub degenerate_spectrum: bool,
    pub witnesses: Vec<Witness>,
}

impl ConditionReport {
    pub fn all_agree(&self) -> bool {
        self.cond_i == self.cond_ii && self.cond_ii == self.cond_iii && self.cond_iii == self.cond_iv
    }
}

fn check_psd(name: &str, m: &DenseMatrix) -> Result<(), ConditionError> {
    if !m.is_square() || !m.is_real(0.0) {
        return Err(ConditionError::NotPsd(format!("{name} is not real square")));
    }
    let scale = m.max_abs().max(1.0);
    if (m - &m.transpose()).max_abs() > 1e-12 * scale {
        return Err(ConditionError::NotPsd(format!("{name} is not symmetric")));
    }
    let ev = crate::linalg::eigenvalues(m)?;
    let min = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(ConditionError::NotPsd(format!("{name} has eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn apply(m: &DenseMatrix, v: &[C64]) -> Vec<C64> {
    m.mul_vec(v)
}

fn concat(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut z = a.to_vec();
    z.extend_from_slice(b);
    z
}

fn scaled(v: &[C64], s: C64) -> Vec<C64> {
    v.iter().map(|x| x * s).collect()
}

/// Evaluates (i)-(iv). `tol = None` uses `1e-8 ||M||`.
pub fn check_conditions(
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
    tol: Option<f64>,
) -> Result<ConditionReport, ConditionError> {
    check_psd("Q", q)?;
    check_psd("R", r)?;
    let m = assemble_jacobian(q, r, p)?;
    let (n, mm) = p.shape();
    let tol = tol.unwrap_or_else(|| DEFAULT_REL_TOL * op_norm(&m));
    let mu = spectral_abscissa_min(&m)?;
    let sv = svd(p)?;
    let sigma_l = |j: usize| sv.sigma_left(j);
    let sigma_r = |j: usize| sv.sigma.get(j).copied().unwrap_or(0.0);
    let i = C64::new(0.0, 1.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pt = p.transpose();
    let mut witnesses = Vec::new();

    // A's spectrum as imaginary parts, for the degeneracy flag.
    let rank = sv.sigma.iter().filter(|&&s| s > tol).count();
    let mut imag: Vec<f64> = Vec::new();
    for &s in sv.sigma.iter().take(rank) {
        imag.push(s);
        imag.push(-s);
    }
    imag.extend(std::iter::repeat_n(0.0, n + mm - 2 * rank));
    imag.sort_by(f64::total_cmp);
    let degenerate = imag.windows(2).any(|w| w[1] - w[0] <= tol);

    // (ii): eigenbasis of A assembled from the SVD.
    let zero_n = vec![ZERO; n];
    let zero_m = vec![ZERO; mm];
    let mut margin_ii = f64::INFINITY;
    let mut eig_a: Vec<(C64, Vec<C64>)> = Vec::new();
    for j in 0..rank {
        let u = sv.u.col(j);
        let v = sv.v.col(j);
        for sgn in [1.0, -1.0] {
            let z = concat(&scaled(&u, -i * sgn * h), &scaled(&v, C64::new(h, 0.0)));
            eig_a.push((i * sgn * sv.sigma[j], z));
        }
    }
    for j in rank..n {
        eig_a.push((ZERO, concat(&sv.u.col(j), &zero_m)));
    }
    for j in rank..mm {
        eig_a.push((ZERO, concat(&zero_n, &sv.v.col(j))));
    }
    let s_mat = DenseMatrix::from_blocks(q, &DenseMatrix::zeros(n, mm), &DenseMatrix::zeros(mm, n), r)?;
    let mut cond_ii = true;
    for (lam, z) in &eig_a {
        let sz = vec_norm(&apply(&s_mat, z));
        margin_ii = margin_ii.min(sz);
        if sz <= tol {
            if cond_ii {
                witnesses.push(Witness {
                    condition: "ii".into(),
                    eigenvalue: *lam,
                    vector: z.clone(),
                });
            }
            cond_ii = false;
        }
    }

    // (iii): left-singular vectors.
    let mut margin_iii = f64::INFINITY;
    let mut cond_iii = true;
    for j in 0..n {
        let x = sv.u.col(j);
        let s = sigma_l(j);
        let ptx = pt.mul_vec(&x);
        let qx = vec_norm(&apply(q, &x));
        let nptx = vec_norm(&ptx);
        let rptx = if nptx > tol { vec_norm(&apply(r, &ptx)) / nptx } else { 0.0 };
        let stat = qx.max(rptx);
        margin_iii = margin_iii.min(stat);
        if stat <= tol {
            if cond_iii {
                let z = if s > tol {
                    concat(&scaled(&x, i * s), &ptx)
                } else {
                    concat(&x, &zero_m)
                };
                witnesses.push(Witness {
                    condition: "iii".into(),
                    eigenvalue: -i * if s > tol { s } else { 0.0 },
                    vector: z,
                });
            }
            cond_iii = false;
        }
    }

    // (iv): right-singular vectors.
    let mut margin_iv = f64::INFINITY;
    let mut cond_iv = true;
    for j in 0..mm {
        let y = sv.v.col(j);
        let s = sigma_r(j);
        let py = p.mul_vec(&y);
        let npy = vec_norm(&py);
        let qpy = if npy > tol { vec_norm(&apply(q, &py)) / npy } else { 0.0 };
        let ry = vec_norm(&apply(r, &y));
        let stat = qpy.max(ry);
        margin_iv = margin_iv.min(stat);
        if stat <= tol {
            if cond_iv {
                let z = if s > tol {
                    concat(&py, &scaled(&y, i * s))
                } else {
                    concat(&zero_n, &y)
                };
                witnesses.push(Witness {
                    condition: "iv".into(),
                    eigenvalue: i * if s > tol { s } else { 0.0 },
                    vector: z,
                });
            }
            cond_iv = false;
        }
    }

    Ok(ConditionReport {
        tol,
        mu_tilde: mu,
        cond_i: mu > tol,
        cond_ii,
        cond_iii,
        cond_iv,
        margin_ii,
        margin_iii,
        margin_iv,
        degenerate_spectrum: degenerate,
        witnesses,
    })
}

/// Fraction of Gaussian couplings `P` for which `mu(S + A) > tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityResult {
    pub trials: usize,
    pub positive: usize,
    pub fraction: f64,
}

/// Draws `P` with i.i.d. normal entries; trial `t` uses stream `t` of `seed`.
pub fn genericity_probe(
    q: &DenseMatrix,
    r: &DenseMatrix,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<GenericityResult, ConditionError> {
    check_psd("Q", q)?;
    check_psd("R", r)?;
    let (n, m) = (q.rows(), r.rows());
    let hits: Result<Vec<bool>, ConditionError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let p = rng::gaussian_matrix(&mut rng::stream(seed, t as u64), n, m);
            let mm = assemble_jacobian(q, r, &p)?;
            Ok(spectral_abscissa_min(&mm)? > tol)
        })
        .collect();
    let positive = hits?.into_iter().filter(|&b| b).count();
    Ok(GenericityResult {
        trials,
        positive,
        fraction: if trials == 0 { 0.0 } else { positive as f64 / trials as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_real_diag(v)
    }

    #[test]
    fn zero_symmetric_part_fails_everything() {
        let p = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        let rep = check_conditions(&diag(&[0.0, 0.0]), &diag(&[0.0, 0.0]), &p, None).unwrap();
        assert!(!rep.cond_i && !rep.cond_ii && !rep.cond_iii && !rep.cond_iv);
        assert!(!rep.degenerate_spectrum);
    }

    #[test]
    fn single_regularised_direction_with_diagonal_coupling() {
        // Q = diag(1, 0), P = diag(1, 2): (u_2, v_2) = (e2, e2) sees neither Q nor R.
        let p = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        let rep = check_conditions(&diag(&[1.0, 0.0]), &diag(&[0.0, 0.0]), &p, None).unwrap();
        assert!(rep.all_agree());
        assert!(!rep.cond_i);
        for w in &rep.witnesses {
            let m = assemble_jacobian(&diag(&[1.0, 0.0]), &diag(&[0.0, 0.0]), &p).unwrap();
            let mz = m.mul_vec(&w.vector);
            let res: f64 = mz.iter().zip(&w.vector).map(|(a, b)| (a - w.eigenvalue * b).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-12, "witness {} residual {res}", w.condition);
        }
    }

    #[test]
    fn rotated_coupling_satisfies_all_conditions() {
        let c = 0.6f64;
        let s = 0.8f64;
        let p = DenseMatrix::from_real(2, 2, &[c, -2.0 * s, s, 2.0 * c]).unwrap();
        let rep = check_conditions(&diag(&[1.0, 0.0]), &diag(&[0.0, 0.0]), &p, None).unwrap();
        assert!(rep.cond_i && rep.cond_ii && rep.cond_iii && rep.cond_iv);
        assert!(rep.witnesses.is_empty());
    }

    #[test]
    fn identity_coupling_is_flagged_degenerate() {
        let p = DenseMatrix::identity(2);
        let rep = check_conditions(&diag(&[1.0, 1.0]), &diag(&[0.0, 0.0]), &p, None).unwrap();
        assert!(rep.degenerate_spectrum);
        assert!(rep.cond_i);
    }

    #[test]
    fn genericity_of_nonzero_s_and_zero_s() {
        let q = diag(&[1.0, 0.0, 0.0]);
        let r = diag(&[0.0, 0.0, 0.0]);
        let g = genericity_probe(&q, &r, 200, 11, 1e-10).unwrap();
        assert_eq!(g.fraction, 1.0);
        let z = genericity_probe(&diag(&[0.0; 3]), &r, 50, 11, 1e-10).unwrap();
        assert_eq!(z.fraction, 0.0);
    }

    #[test]
    fn rejects_indefinite_blocks() {
        let p = DenseMatrix::identity(1);
        assert!(matches!(
            check_conditions(&diag(&[-1.0]), &diag(&[0.0]), &p, None),
            Err(ConditionError::NotPsd(_))
        ));
    }
}
