//! Mirror flows under equality constraints.
//!
//! A link `phi` with diagonal Hessian `Phi_z` and constraints `A_c z = b`
//! gives the flow `dz/dt = -Phi_z^{-1} P_z g(z)` with the oblique projector
//! `P_z = I - A_c^T [A_c Phi^{-1} A_c^T]^{-1} A_c Phi^{-1}`. At a stationary
//! point its Jacobian is `M_eff = Phi^{-1} P M P^T`, similar to the whitened
//! `tM = Phi^{-1/2} P M P^T Phi^{-1/2}`.
//!
//! Entropy on a simplex has `Phi = Diag(1/a)`, so `Phi^{-1/2} P Phi^{1/2} =
//! I - sqrt(a) sqrt(a)^T = Pi^T Pi` and the reduced whitened Jacobians of
//! mirror prox and of the conic particle flow are [`m_mp`] and [`m_gamma`].

use serde::{Deserialize, Serialize};

use crate::game::{gradient_field, jacobian, Domain, GameModel, Payoff2d};
use crate::linalg::{inverse, svd, DenseMatrix, LinalgError, C64};

/// Smallest admissible simplex coordinate.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Projected-gradient tolerance for stationarity.
pub const STATIONARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MirrorError {
    #[error("A_c Phi^-1 A_c^T is singular")]
    RankDeficientConstraints,
    #[error("coordinate {index} = {value:.3e} is at the simplex boundary")]
    DomainBoundary { index: usize, value: f64 },
    #[error("weight {index} = {value:.3e} is not interior")]
    BoundaryWeights { index: usize, value: f64 },
    #[error("projected gradient {residual:.3e} exceeds {tol:.0e}")]
    NotStationary { residual: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Entropy on masked coordinates, Euclidean elsewhere, with linear constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub entropy: Vec<bool>,
    /// `k x d`.
    pub constraints: DenseMatrix,
    pub offset: Vec<f64>,
}

impl LinkGeometry {
    pub fn euclidean(d: usize) -> Self {
        Self {
            entropy: vec![false; d],
            constraints: DenseMatrix::zeros(0, d),
            offset: Vec::new(),
        }
    }

    /// Entropy link on each listed block `[start, start + len)`, each a simplex.
    pub fn with_simplices(d: usize, blocks: &[(usize, usize)]) -> Self {
        let blocks: Vec<(usize, usize)> = blocks.iter().copied().filter(|b| b.1 > 0).collect();
        let mut entropy = vec![false; d];
        let mut c = DenseMatrix::zeros(blocks.len(), d);
        for (row, &(start, len)) in blocks.iter().enumerate() {
            for i in start..start + len {
                entropy[i] = true;
                c[(row, i)] = C64::new(1.0, 0.0);
            }
        }
        Self {
            entropy,
            constraints: c,
            offset: vec![1.0; blocks.len()],
        }
    }

    /// `x` in the `n`-simplex and `y` in the `m`-simplex.
    pub fn simplex(n: usize, m: usize) -> Self {
        Self::with_simplices(n + m, &[(0, n), (n, m)])
    }

    /// Layout `(a, x, b, y)` with simplex weights and Euclidean positions.
    pub fn particle(n: usize, m: usize) -> Self {
        Self::with_simplices(2 * n + 2 * m, &[(0, n), (2 * n, m)])
    }

    pub fn for_domain(domain: Domain, dims: (usize, usize)) -> Self {
        match domain {
            Domain::Euclidean => Self::euclidean(dims.0 + dims.1),
            Domain::Simplex => Self::simplex(dims.0, dims.1),
            Domain::Particle {
                n_particles,
                m_particles,
            } => Self::particle(n_particles, m_particles),
        }
    }

    pub fn dim(&self) -> usize {
        self.entropy.len()
    }

    /// Diagonal of `Phi_z`.
    pub fn hessian_diag(&self, z: &[f64]) -> Vec<f64> {
        self.entropy
            .iter()
            .zip(z)
            .map(|(&e, &v)| if e { 1.0 / v } else { 1.0 })
            .collect()
    }

    pub fn check_interior(&self, z: &[f64]) -> Result<(), MirrorError> {
        for (index, (&e, &value)) in self.entropy.iter().zip(z).enumerate() {
            if e && !(value >= BOUNDARY_TOL) {
                return Err(MirrorError::DomainBoundary { index, value });
            }
        }
        Ok(())
    }

    /// `A_c z - b`.
    pub fn constraint_residual(&self, z: &[f64]) -> Vec<f64> {
        let cz = self.constraints.mul_real_vec(z);
        cz.iter().zip(&self.offset).map(|(c, b)| c.re - b).collect()
    }

    pub fn projector_at(&self, z: &[f64]) -> Result<DenseMatrix, MirrorError> {
        projector(&self.hessian_diag(z), &self.constraints)
    }
}

/// `P = I - A_c^T [A_c Phi^{-1} A_c^T]^{-1} A_c Phi^{-1}` for diagonal `Phi`.
pub fn projector(phi: &[f64], a_c: &DenseMatrix) -> Result<DenseMatrix, MirrorError> {
    let d = phi.len();
    if a_c.cols() != d {
        return Err(MirrorError::Dimension(format!("A_c has {} columns, Phi has {d}", a_c.cols())));
    }
    let id = DenseMatrix::identity(d);
    if a_c.rows() == 0 {
        return Ok(id);
    }
    let phi_inv = DenseMatrix::from_real_diag(&phi.iter().map(|p| 1.0 / p).collect::<Vec<_>>());
    let a_phi = a_c.matmul(&phi_inv);
    let gram = a_phi.matmul(&a_c.transpose());
    let gi = inverse(&gram).map_err(|e| match e {
        LinalgError::Singular { .. } => MirrorError::RankDeficientConstraints,
        other => other.into(),
    })?;
    Ok(&id - &a_c.transpose().matmul(&gi).matmul(&a_phi))
}

/// `Phi_z^{-1} P_z g(z)`.
pub fn g_eff(game: &dyn GameModel, link: &LinkGeometry, z: &[f64]) -> Result<Vec<f64>, MirrorError> {
    link.check_interior(z)?;
    let g = gradient_field(game, z);
    project_field(link, z, &g)
}

/// `Phi_z^{-1} P_z v` for an arbitrary ambient vector `v`.
pub fn project_field(link: &LinkGeometry, z: &[f64], v: &[f64]) -> Result<Vec<f64>, MirrorError> {
    let phi = link.hessian_diag(z);
    let p = projector(&phi, &link.constraints)?;
    let pv = p.mul_real_vec(v);
    Ok(pv.iter().zip(&phi).map(|(x, f)| x.re / f).collect())
}

/// Linearisation of the mirror flow at a stationary point.
#[derive(Debug, Clone)]
pub struct EffectiveJacobian {
    /// `Phi^{-1} P M P^T`.
    pub m_eff: DenseMatrix,
    /// `Phi^{-1/2} P M P^T Phi^{-1/2}`.
    pub t_m: DenseMatrix,
    /// Orthonormal basis of `Ker A_c`, `d x (d - k)`.
    pub kernel: DenseMatrix,
    /// `B^T M_eff B` for the kernel basis `B`; `M_eff` maps into `Ker A_c`.
    pub reduced: DenseMatrix,
    /// `Phi^{-1/2} P Phi^{1/2}`.
    pub r_proj: DenseMatrix,
}

/// Orthonormal basis of the null space of a `k x d` matrix.
pub fn kernel_basis(a_c: &DenseMatrix) -> Result<DenseMatrix, MirrorError> {
    let d = a_c.cols();
    if a_c.rows() == 0 {
        return Ok(DenseMatrix::identity(d));
    }
    let s = svd(a_c)?;
    let rank = s.rank(1e-12);
    let cols: Vec<Vec<C64>> = (rank..d).map(|j| s.v.col(j)).collect();
    if cols.is_empty() {
        return Ok(DenseMatrix::zeros(d, 0));
    }
    Ok(DenseMatrix::from_columns(&cols))
}

pub fn effective_jacobian(m: &DenseMatrix, phi: &[f64], a_c: &DenseMatrix) -> Result<EffectiveJacobian, MirrorError> {
    let d = phi.len();
    if m.shape() != (d, d) {
        return Err(MirrorError::Dimension(format!("M is {:?}, Phi has {d}", m.shape())));
    }
    let p = projector(phi, a_c)?;
    let pmp = p.matmul(m).matmul(&p.transpose());
    let inv = DenseMatrix::from_real_diag(&phi.iter().map(|f| 1.0 / f).collect::<Vec<_>>());
    let inv_half = DenseMatrix::from_real_diag(&phi.iter().map(|f| 1.0 / f.sqrt()).collect::<Vec<_>>());
    let half = DenseMatrix::from_real_diag(&phi.iter().map(|f| f.sqrt()).collect::<Vec<_>>());
    let m_eff = inv.matmul(&pmp);
    let t_m = inv_half.matmul(&pmp).matmul(&inv_half);
    let kernel = kernel_basis(a_c)?;
    let reduced = kernel.adjoint().matmul(&m_eff).matmul(&kernel);
    let r_proj = inv_half.matmul(&p).matmul(&half);
    Ok(EffectiveJacobian {
        m_eff,
        t_m,
        kernel,
        reduced,
        r_proj,
    })
}

/// [`effective_jacobian`] at `z`, gated on `||g_eff(z)|| < 1e-8`.
pub fn effective_jacobian_at(
    game: &dyn GameModel,
    link: &LinkGeometry,
    z: &[f64],
) -> Result<EffectiveJacobian, MirrorError> {
    let ge = g_eff(game, link, z)?;
    let residual = ge.iter().map(|v| v * v).sum::<f64>().sqrt();
    if residual >= STATIONARY_TOL {
        return Err(MirrorError::NotStationary {
            residual,
            tol: STATIONARY_TOL,
        });
    }
    effective_jacobian(&jacobian(game, z), &link.hessian_diag(z), &link.constraints)
}

/// `(N - 1) x N` matrix `Pi` with `Pi Pi^T = I` and `Pi^T Pi = I - s s^T`.
///
/// Rows two onwards of the Householder reflection exchanging `e_1` and `-s`.
pub fn orthonormal_complement(s: &[f64]) -> DenseMatrix {
    let n = s.len();
    let mut w = s.to_vec();
    if s[0] >= 0.0 {
        w[0] += 1.0;
    } else {
        for v in &mut w {
            *v = -*v;
        }
        w[0] += 1.0;
    }
    let ww: f64 = w.iter().map(|v| v * v).sum();
    DenseMatrix::from_fn(n - 1, n, |i, j| {
        let r = i + 1;
        let delta = if r == j { 1.0 } else { 0.0 };
        C64::new(delta - 2.0 * w[r] * w[j] / ww, 0.0)
    })
}

fn interior_sqrt(w: &[f64]) -> Result<Vec<f64>, MirrorError> {
    w.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value >= BOUNDARY_TOL {
                Ok(value.sqrt())
            } else {
                Err(MirrorError::BoundaryWeights { index, value })
            }
        })
        .collect()
}

/// `Pi_a D_a X D_b Pi_b^T` style products with optional projections.
fn sandwich(left: Option<&DenseMatrix>, da: &[f64], x: &DenseMatrix, db: &[f64], right: Option<&DenseMatrix>) -> DenseMatrix {
    let mut y = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * (da[i] * db[j]));
    if let Some(l) = left {
        y = l.matmul(&y);
    }
    if let Some(r) = right {
        y = y.matmul(&r.transpose());
    }
    y
}

/// `[[0, B], [-B^T, 0]]` with `B = Pi_a D_a P D_b Pi_b^T` and `D = Diag(sqrt w)`.
pub fn m_mp(p: &DenseMatrix, a_star: &[f64], b_star: &[f64]) -> Result<DenseMatrix, MirrorError> {
    let (n, m) = p.shape();
    if a_star.len() != n || b_star.len() != m {
        return Err(MirrorError::Dimension("weights do not match P".into()));
    }
    let da = interior_sqrt(a_star)?;
    let db = interior_sqrt(b_star)?;
    let pa = orthonormal_complement(&da);
    let pb = orthonormal_complement(&db);
    let blk = sandwich(Some(&pa), &da, p, &db, Some(&pb));
    let z1 = DenseMatrix::zeros(n - 1, n - 1);
    let z2 = DenseMatrix::zeros(m - 1, m - 1);
    Ok(DenseMatrix::from_blocks(&z1, &blk, &(-&blk.transpose()), &z2)?)
}

/// Pair matrices `f, f_x, f_y, f_xx, f_xy, f_yy` at `(x_I, y_J)`.
pub struct PayoffMatrices {
    pub f: DenseMatrix,
    pub fx: DenseMatrix,
    pub fy: DenseMatrix,
    pub fxx: DenseMatrix,
    pub fxy: DenseMatrix,
    pub fyy: DenseMatrix,
}

pub fn payoff_matrices<F: Payoff2d + ?Sized>(payoff: &F, x: &[f64], y: &[f64]) -> PayoffMatrices {
    let (n, m) = (x.len(), y.len());
    let mut out = PayoffMatrices {
        f: DenseMatrix::zeros(n, m),
        fx: DenseMatrix::zeros(n, m),
        fy: DenseMatrix::zeros(n, m),
        fxx: DenseMatrix::zeros(n, m),
        fxy: DenseMatrix::zeros(n, m),
        fyy: DenseMatrix::zeros(n, m),
    };
    for i in 0..n {
        for j in 0..m {
            let d = payoff.eval(x[i], y[j]);
            out.f[(i, j)] = C64::new(d.f, 0.0);
            out.fx[(i, j)] = C64::new(d.fx, 0.0);
            out.fy[(i, j)] = C64::new(d.fy, 0.0);
            out.fxx[(i, j)] = C64::new(d.fxx, 0.0);
            out.fxy[(i, j)] = C64::new(d.fxy, 0.0);
            out.fyy[(i, j)] = C64::new(d.fyy, 0.0);
        }
    }
    out
}

/// Stationarity residual of the lifted game at `(a, x, b, y)`:
/// the norm of `[(I - 1 a^T) grad_a F; grad_x F; (I - 1 b^T) grad_b F; grad_y F]`.
pub fn stationarity_residual<F: Payoff2d + ?Sized>(payoff: &F, a: &[f64], x: &[f64], b: &[f64], y: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut ga = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gb = vec![0.0; m];
    let mut gy = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            let d = payoff.eval(x[i], y[j]);
            ga[i] += b[j] * d.f;
            gx[i] += a[i] * b[j] * d.fx;
            gb[j] += a[i] * d.f;
            gy[j] += a[i] * b[j] * d.fy;
        }
    }
    let va: f64 = a.iter().zip(&ga).map(|(p, g)| p * g).sum();
    let vb: f64 = b.iter().zip(&gb).map(|(p, g)| p * g).sum();
    let mut s = 0.0;
    s += ga.iter().map(|g| (g - va).powi(2)).sum::<f64>();
    s += gb.iter().map(|g| (g - vb).powi(2)).sum::<f64>();
    s += gx.iter().chain(&gy).map(|g| g * g).sum::<f64>();
    s.sqrt()
}

/// Whitened reduced Jacobian of the conic particle flow, ordered `(a', x, b', y)`
/// with block sizes `N - 1, N, M - 1, M`.
///
/// ```text
/// [ 0                      0                     W                        sqrt(g) Pi_a D_a f_y D_b ]
/// [ 0                      g Diag(f_xx b)        sqrt(g) D_a f_x D_b Pi_b^T   g D_a f_xy D_b      ]
/// [ -W^T                   -(.)^T                0                        0                        ]
/// [ -(.)^T                 -(.)^T                0                        -g Diag(f_yy^T a)        ]
/// ```
///
/// with `W = Pi_a D_a f D_b Pi_b^T`.
pub fn m_gamma<F: Payoff2d + ?Sized>(
    payoff: &F,
    a: &[f64],
    x: &[f64],
    b: &[f64],
    y: &[f64],
    gamma: f64,
) -> Result<DenseMatrix, MirrorError> {
    let residual = stationarity_residual(payoff, a, x, b, y);
    if !(residual < STATIONARY_TOL) {
        return Err(MirrorError::NotStationary {
            residual,
            tol: STATIONARY_TOL,
        });
    }
    m_gamma_unchecked(payoff, a, x, b, y, gamma)
}

/// [`m_gamma`] without the stationarity gate.
pub fn m_gamma_unchecked<F: Payoff2d + ?Sized>(
    payoff: &F,
    a: &[f64],
    x: &[f64],
    b: &[f64],
    y: &[f64],
    gamma: f64,
) -> Result<DenseMatrix, MirrorError> {
    let (n, m) = (a.len(), b.len());
    if x.len() != n || y.len() != m {
        return Err(MirrorError::Dimension("weights and positions differ in count".into()));
    }
    let da = interior_sqrt(a)?;
    let db = interior_sqrt(b)?;
    let pa = orthonormal_complement(&da);
    let pb = orthonormal_complement(&db);
    let pm = payoff_matrices(payoff, x, y);
    let sg = gamma.sqrt();

    let w = sandwich(Some(&pa), &da, &pm.f, &db, Some(&pb));
    let ay = sandwich(Some(&pa), &da, &pm.fy, &db, None).scale_real(sg);
    let xb = sandwich(None, &da, &pm.fx, &db, Some(&pb)).scale_real(sg);
    let xy = sandwich(None, &da, &pm.fxy, &db, None).scale_real(gamma);
    let fxx_b = pm.fxx.mul_real_vec(b);
    let fyy_a = pm.fyy.transpose().mul_real_vec(a);

    let (o_a, o_x, o_b, o_y) = (0, n - 1, 2 * n - 1, 2 * n + m - 2);
    let dim = 2 * n + 2 * m - 2;
    let mut out = DenseMatrix::zeros(dim, dim);
    let mut put = |r0: usize, c0: usize, blk: &DenseMatrix| {
        out.set_block(r0, c0, blk);
        out.set_block(c0, r0, &(-&blk.transpose()));
    };
    put(o_a, o_b, &w);
    put(o_a, o_y, &ay);
    put(o_x, o_b, &xb);
    put(o_x, o_y, &xy);
    for i in 0..n {
        out[(o_x + i, o_x + i)] = fxx_b[i] * gamma;
    }
    for j in 0..m {
        out[(o_y + j, o_y + j)] = -fyy_a[j] * gamma;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TrigPayoff;
    use crate::linalg::spectral_abscissa_min;
    use std::f64::consts::PI;

    #[test]
    fn entropy_projector_at_centre() {
        let link = LinkGeometry::simplex(2, 0);
        let p = link.projector_at(&[0.5, 0.5]).unwrap();
        let expect = DenseMatrix::from_real(2, 2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        assert!(p.approx_eq(&expect, 1e-15));
        let third = [1.0 / 3.0; 3];
        let p3 = LinkGeometry::simplex(3, 0).projector_at(&third).unwrap();
        let e3 = DenseMatrix::from_fn(3, 3, |i, j| C64::new(if i == j { 1.0 } else { 0.0 } - 1.0 / 3.0, 0.0));
        assert!(p3.approx_eq(&e3, 1e-15));
        assert!(projector(&[1.0, 2.0], &DenseMatrix::zeros(0, 2)).unwrap().approx_eq(&DenseMatrix::identity(2), 0.0));
    }

    #[test]
    fn complement_examples() {
        let pi = orthonormal_complement(&[1.0, 0.0, 0.0]);
        assert!(pi.approx_eq(&DenseMatrix::from_real(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap(), 1e-15));
        let h = 0.5f64.sqrt();
        let pi = orthonormal_complement(&[h, h]);
        assert!((pi[(0, 0)].re + pi[(0, 1)].re).abs() < 1e-15);
        assert!((pi[(0, 0)].re.abs() - h).abs() < 1e-15);
    }

    fn counterexample() -> TrigPayoff {
        // sin(4 pi x) + sin(4 pi y) + 2 cos(2 pi (x + y)).
        let mut c = DenseMatrix::zeros(5, 5);
        c[(4, 2)] = C64::new(0.0, -1.0);
        c[(2, 4)] = C64::new(0.0, -1.0);
        c[(3, 3)] = C64::new(2.0, 0.0);
        TrigPayoff::new(c).unwrap()
    }

    #[test]
    fn counterexample_m_gamma_entries() {
        let f = counterexample();
        let (a, b) = ([0.5, 0.5], [0.5, 0.5]);
        let (x, y) = ([3.0 / 8.0, 7.0 / 8.0], [1.0 / 8.0, 5.0 / 8.0]);
        assert!(stationarity_residual(&f, &a, &x, &b, &y) < 1e-12);
        let mg = m_gamma(&f, &a, &x, &b, &y, 1.0).unwrap();
        assert_eq!(mg.shape(), (6, 6));
        let c = (4.0 * PI).powi(2);
        assert!((mg[(0, 3)].re.abs() - 2.0).abs() < 1e-12);
        assert!((mg[(1, 1)].re - c).abs() < 1e-9 && (mg[(5, 5)].re - c).abs() < 1e-9);
        let e = (2.0 * PI).powi(2);
        assert!((mg[(1, 4)].re.abs() - e).abs() < 1e-9);
        assert!(spectral_abscissa_min(&mg).unwrap().abs() < 1e-10);
        let mp = m_mp(&DenseMatrix::from_real(2, 2, &[-2.0, 2.0, 2.0, -2.0]).unwrap(), &a, &b).unwrap();
        assert!((mp[(0, 1)].re.abs() - 2.0).abs() < 1e-12);
    }
}
