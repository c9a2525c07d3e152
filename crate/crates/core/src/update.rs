//! Jacobians of discrete-time updates at a fixed point and the expansion of
//! their spectral radii for `M = A + alpha S`.
//!
//! With `A` having eigenvalues `+-i sigma_j` and eigenvectors
//! `w_j = (-+i u_j, v_j)/sqrt 2`, write `s_j = w_j^* S w_j = (u_j^T Q u_j + v_j^T R v_j)/2`.
//! The leading terms of `|nu_j|^2` are
//!
//! ```text
//! sim_gda  1 - 2 alpha eta s_j + eta^2 sigma_j^2
//! pp       1 / (1 + 2 alpha eta s_j + eta^2 sigma_j^2)
//! alt_gda  1 - 2 alpha eta s_j + eta^4 sigma_j^4 / 4
//! eg       1 - 2 alpha eta s_j - eta^2 sigma_j^2 - 2 alpha eta^3 sigma_j^2 s_j + eta^4 sigma_j^4
//! ```
//!
//! and `rho^2 = max_j |nu_j|^2` (`1 / min_j` for pp). Alt-GDA is analysed
//! through the symmetrised composite `I - eta M + eta^2/2 A M`; the remaining
//! `O(eta^3)` difference to the half-step product is reported, not certified.

use serde::{Deserialize, Serialize};

use crate::game::{antisymmetric_from, assemble_jacobian, GameError};
use crate::linalg::{eigenvalues, inverse, op_norm, spectral_radius, svd, DenseMatrix, LinalgError, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UpdateError {
    #[error("I + eta M is singular")]
    SingularResolvent,
    #[error("step {eta:.3e} exceeds 1 / max(||Q||, ||R||) = {limit:.3e}")]
    StepTooLarge { eta: f64, limit: f64 },
    #[error("{0} is not supported here")]
    Unsupported(&'static str),
    #[error("P must be square with simple positive singular values (gap {gap:.3e})")]
    DegenerateCoupling { gap: f64 },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateAlgo {
    SimGda,
    Pp,
    AltGda,
    Eg,
}

impl UpdateAlgo {
    pub const ALL: [UpdateAlgo; 4] = [UpdateAlgo::SimGda, UpdateAlgo::Pp, UpdateAlgo::AltGda, UpdateAlgo::Eg];

    pub fn name(self) -> &'static str {
        match self {
            UpdateAlgo::SimGda => "sim_gda",
            UpdateAlgo::Pp => "pp",
            UpdateAlgo::AltGda => "alt_gda",
            UpdateAlgo::Eg => "eg",
        }
    }
}

/// `I - eta M`, `(I + eta M)^{-1}` or `I - eta M (I - eta M)`.
pub fn jac(algo: UpdateAlgo, m: &DenseMatrix, eta: f64) -> Result<DenseMatrix, UpdateError> {
    let d = m.require_square()?;
    let i = DenseMatrix::identity(d);
    let em = m.scale_real(eta);
    match algo {
        UpdateAlgo::SimGda => Ok(&i - &em),
        UpdateAlgo::Pp => inverse(&(&i + &em)).map_err(|e| match e {
            LinalgError::Singular { .. } => UpdateError::SingularResolvent,
            other => other.into(),
        }),
        UpdateAlgo::Eg => Ok(&i - &em.matmul(&(&i - &em))),
        UpdateAlgo::AltGda => Err(UpdateError::Unsupported("alt_gda from M alone; use alt_gda_symmetrized")),
    }
}

/// `I - eta M + eta^2/2 A M` for `M = [[Q, P], [-P^T, R]]`.
pub fn alt_gda_symmetrized(
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
    eta: f64,
) -> Result<DenseMatrix, UpdateError> {
    let m = assemble_jacobian(q, r, p)?;
    let a = antisymmetric_from(p);
    let i = DenseMatrix::identity(m.rows());
    Ok(&(&i - &m.scale_real(eta)) + &a.matmul(&m).scale_real(0.5 * eta * eta))
}

/// Half-step Jacobians of alternating GDA and their composites.
#[derive(Debug, Clone)]
pub struct HalfSteps {
    /// Half step updating `y` then half of `x`: `grad T_xy`.
    pub xy: DenseMatrix,
    pub yx: DenseMatrix,
    /// `grad T_xy * grad T_yx`.
    pub composite: DenseMatrix,
    /// `I - eta M + eta^2/2 A M`.
    pub symmetrized: DenseMatrix,
    /// `composite - symmetrized`.
    pub e: DenseMatrix,
    pub e_norm: f64,
    /// `2 eta^3 ||P|| max(||P||, ||Q||, ||R||)^2`.
    pub e_bound: f64,
    /// Standard alternating Jacobian `[[I - eta Q, -eta P], [eta P^T - eta^2 P^T Q, I - eta R - eta^2 P^T P]]`.
    pub standard: DenseMatrix,
}

pub fn alt_gda_halfstep_jacobians(
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
    eta: f64,
) -> Result<HalfSteps, UpdateError> {
    let (n, m) = p.shape();
    let (nq, nr, np) = (op_norm(q), op_norm(r), op_norm(p));
    let lmax = nq.max(nr);
    if eta * lmax > 1.0 {
        return Err(UpdateError::StepTooLarge { eta, limit: 1.0 / lmax });
    }
    let in_ = DenseMatrix::identity(n);
    let im = DenseMatrix::identity(m);
    let pt = p.transpose();
    let h = 0.5 * eta;
    let ri = inverse(&(&im - &r.scale_real(h)))?;
    let qi = inverse(&(&in_ - &q.scale_real(h)))?;
    let i_er = &im - &r.scale_real(eta);
    let i_eq = &in_ - &q.scale_real(eta);

    let xy = DenseMatrix::from_blocks(
        &(&(&in_ - &q.scale_real(h)) - &p.matmul(&ri).matmul(&pt).scale_real(h * h)),
        &p.matmul(&ri).matmul(&i_er).scale_real(-h),
        &ri.matmul(&pt).scale_real(h),
        &ri.matmul(&i_er),
    )?;
    let yx = DenseMatrix::from_blocks(
        &qi.matmul(&i_eq),
        &qi.matmul(p).scale_real(-h),
        &pt.matmul(&qi).matmul(&i_eq).scale_real(h),
        &(&(&im - &r.scale_real(h)) - &pt.matmul(&qi).matmul(p).scale_real(h * h)),
    )?;
    let composite = xy.matmul(&yx);
    let symmetrized = alt_gda_symmetrized(q, r, p, eta)?;
    let e = &composite - &symmetrized;
    let standard = DenseMatrix::from_blocks(
        &i_eq,
        &p.scale_real(-eta),
        &(&pt.scale_real(eta) - &pt.matmul(q).scale_real(eta * eta)),
        &(&i_er - &pt.matmul(p).scale_real(eta * eta)),
    )?;
    let l = np.max(nq).max(nr);
    Ok(HalfSteps {
        e_norm: op_norm(&e),
        e_bound: 2.0 * eta.powi(3) * np * l * l,
        xy,
        yx,
        composite,
        symmetrized,
        e,
        standard,
    })
}

/// Spectral data of `A` entering the expansions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingSpectrum {
    pub sigma: Vec<f64>,
    /// `s_j = (u_j^T Q u_j + v_j^T R v_j)/2`.
    pub s: Vec<f64>,
    /// Minimum gap of `{+-sigma_j}`.
    pub gamma_a: f64,
    pub l_s: f64,
    pub l_a: f64,
    pub d: usize,
}

pub fn coupling_spectrum(q: &DenseMatrix, r: &DenseMatrix, p: &DenseMatrix) -> Result<CouplingSpectrum, UpdateError> {
    let (n, m) = p.shape();
    if n != m {
        return Err(UpdateError::DegenerateCoupling { gap: 0.0 });
    }
    let sv = svd(p)?;
    let mut gamma_a = 2.0 * sv.sigma.last().copied().unwrap_or(0.0);
    for w in sv.sigma.windows(2) {
        gamma_a = gamma_a.min(w[0] - w[1]);
    }
    if gamma_a <= 1e-12 * sv.sigma[0].max(1.0) {
        return Err(UpdateError::DegenerateCoupling { gap: gamma_a });
    }
    let s = (0..n)
        .map(|j| {
            let u = sv.u.col(j);
            let v = sv.v.col(j);
            0.5 * (crate::linalg::dot(&u, &q.mul_vec(&u)).re + crate::linalg::dot(&v, &r.mul_vec(&v)).re)
        })
        .collect();
    Ok(CouplingSpectrum {
        l_a: sv.sigma[0],
        sigma: sv.sigma,
        s,
        gamma_a,
        l_s: op_norm(q).max(op_norm(r)),
        d: 2 * n,
    })
}

/// Leading terms of `rho(grad T)^2`, error budget and the exact value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoExpansion {
    pub algo: UpdateAlgo,
    pub eta: f64,
    pub alpha: f64,
    /// Leading `|nu_j|^2` per singular pair.
    pub leading_terms: Vec<f64>,
    /// `max_j` of the leading terms.
    pub leading: f64,
    pub budget: f64,
    pub validity_radius: f64,
    pub valid: bool,
    /// Spectral radius squared of the (symmetrised, for alt_gda) Jacobian.
    pub rho_sq_exact: f64,
    /// Alt-GDA only: spectral radius squared of the half-step product.
    pub rho_sq_composite: Option<f64>,
}

impl RhoExpansion {
    pub fn error(&self) -> f64 {
        (self.rho_sq_exact - self.leading).abs()
    }
}

/// Budgets and radii; `pp` uses the Sim-GDA budget on the reciprocal.
fn budget_and_radius(algo: UpdateAlgo, c: &CouplingSpectrum, eta: f64, alpha: f64) -> (f64, f64) {
    let d = c.d as f64;
    let (ga, ls, la) = (c.gamma_a, c.l_s, c.l_a);
    let base = ga / (4.0 * (2.0 * d).sqrt() * ls);
    let a3 = alpha.powi(3) * eta;
    let a2 = alpha * alpha * eta * eta;
    match algo {
        UpdateAlgo::SimGda | UpdateAlgo::Pp => (
            a3 * 128.0 * d * d / (ga * ga) * ls.powi(3) * (1.0 + 5.0 * eta * la) + a2 * 2.0 / ga * ls * ls * la,
            base,
        ),
        UpdateAlgo::AltGda => {
            let k = 1.0 + eta * la;
            (
                a3 * 512.0 * d * d / (ga * ga) * ls.powi(3) * k.powi(6) + a2 * 4.0 * d / ga * ls * ls * la * k.powi(4),
                base / (1.0 + 0.5 * eta * la),
            )
        }
        UpdateAlgo::Eg => {
            let k = 1.0 + eta * la;
            let r1 = base / (1.0 + eta * ls * (1.0 + 2.0 * la));
            let r2 = base / (1.0 + eta * (ls + 2.0 * la));
            (
                a3 * 4096.0 * d * d / (ga * ga) * ls.powi(3) * k.powi(7) + a2 * 15.0 * d / ga * ls * ls * la * k * k,
                r1.min(r2).min(1.0),
            )
        }
    }
}

pub fn rho_expansion(
    algo: UpdateAlgo,
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
    eta: f64,
    alpha: f64,
) -> Result<RhoExpansion, UpdateError> {
    let c = coupling_spectrum(q, r, p)?;
    let n = c.sigma.len();
    let mut lead = Vec::with_capacity(n);
    for j in 0..n {
        let (s, sg) = (c.s[j], c.sigma[j]);
        let ae = alpha * eta;
        let e2 = eta * eta * sg * sg;
        lead.push(match algo {
            UpdateAlgo::SimGda => 1.0 - 2.0 * ae * s + e2,
            UpdateAlgo::Pp => 1.0 / (1.0 + 2.0 * ae * s + e2),
            UpdateAlgo::AltGda => 1.0 - 2.0 * ae * s + e2 * e2 / 4.0,
            UpdateAlgo::Eg => 1.0 - 2.0 * ae * s - e2 - 2.0 * ae * e2 * s + e2 * e2,
        });
    }
    let leading = lead.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut budget, radius) = budget_and_radius(algo, &c, eta, alpha);
    if algo == UpdateAlgo::Pp {
        // rho^2 = 1 / (m + e) with |e| <= budget and m = 1 / leading.
        let m = 1.0 / leading;
        budget = if budget < m { budget / (m * (m - budget)) } else { f64::INFINITY };
    }
    let qa = q.scale_real(alpha);
    let ra = r.scale_real(alpha);
    let m = assemble_jacobian(&qa, &ra, p)?;
    let (exact, composite) = match algo {
        UpdateAlgo::AltGda => {
            let sym = alt_gda_symmetrized(&qa, &ra, p, eta)?;
            let comp = alt_gda_halfstep_jacobians(&qa, &ra, p, eta)
                .ok()
                .map(|h| spectral_radius(&h.composite))
                .transpose()?
                .map(|x| x * x);
            (spectral_radius(&sym)?, comp)
        }
        _ => (spectral_radius(&jac(algo, &m, eta)?)?, None),
    };
    Ok(RhoExpansion {
        algo,
        eta,
        alpha,
        leading_terms: lead,
        leading,
        budget,
        validity_radius: radius,
        valid: alpha <= radius,
        rho_sq_exact: exact * exact,
        rho_sq_composite: composite,
    })
}

/// `|nu|^2` for each eigenvalue `lambda` of `M`.
pub fn exact_moduli(algo: UpdateAlgo, spectrum: &[C64], eta: f64) -> Result<Vec<f64>, UpdateError> {
    let one = C64::new(1.0, 0.0);
    spectrum
        .iter()
        .map(|&l| match algo {
            UpdateAlgo::SimGda => Ok((one - l * eta).norm_sqr()),
            UpdateAlgo::Pp => Ok(1.0 / (one + l * eta).norm_sqr()),
            UpdateAlgo::Eg => Ok((one - l * eta + l * l * eta * eta).norm_sqr()),
            UpdateAlgo::AltGda => Err(UpdateError::Unsupported("alt_gda moduli depend on more than spec(M)")),
        })
        .collect()
}

/// Spectral radius squared of `jac(algo, M, eta)` via the eigenvalues of `M`.
pub fn rho_sq_from_spectrum(algo: UpdateAlgo, m: &DenseMatrix, eta: f64) -> Result<f64, UpdateError> {
    let ev = eigenvalues(m)?;
    Ok(exact_moduli(algo, &ev, eta)?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot() -> DenseMatrix {
        DenseMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap()
    }

    #[test]
    fn rotation_moduli() {
        let m = rot();
        let sim = jac(UpdateAlgo::SimGda, &m, 0.1).unwrap();
        let r = spectral_radius(&sim).unwrap();
        assert!((r * r - 1.01).abs() < 1e-14);
        let pp = jac(UpdateAlgo::Pp, &m, 0.1).unwrap();
        let r = spectral_radius(&pp).unwrap();
        assert!((r * r - 1.0 / 1.01).abs() < 1e-14);
    }

    #[test]
    fn scalar_bilinear_half_steps() {
        let z = DenseMatrix::zeros(1, 1);
        let p = DenseMatrix::identity(1);
        let eta = 0.2;
        let h = alt_gda_halfstep_jacobians(&z, &z, &p, eta).unwrap();
        let expect = [1.0 - eta * eta / 4.0, -eta / 2.0, eta / 2.0, 1.0];
        for (a, b) in h.xy.re().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let det = h.composite[(0, 0)] * h.composite[(1, 1)] - h.composite[(0, 1)] * h.composite[(1, 0)];
        assert!((det.re - 1.0).abs() < 1e-14);
        assert!((h.e_norm - eta.powi(3) / 4.0).abs() < 1e-15);
        assert!(h.e_norm <= h.e_bound);
    }

    #[test]
    fn step_too_large_is_rejected() {
        let q = DenseMatrix::from_real(1, 1, &[10.0]).unwrap();
        let z = DenseMatrix::zeros(1, 1);
        let p = DenseMatrix::identity(1);
        assert!(matches!(
            alt_gda_halfstep_jacobians(&q, &z, &p, 0.2),
            Err(UpdateError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn pp_resolvent_singularity() {
        let m = DenseMatrix::from_real(1, 1, &[-1.0]).unwrap();
        assert_eq!(jac(UpdateAlgo::Pp, &m, 1.0), Err(UpdateError::SingularResolvent));
    }
}
