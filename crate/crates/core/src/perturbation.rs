//! Eigenvalue perturbation along smooth matrix curves.
//!
//! For a diagonalisable `M0 = sum_k lambda_k v_k w_k^*` with simple spectrum
//! and dual basis `w_j^* v_k = delta_jk`, write `C1 = W^* M' V`,
//! `C2 = W^* M'' V`, `C3 = W^* M''' V`. With the normalisation
//! `w_k^* v_k' = 0` the derivatives at `alpha = 0` are
//!
//! ```text
//! lambda_k'   = C1_kk
//! lambda_k''  = C2_kk + 2 sum_{j != k} C1_kj C1_jk / (lambda_k - lambda_j)
//! lambda_k''' = C3_kk + 3 sum_{j != k} (C1_kj C2_jk + C2_kj C1_jk) / (lambda_k - lambda_j)
//!             + 6 sum_{j, l != k} C1_kj C1_jl C1_lk / ((lambda_k - lambda_j)(lambda_k - lambda_l))
//!             - 6 C1_kk sum_{j != k} C1_kj C1_jk / (lambda_k - lambda_j)^2
//! v_k'        = sum_{j != k} C1_jk / (lambda_k - lambda_j) v_j
//! w_k'^*      = sum_{j != k} C1_kj / (lambda_k - lambda_j) w_j^*
//! ```

use serde::{Deserialize, Serialize};

use crate::game::antisymmetric_from;
use crate::linalg::{
    eigenvalues, match_nearest, op_norm, spectral_abscissa_min, svd, DenseMatrix, EigenSystem, LinalgError, C64,
    ZERO,
};
use crate::rng;
use crate::stats::loglog_slope;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerturbationError {
    #[error("eigenvalues not simple: gap {gap:.3e}")]
    RepeatedEigenvalue { gap: f64 },
    #[error("base matrix is not normal: defect {defect:.3e}")]
    NotNormal { defect: f64 },
    #[error("alpha = {alpha:.3e} outside the certified region (perturbation {norm:.3e} > {limit:.3e})")]
    AlphaOutOfRange { alpha: f64, norm: f64, limit: f64 },
    #[error("singular values of P are not simple and positive (min gap {gap:.3e})")]
    DegenerateSingularValues { gap: f64 },
    #[error("P must be square, got {0}x{1}")]
    NonSquareCoupling(usize, usize),
    #[error("block pattern violated: {0}")]
    PatternViolation(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `M(alpha) = m0 + alpha m1 + alpha^2/2 m2 + alpha^3/6 m3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixCurve {
    pub m0: DenseMatrix,
    pub m1: DenseMatrix,
    pub m2: DenseMatrix,
    #[serde(default)]
    pub m3: Option<DenseMatrix>,
}

impl MatrixCurve {
    pub fn quadratic(m0: DenseMatrix, m1: DenseMatrix, m2: DenseMatrix) -> Self {
        Self { m0, m1, m2, m3: None }
    }

    pub fn at(&self, alpha: f64) -> DenseMatrix {
        let mut m = &self.m0 + &self.m1.scale_real(alpha);
        m = &m + &self.m2.scale_real(0.5 * alpha * alpha);
        if let Some(m3) = &self.m3 {
            m = &m + &m3.scale_real(alpha * alpha * alpha / 6.0);
        }
        m
    }

    pub fn third(&self) -> DenseMatrix {
        self.m3
            .clone()
            .unwrap_or_else(|| DenseMatrix::zeros(self.m0.rows(), self.m0.cols()))
    }
}

/// First and second eigenvalue derivatives and first eigenvector derivatives.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub d1: Vec<C64>,
    pub d2: Vec<C64>,
    /// Column `k` is `v_k'`.
    pub dv: DenseMatrix,
    /// Column `k` is `w_k'`.
    pub dw: DenseMatrix,
}

fn require_simple(es: &EigenSystem) -> Result<(), PerturbationError> {
    let scale = es.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let gap = es.gap();
    if es.dim() > 1 && gap <= 1e-12 * scale {
        return Err(PerturbationError::RepeatedEigenvalue { gap });
    }
    Ok(())
}

pub fn eigenvalue_derivatives(
    es: &EigenSystem,
    m1: &DenseMatrix,
    m2: &DenseMatrix,
) -> Result<Derivatives, PerturbationError> {
    require_simple(es)?;
    let d = es.dim();
    let lam = &es.values;
    let c1 = es.coupling(m1);
    let c2 = es.coupling(m2);
    let mut d1 = Vec::with_capacity(d);
    let mut d2 = Vec::with_capacity(d);
    let mut dv = DenseMatrix::zeros(d, d);
    let mut dw = DenseMatrix::zeros(d, d);
    for k in 0..d {
        d1.push(c1[(k, k)]);
        let mut s = c2[(k, k)];
        for j in 0..d {
            if j == k {
                continue;
            }
            let den = lam[k] - lam[j];
            s += 2.0 * c1[(k, j)] * c1[(j, k)] / den;
            let cv = c1[(j, k)] / den;
            let cw = (c1[(k, j)] / den).conj();
            for i in 0..d {
                dv[(i, k)] += cv * es.right[(i, j)];
                dw[(i, k)] += cw * es.dual[(i, j)];
            }
        }
        d2.push(s);
    }
    Ok(Derivatives { d1, d2, dv, dw })
}

pub fn third_derivative(
    es: &EigenSystem,
    m1: &DenseMatrix,
    m2: &DenseMatrix,
    m3: &DenseMatrix,
) -> Result<Vec<C64>, PerturbationError> {
    require_simple(es)?;
    let d = es.dim();
    let lam = &es.values;
    let c1 = es.coupling(m1);
    let c2 = es.coupling(m2);
    let c3 = es.coupling(m3);
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let mut t = c3[(k, k)];
        let mut second = ZERO;
        for j in (0..d).filter(|&j| j != k) {
            let dj = lam[k] - lam[j];
            t += 3.0 * (c1[(k, j)] * c2[(j, k)] + c2[(k, j)] * c1[(j, k)]) / dj;
            second += c1[(k, j)] * c1[(j, k)] / (dj * dj);
            for l in (0..d).filter(|&l| l != k) {
                let dl = lam[k] - lam[l];
                t += 6.0 * c1[(k, j)] * c1[(j, l)] * c1[(l, k)] / (dj * dl);
            }
        }
        t -= 6.0 * second * c1[(k, k)];
        out.push(t);
    }
    Ok(out)
}

/// `chi ||M'''|| + 6 d chi^2 ||M'|| ||M''|| / gamma + 6 d^2 chi^3 ||M'||^3 / gamma^2`
/// with `chi = max_k ||v_k|| ||w_k||` and `gamma` the eigengap.
pub fn third_derivative_bound(es: &EigenSystem, m1: &DenseMatrix, m2: &DenseMatrix, m3: &DenseMatrix) -> f64 {
    let d = es.dim() as f64;
    let chi = es.chi();
    let g = es.gap();
    let (n1, n2, n3) = (op_norm(m1), op_norm(m2), op_norm(m3));
    chi * n3 + 6.0 * d * chi * chi * n1 * n2 / g + 6.0 * d * d * chi.powi(3) * n1.powi(3) / (g * g)
}

/// Eigengap and eigenvector-conditioning control under a perturbation of
/// size `||Delta||` of a normal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaChi {
    pub gamma0: f64,
    pub gamma_lower: f64,
    pub chi_upper: f64,
    /// `||Delta|| < gamma0 / (2 sqrt(2d))`.
    pub valid: bool,
}

pub fn gamma_chi_bounds(gamma0: f64, d: usize, delta_norm: f64) -> GammaChi {
    let c = 2.0 * (2.0 * d as f64).sqrt();
    let valid = delta_norm < gamma0 / c;
    GammaChi {
        gamma0,
        gamma_lower: gamma0 - 2.0 * delta_norm,
        chi_upper: if valid {
            gamma0 / (gamma0 - c * delta_norm)
        } else {
            f64::INFINITY
        },
        valid,
    }
}

fn normal_tolerance(m: &DenseMatrix) -> f64 {
    1e-10 * m.max_abs().max(1.0).powi(2)
}

fn require_normal(m: &DenseMatrix) -> Result<(), PerturbationError> {
    let defect = m.normality_defect();
    if defect > normal_tolerance(m) {
        return Err(PerturbationError::NotNormal { defect });
    }
    Ok(())
}

pub fn gamma_chi_control(m0: &DenseMatrix, delta: &DenseMatrix) -> Result<GammaChi, PerturbationError> {
    require_normal(m0)?;
    let ev = eigenvalues(m0)?;
    Ok(gamma_chi_bounds(crate::linalg::eigengap(&ev), m0.rows(), op_norm(delta)))
}

/// Second-order expansion of the spectrum along a curve through a normal matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Expansion {
    pub alpha: f64,
    /// Eigenvalues of `m0`, sorted.
    pub base: Vec<C64>,
    /// `lambda_j + alpha lambda_j' + alpha^2/2 lambda_j''`, aligned with `base`.
    pub approx: Vec<C64>,
    /// `alpha^3 8 d ||m1|| (||m2|| + 4 d ||m1||^2 / gamma0) / gamma0`.
    pub remainder_bound: f64,
    /// Largest `alpha` with `alpha ||m1|| + alpha^2/2 ||m2|| <= gamma0 / (4 sqrt(2d))`.
    pub validity_radius: f64,
    pub gamma0: f64,
}

/// Certified radius and remainder constant for a curve through a normal matrix.
pub fn normal_expansion_constants(gamma0: f64, d: usize, n1: f64, n2: f64) -> (f64, f64) {
    let d = d as f64;
    let limit = gamma0 / (4.0 * (2.0 * d).sqrt());
    let radius = if n2 == 0.0 {
        if n1 == 0.0 {
            f64::INFINITY
        } else {
            limit / n1
        }
    } else {
        (-n1 + (n1 * n1 + 2.0 * n2 * limit).sqrt()) / n2
    };
    let c = 8.0 * d * n1 * (n2 + 4.0 * d * n1 * n1 / gamma0) / gamma0;
    (radius, c)
}

pub fn expand_normal(curve: &MatrixCurve, alpha: f64) -> Result<Expansion, PerturbationError> {
    let m0 = &curve.m0;
    require_normal(m0)?;
    let es = EigenSystem::new(m0)?;
    require_simple(&es)?;
    let d = es.dim();
    let gamma0 = es.gap();
    let limit = gamma0 / (4.0 * (2.0 * d as f64).sqrt());
    let delta = &curve.m1.scale_real(alpha) + &curve.m2.scale_real(0.5 * alpha * alpha);
    let dn = op_norm(&delta);
    if dn > limit {
        return Err(PerturbationError::AlphaOutOfRange {
            alpha,
            norm: dn,
            limit,
        });
    }
    let der = eigenvalue_derivatives(&es, &curve.m1, &curve.m2)?;
    let approx = (0..d)
        .map(|k| es.values[k] + der.d1[k] * alpha + der.d2[k] * (0.5 * alpha * alpha))
        .collect();
    let (radius, c) = normal_expansion_constants(gamma0, d, op_norm(&curve.m1), op_norm(&curve.m2));
    Ok(Expansion {
        alpha,
        base: es.values.clone(),
        approx,
        remainder_bound: c * alpha.abs().powi(3),
        validity_radius: radius,
        gamma0,
    })
}

/// Expansion paired with the exact spectrum of `M(alpha)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub expansion: Expansion,
    /// Exact eigenvalues aligned with `expansion.approx` by greedy nearest matching.
    pub exact: Vec<C64>,
    pub abs_error: Vec<f64>,
}

impl ExpansionCheck {
    pub fn max_error(&self) -> f64 {
        self.abs_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn within_bound(&self) -> bool {
        self.max_error() <= self.expansion.remainder_bound
    }
}

pub fn check_expansion(curve: &MatrixCurve, alpha: f64) -> Result<ExpansionCheck, PerturbationError> {
    let expansion = expand_normal(curve, alpha)?;
    let exact_all = eigenvalues(&curve.at(alpha))?;
    let idx = match_nearest(&expansion.approx, &exact_all);
    let exact: Vec<C64> = idx.iter().map(|&i| exact_all[i]).collect();
    let abs_error = exact.iter().zip(&expansion.approx).map(|(a, b)| (a - b).norm()).collect();
    Ok(ExpansionCheck {
        expansion,
        exact,
        abs_error,
    })
}

/// First-order estimate `alpha/2 min_j (u_j^T Q u_j + v_j^T R v_j)` of
/// `min Re lambda(A + alpha Diag(Q, R))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirstOrder {
    pub estimate: f64,
    pub argmin: usize,
    /// `u_j^T Q u_j + v_j^T R v_j` per singular pair.
    pub coefficients: Vec<f64>,
}

pub fn tmu_first_order(
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
    alpha: f64,
) -> Result<FirstOrder, PerturbationError> {
    let (n, m) = p.shape();
    if n != m {
        return Err(PerturbationError::NonSquareCoupling(n, m));
    }
    let sv = svd(p)?;
    let smax = sv.sigma.first().copied().unwrap_or(0.0);
    let mut gap = sv.sigma.last().copied().unwrap_or(0.0);
    for w in sv.sigma.windows(2) {
        gap = gap.min(w[0] - w[1]);
    }
    if gap <= 1e-10 * smax.max(1.0) {
        return Err(PerturbationError::DegenerateSingularValues { gap });
    }
    let coefficients: Vec<f64> = (0..n)
        .map(|j| {
            let u = sv.u.col(j);
            let v = sv.v.col(j);
            let qu = q.mul_vec(&u);
            let rv = r.mul_vec(&v);
            crate::linalg::dot(&u, &qu).re + crate::linalg::dot(&v, &rv).re
        })
        .collect();
    let (argmin, &cmin) = coefficients
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("n > 0");
    Ok(FirstOrder {
        estimate: 0.5 * alpha * cmin,
        argmin,
        coefficients,
    })
}

/// Blocks of `M_gamma = gamma S2 + A0 + sqrt(gamma) A1 + gamma A2` on the
/// partition `(p1, p2, q1, q2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuredBlocks {
    pub sizes: [usize; 4],
    pub s2: DenseMatrix,
    pub a0: DenseMatrix,
    pub a1: DenseMatrix,
    pub a2: DenseMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuredCurve {
    pub gammas: Vec<f64>,
    pub mu: Vec<f64>,
    /// Log-log slope of `mu` against `gamma` over positive values.
    pub slope: Option<f64>,
    /// Random antisymmetric noise was added to `A0` to split repeated eigenvalues.
    pub tie_break_applied: bool,
}

/// Allowed nonzero blocks per matrix; blocks indexed 0..4 over the partition.
fn allowed(which: &str, bi: usize, bj: usize) -> bool {
    match which {
        "s2" => (bi, bj) == (1, 1) || (bi, bj) == (3, 3),
        "a0" => (bi, bj) == (0, 2) || (bi, bj) == (2, 0),
        "a1" => matches!((bi, bj), (0, 3) | (1, 2) | (2, 1) | (3, 0)),
        "a2" => (bi, bj) == (1, 3) || (bi, bj) == (3, 1),
        _ => false,
    }
}

impl StructuredBlocks {
    fn offsets(&self) -> [usize; 5] {
        let s = self.sizes;
        [0, s[0], s[0] + s[1], s[0] + s[1] + s[2], s[0] + s[1] + s[2] + s[3]]
    }

    pub fn validate(&self) -> Result<(), PerturbationError> {
        let off = self.offsets();
        let d = off[4];
        for (name, m) in [("s2", &self.s2), ("a0", &self.a0), ("a1", &self.a1), ("a2", &self.a2)] {
            if m.shape() != (d, d) {
                return Err(PerturbationError::PatternViolation(format!("{name} has shape {:?}", m.shape())));
            }
            let scale = m.max_abs().max(1.0);
            for bi in 0..4 {
                for bj in 0..4 {
                    if allowed(name, bi, bj) {
                        continue;
                    }
                    let blk = m.block(off[bi], off[bj], off[bi + 1] - off[bi], off[bj + 1] - off[bj]);
                    if blk.max_abs() > 1e-12 * scale {
                        return Err(PerturbationError::PatternViolation(format!(
                            "{name} block ({bi}, {bj}) is nonzero"
                        )));
                    }
                }
            }
            let sym = if name == "s2" { m.antisymmetric_part() } else { m.symmetric_part() };
            if sym.max_abs() > 1e-12 * scale {
                return Err(PerturbationError::PatternViolation(format!(
                    "{name} has the wrong symmetry"
                )));
            }
        }
        Ok(())
    }

    pub fn at(&self, gamma: f64) -> DenseMatrix {
        let mut m = &self.s2.scale_real(gamma) + &self.a0;
        m = &m + &self.a1.scale_real(gamma.sqrt());
        &m + &self.a2.scale_real(gamma)
    }
}

/// `min Re lambda(M_gamma)` over a grid of `gamma`. With `tie_break = Some((seed, scale))`
/// the `A0` coupling block receives antisymmetric noise of that size first.
pub fn structured_tmu_curve(
    blocks: &StructuredBlocks,
    gammas: &[f64],
    tie_break: Option<(u64, f64)>,
) -> Result<StructuredCurve, PerturbationError> {
    blocks.validate()?;
    let mut b = blocks.clone();
    if let Some((seed, scale)) = tie_break {
        let [p1, p2, q1, _] = b.sizes;
        let noise = rng::gaussian_matrix(&mut rng::stream(seed, 0), p1, q1).scale_real(scale);
        let mut full = DenseMatrix::zeros(p1 + p2, q1 + b.sizes[3]);
        full.set_block(0, 0, &noise);
        let pad = antisymmetric_from(&full);
        // `antisymmetric_from` lays blocks as (p1+p2 | q1+q2); that matches the partition.
        b.a0 = &b.a0 + &pad;
    }
    let mu = gammas
        .iter()
        .map(|&g| spectral_abscissa_min(&b.at(g)))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(StructuredCurve {
        gammas: gammas.to_vec(),
        slope: loglog_slope(gammas, &mu),
        mu,
        tie_break_applied: tie_break.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_coupling_of_two_levels() {
        let m0 = DenseMatrix::from_real_diag(&[1.0, 2.0]);
        let m1 = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let es = EigenSystem::new(&m0).unwrap();
        let der = eigenvalue_derivatives(&es, &m1, &DenseMatrix::zeros(2, 2)).unwrap();
        assert!((der.d2[0] - C64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((der.d2[1] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(der.d1.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn rotation_coupling_has_vanishing_third_derivative() {
        let m0 = DenseMatrix::from_diag(&[C64::new(0.0, 1.0), C64::new(0.0, -1.0)]);
        let m1 = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        let es = EigenSystem::new(&m0).unwrap();
        let t = third_derivative(&es, &m1, &z, &z).unwrap();
        assert!(t.iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn gamma_chi_example() {
        let g = gamma_chi_bounds(2.0, 2, 0.1);
        assert!(g.valid);
        assert!((g.chi_upper - 1.25).abs() < 1e-15);
        assert!((g.gamma_lower - 1.8).abs() < 1e-15);
        assert!(!gamma_chi_bounds(2.0, 2, 2.0).valid);
    }

    #[test]
    fn isotropic_regularisation_is_exact() {
        let p = DenseMatrix::from_real(2, 2, &[1.0, 0.3, -0.2, 2.0]).unwrap();
        let i2 = DenseMatrix::identity(2);
        let fo = tmu_first_order(&i2, &i2, &p, 0.01).unwrap();
        assert!((fo.estimate - 0.01).abs() < 1e-15);
    }

    #[test]
    fn expansion_rejects_large_alpha_and_non_normal_base() {
        let m0 = DenseMatrix::from_diag(&[C64::new(0.0, 1.0), C64::new(0.0, -1.0)]);
        let m1 = DenseMatrix::identity(2);
        let curve = MatrixCurve::quadratic(m0, m1.clone(), DenseMatrix::zeros(2, 2));
        assert!(matches!(expand_normal(&curve, 10.0), Err(PerturbationError::AlphaOutOfRange { .. })));
        let shear = DenseMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 2.0]).unwrap();
        let bad = MatrixCurve::quadratic(shear, m1, DenseMatrix::zeros(2, 2));
        assert!(matches!(expand_normal(&bad, 0.01), Err(PerturbationError::NotNormal { .. })));
    }

    #[test]
    fn pattern_violation_detected() {
        let d = 4;
        let mut s2 = DenseMatrix::zeros(d, d);
        s2[(0, 0)] = C64::new(1.0, 0.0);
        let blocks = StructuredBlocks {
            sizes: [1, 1, 1, 1],
            s2,
            a0: DenseMatrix::zeros(d, d),
            a1: DenseMatrix::zeros(d, d),
            a2: DenseMatrix::zeros(d, d),
        };
        assert!(matches!(blocks.validate(), Err(PerturbationError::PatternViolation(_))));
    }
}
