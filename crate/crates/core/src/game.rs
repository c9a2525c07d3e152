//! Payoff models and the skewed gradient field.
//!
//! For `f(x, y)` with `x` minimising and `y` maximising, the field is
//! `g = (grad_x f, -grad_y f)` and its Jacobian is
//! `M = [[Q, P], [-P^T, R]]` with `Q = f_xx`, `P = f_xy`, `R = -f_yy`.
//! `M = S + A` splits into `S = Diag(Q, R)` and the antisymmetric `A`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{DenseMatrix, LinalgError, C64};
use crate::rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameError {
    #[error("block structure violated: off-diagonal symmetric part {max:.3e} > {tol:.0e}")]
    BlockStructureViolation { max: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid game specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Geometry of the decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Euclidean,
    /// `x` and `y` each live on a probability simplex.
    Simplex,
    /// Layout `(a, x, b, y)`: weights on simplices, positions on the torus.
    Particle { n_particles: usize, m_particles: usize },
}

pub trait GameModel: Send + Sync {
    /// `(n, m)`: dimensions of the min and max players.
    fn dims(&self) -> (usize, usize);
    fn value(&self, z: &[f64]) -> f64;
    /// Plain gradient `(grad_x f, grad_y f)`.
    fn gradient(&self, z: &[f64]) -> Vec<f64>;
    /// Full symmetric Hessian of `f`.
    fn hessian(&self, z: &[f64]) -> DenseMatrix;
    fn domain(&self) -> Domain {
        Domain::Euclidean
    }
    /// Coordinates identified modulo 1.
    fn torus_mask(&self) -> Vec<bool> {
        let (n, m) = self.dims();
        vec![false; n + m]
    }
    /// Uniform bound on the third derivative tensor, when known.
    fn third_derivative_bound(&self) -> Option<f64> {
        None
    }
}

/// A point split into min and max blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    pub fn from_concat(z: &[f64], n: usize) -> Self {
        Self {
            x: z[..n].to_vec(),
            y: z[n..].to_vec(),
        }
    }

    pub fn concat(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.y);
        z
    }
}

/// `g(z) = (grad_x f, -grad_y f)`.
pub fn gradient_field(game: &dyn GameModel, z: &[f64]) -> Vec<f64> {
    let (n, _) = game.dims();
    let mut g = game.gradient(z);
    for v in &mut g[n..] {
        *v = -*v;
    }
    g
}

/// Jacobian of the skewed field: the Hessian with its max-player rows negated.
pub fn jacobian(game: &dyn GameModel, z: &[f64]) -> DenseMatrix {
    let (n, _) = game.dims();
    let mut h = game.hessian(z);
    let d = h.rows();
    for i in n..d {
        for j in 0..d {
            h[(i, j)] = -h[(i, j)];
        }
    }
    h
}

/// Blocks of `M = S + A`.
#[derive(Debug, Clone)]
pub struct Split {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub p: DenseMatrix,
    pub s: DenseMatrix,
    pub a: DenseMatrix,
}

/// Absolute tolerance on the off-diagonal blocks of `(M + M^T)/2`.
pub const BLOCK_TOL: f64 = 1e-10;

pub fn split(m: &DenseMatrix, n: usize) -> Result<Split, GameError> {
    let d = m.require_square()?;
    if n > d {
        return Err(GameError::Dimension(format!("n = {n} exceeds dimension {d}")));
    }
    let s = m.symmetric_part();
    let a = m.antisymmetric_part();
    let off = s.block(0, n, n, d - n).max_abs();
    if off > BLOCK_TOL {
        return Err(GameError::BlockStructureViolation { max: off, tol: BLOCK_TOL });
    }
    let mut s_clean = s.clone();
    s_clean.set_block(0, n, &DenseMatrix::zeros(n, d - n));
    s_clean.set_block(n, 0, &DenseMatrix::zeros(d - n, n));
    Ok(Split {
        q: s.block(0, 0, n, n),
        r: s.block(n, n, d - n, d - n),
        p: a.block(0, n, n, d - n),
        s: s_clean,
        a,
    })
}

/// `[[Q, P], [-P^T, R]]`.
pub fn assemble_jacobian(q: &DenseMatrix, r: &DenseMatrix, p: &DenseMatrix) -> Result<DenseMatrix, GameError> {
    Ok(DenseMatrix::from_blocks(q, p, &-p.transpose(), r)?)
}

/// `[[0, P], [-P^T, 0]]`.
pub fn antisymmetric_from(p: &DenseMatrix) -> DenseMatrix {
    let (n, m) = p.shape();
    DenseMatrix::from_blocks(
        &DenseMatrix::zeros(n, n),
        p,
        &-p.transpose(),
        &DenseMatrix::zeros(m, m),
    )
    .expect("block shapes agree")
}

/// `f = x^T Q x / 2 - y^T R y / 2 + x^T P y` with `Q, R` symmetric.
#[derive(Debug, Clone)]
pub struct QuadraticGame {
    q: DenseMatrix,
    r: DenseMatrix,
    p: DenseMatrix,
    domain: Domain,
    // Row-major Hessian of f, cached for the gradient hot path.
    hess: Vec<f64>,
}

impl QuadraticGame {
    pub fn new(q: DenseMatrix, r: DenseMatrix, p: DenseMatrix) -> Result<Self, GameError> {
        let (n, m) = p.shape();
        if q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(GameError::Dimension(format!(
                "Q {:?}, R {:?}, P {:?}",
                q.shape(),
                r.shape(),
                p.shape()
            )));
        }
        for mat in [&q, &r, &p] {
            if !mat.is_real(0.0) {
                return Err(GameError::InvalidSpec("quadratic game blocks must be real".into()));
            }
        }
        let q = q.symmetric_part();
        let r = r.symmetric_part();
        let h = DenseMatrix::from_blocks(&q, &p, &p.transpose(), &-&r)?;
        Ok(Self {
            hess: h.re(),
            q,
            r,
            p,
            domain: Domain::Euclidean,
        })
    }

    /// Bilinear game `a^T P b` over two simplices.
    pub fn simplex_bilinear(p: DenseMatrix) -> Result<Self, GameError> {
        let (n, m) = p.shape();
        let mut g = Self::new(DenseMatrix::zeros(n, n), DenseMatrix::zeros(m, m), p)?;
        g.domain = Domain::Simplex;
        Ok(g)
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn p(&self) -> &DenseMatrix {
        &self.p
    }

    /// The constant Jacobian `M`.
    pub fn m(&self) -> DenseMatrix {
        assemble_jacobian(&self.q, &self.r, &self.p).expect("validated shapes")
    }
}

impl GameModel for QuadraticGame {
    fn dims(&self) -> (usize, usize) {
        self.p.shape()
    }

    fn value(&self, z: &[f64]) -> f64 {
        // f = z^T H z / 2 with H the Hessian.
        let d = z.len();
        let mut v = 0.0;
        for i in 0..d {
            for j in 0..d {
                v += 0.5 * z[i] * self.hess[i * d + j] * z[j];
            }
        }
        v
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let d = z.len();
        (0..d)
            .map(|i| self.hess[i * d..(i + 1) * d].iter().zip(z).map(|(h, x)| h * x).sum())
            .collect()
    }

    fn hessian(&self, _z: &[f64]) -> DenseMatrix {
        let d = self.q.rows() + self.r.rows();
        DenseMatrix::from_real(d, d, &self.hess).expect("cached size")
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn third_derivative_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `x^T P y + (alpha / 2) x_1^2`.
pub fn make_reg_bilinear(p: DenseMatrix, alpha: f64) -> Result<QuadraticGame, GameError> {
    let (n, m) = p.shape();
    let mut q = DenseMatrix::zeros(n, n);
    if n > 0 {
        q[(0, 0)] = C64::new(alpha, 0.0);
    }
    QuadraticGame::new(q, DenseMatrix::zeros(m, m), p)
}

/// Value and derivatives up to second order of a two-variable payoff.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Derivs {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

/// Smooth payoff on the product of two unit circles.
pub trait Payoff2d: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> Derivs;

    /// Row-major evaluation at every pair `(xs[i], ys[j])`.
    fn eval_grid(&self, xs: &[f64], ys: &[f64]) -> Vec<Derivs> {
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| self.eval(x, y))).collect()
    }
}

/// `f(x, y) = Re sum_{|k| <= K, |l| <= L} c_kl exp(2 pi i (k x + l y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPayoff {
    /// `(2K + 1) x (2L + 1)`, entry `[k + K, l + L]` holds `c_kl`.
    pub coeffs: DenseMatrix,
}

impl TrigPayoff {
    pub fn new(coeffs: DenseMatrix) -> Result<Self, GameError> {
        let (r, c) = coeffs.shape();
        if r % 2 == 0 || c % 2 == 0 {
            return Err(GameError::InvalidSpec(format!(
                "coefficient grid {r}x{c} must have odd sides"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Coefficients with real and imaginary parts i.i.d. standard normal.
    pub fn random(k: usize, l: usize, seed: u64) -> Self {
        let mut g = rng::stream(seed, 0);
        let coeffs = DenseMatrix::from_fn(2 * k + 1, 2 * l + 1, |_, _| {
            let re = rng::normal(&mut g);
            let im = rng::normal(&mut g);
            C64::new(re, im)
        });
        Self { coeffs }
    }

    pub fn k_max(&self) -> usize {
        (self.coeffs.rows() - 1) / 2
    }

    pub fn l_max(&self) -> usize {
        (self.coeffs.cols() - 1) / 2
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, C64)> + '_ {
        let (kk, ll) = (self.k_max() as i64, self.l_max() as i64);
        (0..self.coeffs.rows()).flat_map(move |i| {
            (0..self.coeffs.cols()).map(move |j| {
                ((i as i64 - kk) as f64, (j as i64 - ll) as f64, self.coeffs[(i, j)])
            })
        })
    }

    /// `sum |c_kl| (2 pi)^3 (k^2 + l^2)^{3/2}`, a bound on every third
    /// directional derivative along unit vectors.
    pub fn third_derivative_bound(&self) -> f64 {
        self.terms()
            .map(|(k, l, c)| c.norm() * (2.0 * PI).powi(3) * (k * k + l * l).powf(1.5))
            .sum()
    }

    /// Uniform bounds `(L_xx, L_yy, L_xy, L_2)` on second derivatives, with
    /// `L_2` bounding the Hessian operator norm.
    pub fn second_derivative_bounds(&self) -> (f64, f64, f64, f64) {
        let w = (2.0 * PI).powi(2);
        let mut b = (0.0, 0.0, 0.0, 0.0);
        for (k, l, c) in self.terms() {
            let a = c.norm() * w;
            b.0 += a * k * k;
            b.1 += a * l * l;
            b.2 += a * (k * l).abs();
            b.3 += a * (k * k + l * l);
        }
        b
    }

    /// Third partials `(f_xxx, f_xxy, f_xyy, f_yyy)`.
    pub fn third_partials(&self, x: f64, y: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, l, c) in self.terms() {
            let t = c * C64::from_polar(1.0, 2.0 * PI * (k * x + l * y));
            // Re((2 pi i)^3 k^a l^b t) = (2 pi)^3 k^a l^b Im t
            let w = (2.0 * PI).powi(3) * t.im;
            out[0] += w * k * k * k;
            out[1] += w * k * k * l;
            out[2] += w * k * l * l;
            out[3] += w * l * l * l;
        }
        out
    }
}

impl TrigPayoff {
    /// `exp(2 pi i k t)` for `k = -K..=K`.
    fn phases(t: f64, kmax: usize) -> Vec<C64> {
        let base = C64::from_polar(1.0, 2.0 * PI * t);
        let mut out = vec![C64::new(1.0, 0.0); 2 * kmax + 1];
        for k in 1..=kmax {
            out[kmax + k] = out[kmax + k - 1] * base;
            out[kmax - k] = out[kmax + k].conj();
        }
        out
    }

    fn combine(&self, ex: &[C64], ey: &[C64]) -> Derivs {
        let (kk, ll) = (self.k_max() as f64, self.l_max() as f64);
        let tp = 2.0 * PI;
        let mut d = Derivs::default();
        for (i, exi) in ex.iter().enumerate() {
            let k = i as f64 - kk;
            // Sum over l first: s0 = sum t, s1 = sum l t, s2 = sum l^2 t.
            let (mut s0, mut s1, mut s2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for (j, eyj) in ey.iter().enumerate() {
                let l = j as f64 - ll;
                let t = self.coeffs[(i, j)] * eyj;
                s0 += t;
                s1 += t * l;
                s2 += t * (l * l);
            }
            let (s0, s1, s2) = (s0 * exi, s1 * exi, s2 * exi);
            // Re(2 pi i k t) = -2 pi k Im t ; Re((2 pi i)^2 k l t) = -(2 pi)^2 k l Re t
            d.f += s0.re;
            d.fx -= tp * k * s0.im;
            d.fy -= tp * s1.im;
            d.fxx -= tp * tp * k * k * s0.re;
            d.fxy -= tp * tp * k * s1.re;
            d.fyy -= tp * tp * s2.re;
        }
        d
    }
}

impl Payoff2d for TrigPayoff {
    fn eval(&self, x: f64, y: f64) -> Derivs {
        self.combine(&Self::phases(x, self.k_max()), &Self::phases(y, self.l_max()))
    }

    fn eval_grid(&self, xs: &[f64], ys: &[f64]) -> Vec<Derivs> {
        let ex: Vec<Vec<C64>> = xs.iter().map(|&x| Self::phases(x, self.k_max())).collect();
        let ey: Vec<Vec<C64>> = ys.iter().map(|&y| Self::phases(y, self.l_max())).collect();
        ex.iter().flat_map(|a| ey.iter().map(move |b| self.combine(a, b))).collect()
    }
}

/// A trig payoff viewed as a game on `T^1 x T^1`.
#[derive(Debug, Clone)]
pub struct TrigGame {
    pub payoff: TrigPayoff,
    pub l3: Option<f64>,
}

impl GameModel for TrigGame {
    fn dims(&self) -> (usize, usize) {
        (1, 1)
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.payoff.eval(z[0], z[1]).f
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let d = self.payoff.eval(z[0], z[1]);
        vec![d.fx, d.fy]
    }

    fn hessian(&self, z: &[f64]) -> DenseMatrix {
        let d = self.payoff.eval(z[0], z[1]);
        DenseMatrix::from_real(2, 2, &[d.fxx, d.fxy, d.fxy, d.fyy]).expect("2x2")
    }

    fn torus_mask(&self) -> Vec<bool> {
        vec![true, true]
    }

    fn third_derivative_bound(&self) -> Option<f64> {
        Some(self.l3.unwrap_or_else(|| self.payoff.third_derivative_bound()))
    }
}

/// Lift of a payoff to `N` and `M` weighted particles:
/// `F(a, x, b, y) = sum_{I,J} a_I b_J f(x_I, y_J)`, variables ordered `(a, x, b, y)`.
#[derive(Debug, Clone)]
pub struct ParticleGame<F: Payoff2d = TrigPayoff> {
    pub payoff: F,
    pub n_particles: usize,
    pub m_particles: usize,
}

/// Payoff derivatives at every particle pair, row-major in `(I, J)`.
pub(crate) struct PairTable {
    pub m: usize,
    pub d: Vec<Derivs>,
}

impl PairTable {
    pub fn at(&self, i: usize, j: usize) -> &Derivs {
        &self.d[i * self.m + j]
    }
}

impl<F: Payoff2d> ParticleGame<F> {
    pub fn new(payoff: F, n_particles: usize, m_particles: usize) -> Self {
        Self {
            payoff,
            n_particles,
            m_particles,
        }
    }

    /// Slices `(a, x, b, y)` of a concatenated state.
    pub fn unpack<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (n, m) = (self.n_particles, self.m_particles);
        (&z[..n], &z[n..2 * n], &z[2 * n..2 * n + m], &z[2 * n + m..2 * n + 2 * m])
    }

    pub fn pack(a: &[f64], x: &[f64], b: &[f64], y: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(a.len() + x.len() + b.len() + y.len());
        z.extend_from_slice(a);
        z.extend_from_slice(x);
        z.extend_from_slice(b);
        z.extend_from_slice(y);
        z
    }

    pub(crate) fn table(&self, x: &[f64], y: &[f64]) -> PairTable {
        PairTable {
            m: y.len(),
            d: self.payoff.eval_grid(x, y),
        }
    }

    /// Payoff matrix `P_IJ = f(x_I, y_J)`.
    pub fn payoff_matrix(&self, x: &[f64], y: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(x.len(), y.len(), |i, j| C64::new(self.payoff.eval(x[i], y[j]).f, 0.0))
    }

    /// Gradient reusing a precomputed pair table.
    pub(crate) fn gradient_with(&self, z: &[f64], t: &PairTable) -> Vec<f64> {
        let (a, _, b, _) = self.unpack(z);
        let (n, m) = (self.n_particles, self.m_particles);
        let mut g = vec![0.0; 2 * n + 2 * m];
        for i in 0..n {
            for j in 0..m {
                let d = t.at(i, j);
                g[i] += b[j] * d.f;
                g[n + i] += a[i] * b[j] * d.fx;
                g[2 * n + j] += a[i] * d.f;
                g[2 * n + m + j] += a[i] * b[j] * d.fy;
            }
        }
        g
    }
}

impl<F: Payoff2d> GameModel for ParticleGame<F> {
    fn dims(&self) -> (usize, usize) {
        (2 * self.n_particles, 2 * self.m_particles)
    }

    fn value(&self, z: &[f64]) -> f64 {
        let (a, x, b, y) = self.unpack(z);
        let t = self.table(x, y);
        let mut v = 0.0;
        for i in 0..a.len() {
            for j in 0..b.len() {
                v += a[i] * b[j] * t.at(i, j).f;
            }
        }
        v
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let (_, x, _, y) = self.unpack(z);
        let t = self.table(x, y);
        self.gradient_with(z, &t)
    }

    fn hessian(&self, z: &[f64]) -> DenseMatrix {
        let (a, x, b, y) = self.unpack(z);
        let (n, m) = (self.n_particles, self.m_particles);
        let t = self.table(x, y);
        let (ia, ix, ib, iy) = (0, n, 2 * n, 2 * n + m);
        let d = 2 * n + 2 * m;
        let mut h = vec![0.0; d * d];
        let mut add = |r: usize, c: usize, v: f64| {
            h[r * d + c] += v;
            if r != c {
                h[c * d + r] += v;
            }
        };
        for i in 0..n {
            for j in 0..m {
                let e = t.at(i, j);
                add(ia + i, ix + i, b[j] * e.fx);
                add(ia + i, ib + j, e.f);
                add(ia + i, iy + j, b[j] * e.fy);
                add(ix + i, ix + i, a[i] * b[j] * e.fxx);
                add(ix + i, ib + j, a[i] * e.fx);
                add(ix + i, iy + j, a[i] * b[j] * e.fxy);
                add(ib + j, iy + j, a[i] * e.fy);
                add(iy + j, iy + j, a[i] * b[j] * e.fyy);
            }
        }
        DenseMatrix::from_real(d, d, &h).expect("sized")
    }

    fn domain(&self) -> Domain {
        Domain::Particle {
            n_particles: self.n_particles,
            m_particles: self.m_particles,
        }
    }

    fn torus_mask(&self) -> Vec<bool> {
        let (n, m) = (self.n_particles, self.m_particles);
        let mut mask = vec![false; 2 * n + 2 * m];
        for v in &mut mask[n..2 * n] {
            *v = true;
        }
        for v in &mut mask[2 * n + m..] {
            *v = true;
        }
        mask
    }
}

pub fn lift_particle_game(payoff: TrigPayoff, n: usize, m: usize) -> ParticleGame<TrigPayoff> {
    ParticleGame::new(payoff, n, m)
}

pub fn make_trig_payoff(k: usize, l: usize, seed: u64) -> TrigPayoff {
    TrigPayoff::random(k, l, seed)
}

/// Representative of `t` in `[0, 1)`.
pub fn wrap_unit(t: f64) -> f64 {
    let w = t - t.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed difference `a - b` reduced to `[-1/2, 1/2)`.
pub fn torus_diff(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - (d + 0.5).floor()
}

/// Trig payoff source: explicit coefficients or a seeded random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrigSource {
    Coefficients { coeffs: DenseMatrix },
    Random { k: usize, l: usize, seed: u64 },
}

impl TrigSource {
    pub fn build(&self) -> Result<TrigPayoff, GameError> {
        match self {
            TrigSource::Coefficients { coeffs } => TrigPayoff::new(coeffs.clone()),
            TrigSource::Random { k, l, seed } => Ok(TrigPayoff::random(*k, *l, *seed)),
        }
    }
}

/// JSON game description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameSpec {
    Quadratic {
        q: DenseMatrix,
        r: DenseMatrix,
        p: DenseMatrix,
        #[serde(default)]
        domain: Domain,
    },
    RegBilinear {
        p: DenseMatrix,
        alpha: f64,
    },
    Trig {
        #[serde(flatten)]
        source: TrigSource,
        #[serde(default)]
        l3: Option<f64>,
    },
    Particle {
        payoff: TrigSource,
        n: usize,
        m: usize,
    },
}

/// Concrete game built from a [`GameSpec`].
#[derive(Debug, Clone)]
pub enum Game {
    Quadratic(QuadraticGame),
    Trig(TrigGame),
    Particle(ParticleGame<TrigPayoff>),
}

impl GameSpec {
    pub fn build(&self) -> Result<Game, GameError> {
        Ok(match self {
            GameSpec::Quadratic { q, r, p, domain } => {
                Game::Quadratic(QuadraticGame::new(q.clone(), r.clone(), p.clone())?.with_domain(*domain))
            }
            GameSpec::RegBilinear { p, alpha } => Game::Quadratic(make_reg_bilinear(p.clone(), *alpha)?),
            GameSpec::Trig { source, l3 } => Game::Trig(TrigGame {
                payoff: source.build()?,
                l3: *l3,
            }),
            GameSpec::Particle { payoff, n, m } => {
                if *n == 0 || *m == 0 {
                    return Err(GameError::InvalidSpec("particle counts must be positive".into()));
                }
                Game::Particle(ParticleGame::new(payoff.build()?, *n, *m))
            }
        })
    }
}

impl Game {
    fn inner(&self) -> &dyn GameModel {
        match self {
            Game::Quadratic(g) => g,
            Game::Trig(g) => g,
            Game::Particle(g) => g,
        }
    }
}

impl GameModel for Game {
    fn dims(&self) -> (usize, usize) {
        self.inner().dims()
    }
    fn value(&self, z: &[f64]) -> f64 {
        self.inner().value(z)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        self.inner().gradient(z)
    }
    fn hessian(&self, z: &[f64]) -> DenseMatrix {
        self.inner().hessian(z)
    }
    fn domain(&self) -> Domain {
        self.inner().domain()
    }
    fn torus_mask(&self) -> Vec<bool> {
        self.inner().torus_mask()
    }
    fn third_derivative_bound(&self) -> Option<f64> {
        self.inner().third_derivative_bound()
    }
}
