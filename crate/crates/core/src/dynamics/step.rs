use crate::game::{gradient_field, jacobian, torus_diff, wrap_unit, GameModel};
use crate::linalg::{real_norm, to_complex, Lu};
use crate::mirror::BOUNDARY_TOL;

use super::geometry::Geometry;
use super::run::BLOWUP_NORM;
use super::{Algo, AlgoConfig, DynamicsError};

/// Iterates one algorithm from a starting point.
///
/// For `alt_gda_sym` the state is the standard alternating pair
/// `(x^k, y^{k+1/2})` and [`Stepper::current`] reports
/// `(x^k, (y^{k-1/2} + y^{k+1/2}) / 2)`.
pub struct Stepper<'a> {
    game: &'a dyn GameModel,
    cfg: AlgoConfig,
    geom: Geometry,
    n: usize,
    state: Vec<f64>,
    prev_y: Option<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(game: &'a dyn GameModel, cfg: &AlgoConfig, z0: &[f64]) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let (n, m) = game.dims();
        if z0.len() != n + m {
            return Err(DynamicsError::InvalidConfig(format!(
                "initial point has {} coordinates, game has {}",
                z0.len(),
                n + m
            )));
        }
        let geom = Geometry::for_algo(game, cfg)?;
        geom.check_interior(z0, Self::floor(cfg.algo))?;
        let mut state = z0.to_vec();
        geom.wrap(&mut state);
        Ok(Self {
            game,
            cfg: cfg.clone(),
            geom,
            n,
            state,
            prev_y: None,
        })
    }

    /// Flows need the open simplex; multiplicative steps only positivity.
    fn floor(algo: Algo) -> f64 {
        if algo.is_flow() {
            BOUNDARY_TOL
        } else {
            0.0
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn into_state(self) -> Vec<f64> {
        self.state
    }

    /// The iterate the algorithm is judged by.
    pub fn current(&self) -> Vec<f64> {
        let mut z = self.state.clone();
        if let Some(prev) = &self.prev_y {
            for (k, p) in prev.iter().enumerate() {
                let i = self.n + k;
                z[i] = if self.geom.torus[i] {
                    wrap_unit(p + 0.5 * torus_diff(self.state[i], *p))
                } else {
                    0.5 * (p + self.state[i])
                };
            }
        }
        z
    }

    pub fn advance(&mut self) -> Result<(), DynamicsError> {
        let next = self.next(&self.state)?;
        let norm = real_norm(&next);
        if !norm.is_finite() || norm > BLOWUP_NORM {
            return Err(DynamicsError::NumericalBlowup { norm });
        }
        self.geom.check_interior(&next, Self::floor(self.cfg.algo))?;
        if self.cfg.algo == Algo::AltGdaSym {
            self.prev_y = Some(self.state[self.n..].to_vec());
        }
        self.state = next;
        Ok(())
    }

    fn field(&self, z: &[f64]) -> Vec<f64> {
        self.geom.direction(&gradient_field(self.game, z), z)
    }

    fn next(&self, z: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let eta = self.cfg.eta;
        let g = &self.geom;
        Ok(match self.cfg.algo {
            Algo::SimGda | Algo::Mda => g.update(z, &self.field(z), eta),
            Algo::Eg | Algo::Mp | Algo::Cpmp => {
                let half = g.update(z, &self.field(z), eta);
                g.update(z, &self.field(&half), eta)
            }
            Algo::AltGdaStd | Algo::AltGdaSym => {
                let n = self.n;
                let mut w = z.to_vec();
                let gx = gradient_field(self.game, z);
                for i in 0..n {
                    w[i] -= eta * gx[i];
                }
                g.wrap(&mut w);
                let gy = gradient_field(self.game, &w);
                for i in n..w.len() {
                    w[i] -= eta * gy[i];
                }
                g.wrap(&mut w);
                w
            }
            Algo::Pp => self.proximal(z)?,
            Algo::BregmanPp => self.bregman(z)?,
            Algo::Gf | Algo::Mf | Algo::CpMf => self.rk4(z),
        })
    }

    fn velocity(&self, z: &[f64]) -> Vec<f64> {
        self.geom.velocity(z, &self.field(z))
    }

    fn rk4(&self, z: &[f64]) -> Vec<f64> {
        let h = self.cfg.eta;
        let axpy = |a: f64, k: &[f64]| -> Vec<f64> { z.iter().zip(k).map(|(x, v)| x + a * v).collect() };
        let k1 = self.velocity(z);
        let k2 = self.velocity(&axpy(0.5 * h, &k1));
        let k3 = self.velocity(&axpy(0.5 * h, &k2));
        let k4 = self.velocity(&axpy(h, &k3));
        let mut out: Vec<f64> = (0..z.len())
            .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        self.geom.wrap(&mut out);
        out
    }

    /// Solves `w + eta g(w) = z` by Newton, then by damped fixed point.
    fn proximal(&self, z: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let eta = self.cfg.eta;
        let tol = self.cfg.implicit_tol;
        let d = z.len();
        let g0 = gradient_field(self.game, z);
        let mut w: Vec<f64> = z.iter().zip(&g0).map(|(a, b)| a - eta * b).collect();
        for _ in 0..self.cfg.implicit_max_iters {
            let gw = gradient_field(self.game, &w);
            let f: Vec<f64> = (0..d).map(|i| w[i] + eta * gw[i] - z[i]).collect();
            let mut j = jacobian(self.game, &w).scale_real(eta);
            for i in 0..d {
                j[(i, i)] += 1.0;
            }
            let Ok(lu) = Lu::new(&j) else { break };
            let delta = lu.solve_vec(&to_complex(&f));
            for i in 0..d {
                w[i] -= delta[i].re;
            }
            let step: f64 = delta.iter().map(|v| v.re * v.re).sum::<f64>().sqrt();
            if !step.is_finite() {
                break;
            }
            if step <= tol * real_norm(&w).max(1.0) {
                self.geom.wrap(&mut w);
                return Ok(w);
            }
        }
        // Damped fixed point w <- (w + z - eta g(w)) / 2.
        let mut w = z.to_vec();
        let mut change = f64::INFINITY;
        for _ in 0..self.cfg.implicit_max_iters {
            let gw = gradient_field(self.game, &w);
            let next: Vec<f64> = (0..d).map(|i| 0.5 * w[i] + 0.5 * (z[i] - eta * gw[i])).collect();
            change = next.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            w = next;
            if change <= tol * real_norm(&w).max(1.0) {
                self.geom.wrap(&mut w);
                return Ok(w);
            }
        }
        Err(DynamicsError::ImplicitSolveFailed {
            iters: self.cfg.implicit_max_iters,
            residual: change,
        })
    }

    /// Solves `w = update(z, field(w))` by damped fixed point.
    fn bregman(&self, z: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let tol = self.cfg.implicit_tol;
        let mut w = z.to_vec();
        let mut change = f64::INFINITY;
        for _ in 0..self.cfg.implicit_max_iters {
            let target = self.geom.update(z, &self.field(&w), self.cfg.eta);
            let next: Vec<f64> = w
                .iter()
                .zip(&target)
                .enumerate()
                .map(|(i, (a, b))| {
                    if self.geom.torus[i] {
                        wrap_unit(a + 0.5 * torus_diff(*b, *a))
                    } else {
                        0.5 * (a + b)
                    }
                })
                .collect();
            change = next
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            w = next;
            if change <= tol * real_norm(&w).max(1.0) {
                return Ok(w);
            }
        }
        Err(DynamicsError::ImplicitSolveFailed {
            iters: self.cfg.implicit_max_iters,
            residual: change,
        })
    }
}

/// One update of `cfg.algo` from `z`; flows take one RK4 step of size `eta`.
pub fn step(game: &dyn GameModel, cfg: &AlgoConfig, z: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let mut s = Stepper::new(game, cfg, z)?;
    s.advance()?;
    Ok(s.into_state())
}
