//! Mixed Nash equilibria of trig payoffs with a fixed number of particles.
//!
//! A discretised matrix game on a uniform grid gives atom locations and
//! weights; conic particle mirror prox then converges to a stationary point
//! of the lifted game, with step backoff on divergence and a polish phase at
//! smaller steps.

use minmax_core::dynamics::{Algo, AlgoConfig, DynamicsError, Stepper};
use minmax_core::game::{torus_diff, wrap_unit, ParticleGame, Payoff2d, TrigPayoff};
use minmax_core::mirror::stationarity_residual;
use minmax_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MneConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub eta: f64,
    pub gamma: f64,
    pub max_steps: usize,
    /// Target stationarity residual.
    pub tol: f64,
    /// Residual above which the result is an error.
    pub accept: f64,
    /// Grid resolution of the warm start; 0 starts from random particles.
    pub grid: usize,
    pub restarts: usize,
}

impl Default for MneConfig {
    fn default() -> Self {
        Self {
            n: 2,
            m: 2,
            seed: 0,
            eta: 1e-2,
            gamma: 1.0,
            max_steps: 1_000_000,
            tol: 1e-9,
            accept: 1e-7,
            grid: 256,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MneSolution {
    pub a: Vec<f64>,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    /// `max_y sum_I a_I f(x_I, y) - min_x sum_J b_J f(x, y_J)` on a fine grid.
    pub exploitability: f64,
    pub converged: bool,
    /// Step size of the last cpmp phase.
    pub eta_used: f64,
    pub steps: usize,
    pub restarts_used: usize,
    /// Atoms found by the grid warm start, per player.
    pub grid_atoms: (usize, usize),
}

impl MneSolution {
    /// Concatenated `(a, x, b, y)`.
    pub fn z(&self) -> Vec<f64> {
        ParticleGame::<TrigPayoff>::pack(&self.a, &self.x, &self.b, &self.y)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MneError {
    #[error("no stationary point found: best residual {residual:.3e} after {steps} steps")]
    NotConverged { residual: f64, steps: usize },
    #[error("invalid MNE configuration: {0}")]
    InvalidConfig(String),
}

/// Mixed strategies of the `g x g` grid game, by mirror prox.
fn grid_game(payoff: &TrigPayoff, g: usize, iters: usize) -> (Vec<f64>, Vec<f64>) {
    let pts: Vec<f64> = (0..g).map(|i| i as f64 / g as f64).collect();
    let f: Vec<f64> = payoff.eval_grid(&pts, &pts).iter().map(|d| d.f).collect();
    let scale = f.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-12);
    let eta = 0.5 / scale;
    let fp = |q: &[f64]| -> Vec<f64> { (0..g).map(|i| (0..g).map(|j| f[i * g + j] * q[j]).sum()).collect() };
    let ftp = |p: &[f64]| -> Vec<f64> { (0..g).map(|j| (0..g).map(|i| f[i * g + j] * p[i]).sum()).collect() };
    let step = |w: &[f64], grad: &[f64], sign: f64| -> Vec<f64> {
        let shift = grad.iter().fold(f64::INFINITY, |s, v| s.min(sign * v));
        let mut out: Vec<f64> = w.iter().zip(grad).map(|(w, v)| w * (-eta * (sign * v - shift)).exp()).collect();
        let tot: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= tot);
        out
    };
    let mut p = vec![1.0 / g as f64; g];
    let mut q = p.clone();
    let (mut pa, mut qa) = (vec![0.0; g], vec![0.0; g]);
    for _ in 0..iters {
        let ph = step(&p, &fp(&q), 1.0);
        let qh = step(&q, &ftp(&p), -1.0);
        p = step(&p, &fp(&qh), 1.0);
        q = step(&q, &ftp(&ph), -1.0);
        for i in 0..g {
            pa[i] += ph[i];
            qa[i] += qh[i];
        }
    }
    let norm = |v: Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    (norm(pa), norm(qa))
}

/// Groups grid mass into atoms `(weight, location)`, heaviest first.
fn atoms(mass: &[f64], radius: f64) -> Vec<(f64, f64)> {
    let g = mass.len();
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&i, &j| mass[j].total_cmp(&mass[i]));
    let floor = 1e-3 * mass[order[0]];
    // (mass, anchor, weighted offset sum)
    let mut clusters: Vec<(f64, f64, f64)> = Vec::new();
    for i in order {
        if mass[i] < floor {
            break;
        }
        let t = i as f64 / g as f64;
        match clusters.iter_mut().find(|c| torus_diff(t, c.1).abs() < radius) {
            Some(c) => {
                c.0 += mass[i];
                c.2 += mass[i] * torus_diff(t, c.1);
            }
            None => clusters.push((mass[i], t, 0.0)),
        }
    }
    let mut out: Vec<(f64, f64)> = clusters.iter().map(|c| (c.0, wrap_unit(c.1 + c.2 / c.0))).collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

fn pick(atoms: &[(f64, f64)], k: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let mut w: Vec<f64> = Vec::with_capacity(k);
    let mut x: Vec<f64> = Vec::with_capacity(k);
    for i in 0..k {
        match atoms.get(i) {
            Some(&(m, t)) => {
                w.push(m.max(1e-3));
                x.push(t);
            }
            None => {
                w.push(0.05);
                x.push(rng.random::<f64>());
            }
        }
    }
    let s: f64 = w.iter().sum();
    (w.into_iter().map(|v| v / s).collect(), x)
}

fn random_simplex(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn residual_at(game: &ParticleGame<TrigPayoff>, z: &[f64]) -> f64 {
    let (a, x, b, y) = game.unpack(z);
    stationarity_residual(&game.payoff, a, x, b, y)
}

struct Phase {
    z: Vec<f64>,
    residual: f64,
    steps: usize,
}

/// Runs cpmp from `z0` until the residual drops below `tol` or `cap` steps.
fn cpmp_phase(
    game: &ParticleGame<TrigPayoff>,
    z0: &[f64],
    eta: f64,
    gamma: f64,
    tol: f64,
    cap: usize,
) -> Result<Phase, DynamicsError> {
    let cfg = AlgoConfig::new(Algo::Cpmp, eta, cap).with_gamma(gamma);
    let mut st = Stepper::new(game, &cfg, z0)?;
    let mut best = Phase {
        z: z0.to_vec(),
        residual: residual_at(game, z0),
        steps: 0,
    };
    let check = 25;
    for k in 1..=cap {
        st.advance()?;
        if k % check == 0 || k == cap {
            let r = residual_at(game, st.state());
            if r < best.residual {
                best = Phase {
                    z: st.state().to_vec(),
                    residual: r,
                    steps: k,
                };
            }
            if r < tol {
                break;
            }
        }
    }
    Ok(best)
}

/// Payoff of the mixed strategies against pure responses, on a fine grid.
fn exploitability(payoff: &TrigPayoff, a: &[f64], x: &[f64], b: &[f64], y: &[f64]) -> f64 {
    let g = 4096;
    let pts: Vec<f64> = (0..g).map(|i| i as f64 / g as f64).collect();
    let vs_y = payoff.eval_grid(x, &pts);
    let vs_x = payoff.eval_grid(&pts, y);
    let best_y = (0..g)
        .map(|j| (0..x.len()).map(|i| a[i] * vs_y[i * g + j].f).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let best_x = (0..g)
        .map(|i| (0..y.len()).map(|j| b[j] * vs_x[i * y.len() + j].f).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (best_y - best_x).max(0.0)
}

/// Finds `(a, x, b, y)` stationary for the lifted game with `N = cfg.n`,
/// `M = cfg.m` particles.
pub fn solve_mne(payoff: &TrigPayoff, cfg: &MneConfig) -> Result<MneSolution, MneError> {
    if cfg.n == 0 || cfg.m == 0 {
        return Err(MneError::InvalidConfig("N and M must be positive".into()));
    }
    if !(cfg.eta > 0.0 && cfg.gamma > 0.0 && cfg.tol > 0.0) {
        return Err(MneError::InvalidConfig("eta, gamma and tol must be positive".into()));
    }
    let game = ParticleGame::new(payoff.clone(), cfg.n, cfg.m);
    let (grid_x, grid_y) = if cfg.grid > 0 {
        let (p, q) = grid_game(payoff, cfg.grid, 4000);
        let r = 4.0 / cfg.grid as f64;
        (atoms(&p, r.max(0.02)), atoms(&q, r.max(0.02)))
    } else {
        (Vec::new(), Vec::new())
    };
    let mut total_steps = 0;
    let mut best: Option<(Phase, f64, usize)> = None;
    for restart in 0..=cfg.restarts {
        let mut g = rng::stream(cfg.seed, restart as u64);
        let z0 = if restart == 0 && cfg.grid > 0 {
            let (a, x) = pick(&grid_x, cfg.n, &mut g);
            let (b, y) = pick(&grid_y, cfg.m, &mut g);
            ParticleGame::<TrigPayoff>::pack(&a, &x, &b, &y)
        } else {
            let a = random_simplex(cfg.n, &mut g);
            let b = random_simplex(cfg.m, &mut g);
            let x: Vec<f64> = (0..cfg.n).map(|_| g.random::<f64>()).collect();
            let y: Vec<f64> = (0..cfg.m).map(|_| g.random::<f64>()).collect();
            ParticleGame::<TrigPayoff>::pack(&a, &x, &b, &y)
        };
        let mut eta = cfg.eta;
        let mut phase = None;
        while eta > cfg.eta * 1e-3 && total_steps < cfg.max_steps {
            let cap = (cfg.max_steps - total_steps).min(cfg.max_steps / 4).max(1);
            match cpmp_phase(&game, &z0, eta, cfg.gamma, cfg.tol, cap) {
                Ok(p) => {
                    total_steps += p.steps.max(1);
                    let stalled = p.residual >= cfg.tol;
                    phase = Some(p);
                    if !stalled {
                        break;
                    }
                    eta *= 0.5;
                }
                Err(_) => {
                    total_steps += 1;
                    eta *= 0.5;
                }
            }
        }
        let Some(mut p) = phase else { continue };
        // Polish at eta/2 and eta/4 from the best point.
        for factor in [0.5, 0.25] {
            let budget = (cfg.max_steps.saturating_sub(total_steps)).min(200_000);
            if budget == 0 {
                break;
            }
            if let Ok(q) = cpmp_phase(&game, &p.z, eta * factor, cfg.gamma, cfg.tol * 0.1, budget) {
                total_steps += q.steps;
                if q.residual < p.residual {
                    p = q;
                }
            }
        }
        let better = best.as_ref().is_none_or(|b| p.residual < b.0.residual);
        if better {
            best = Some((p, eta, restart));
        }
        if best.as_ref().is_some_and(|b| b.0.residual < cfg.tol) || total_steps >= cfg.max_steps {
            break;
        }
    }
    let Some((phase, eta_used, restarts_used)) = best else {
        return Err(MneError::NotConverged {
            residual: f64::INFINITY,
            steps: total_steps,
        });
    };
    if !(phase.residual < cfg.accept) {
        return Err(MneError::NotConverged {
            residual: phase.residual,
            steps: total_steps,
        });
    }
    let (a, x, b, y) = game.unpack(&phase.z);
    let pm = game.payoff_matrix(x, y);
    let value: f64 = (0..cfg.n)
        .flat_map(|i| (0..cfg.m).map(move |j| (i, j)))
        .map(|(i, j)| a[i] * b[j] * pm[(i, j)].re)
        .sum();
    Ok(MneSolution {
        a: a.to_vec(),
        x: x.to_vec(),
        b: b.to_vec(),
        y: y.to_vec(),
        value,
        residual: phase.residual,
        exploitability: exploitability(payoff, a, x, b, y),
        converged: phase.residual < cfg.tol,
        eta_used,
        steps: total_steps,
        restarts_used,
        grid_atoms: (grid_x.len(), grid_y.len()),
    })
}
