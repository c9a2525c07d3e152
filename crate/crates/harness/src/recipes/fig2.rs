//! Particle games on a random trigonometric payoff: rates against the
//! position time scale `gamma` and the step size `eta`.

use anyhow::{bail, Context, Result};
use minmax_core::dynamics::Algo;
use minmax_core::game::{GameModel, ParticleGame, QuadraticGame, TrigPayoff, TrigSource};
use minmax_core::linalg::{spectral_abscissa_min, DenseMatrix};
use minmax_core::mirror::{m_gamma, m_gamma_unchecked, m_mp, stationarity_residual};
use minmax_core::stats::{log_grid, loglog_slope};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Grid};
use crate::mne::{solve_mne, MneConfig, MneSolution};
use crate::output::{Plot, RecipeOutput, Table, OK};
use crate::sim::{measure, perturb, plan_steps, predicted_rate, Measured};

pub const DEFAULT_PAYOFF_SEED: u64 = 71;
pub const DEFAULT_ETA: f64 = 1e-2;
pub const DEFAULT_GAMMA: f64 = 1e-2;
pub const DEFAULT_MIN_STEPS: usize = 10_000;
pub const DEFAULT_MAX_STEPS: usize = 100_000_000;
pub const DEFAULT_DECAY: f64 = 8.0;
pub const DEFAULT_PERTURBATION: f64 = 1e-3;

pub fn default_payoff() -> TrigSource {
    TrigSource::Random {
        k: 2,
        l: 2,
        seed: DEFAULT_PAYOFF_SEED,
    }
}

/// Payoff, particle counts and a solved equilibrium.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub payoff: TrigPayoff,
    pub seed: u64,
    pub solution: MneSolution,
}

impl Equilibrium {
    pub fn game(&self) -> ParticleGame<TrigPayoff> {
        ParticleGame::new(self.payoff.clone(), self.solution.a.len(), self.solution.b.len())
    }

    pub fn m_gamma(&self, gamma: f64) -> Result<DenseMatrix> {
        let s = &self.solution;
        Ok(m_gamma(&self.payoff, &s.a, &s.x, &s.b, &s.y, gamma)?)
    }

    /// The weights-only bilinear game `a^T f(x*, y*) b` on two simplices.
    pub fn weight_game(&self) -> Result<(QuadraticGame, DenseMatrix)> {
        let s = &self.solution;
        let p = self.game().payoff_matrix(&s.x, &s.y);
        Ok((QuadraticGame::simplex_bilinear(p.clone())?, m_mp(&p, &s.a, &s.b)?))
    }
}

/// Solves for the equilibrium of the configured payoff unless `z_star` is given.
pub fn equilibrium(cfg: &ExperimentConfig) -> Result<Equilibrium> {
    let source = cfg.payoff.clone().unwrap_or_else(default_payoff);
    let seed = match source {
        TrigSource::Random { seed, .. } => seed,
        TrigSource::Coefficients { .. } => cfg.seed,
    };
    let payoff = source.build()?;
    let [n, m] = cfg.particles.unwrap_or([2, 2]);
    if let Some(z) = &cfg.z_star {
        if z.len() != 2 * (n + m) {
            bail!("z_star has {} entries, expected {}", z.len(), 2 * (n + m));
        }
        let (a, x, b, y) = (&z[..n], &z[n..2 * n], &z[2 * n..2 * n + m], &z[2 * n + m..]);
        let game = ParticleGame::new(payoff.clone(), n, m);
        let solution = MneSolution {
            a: a.to_vec(),
            x: x.to_vec(),
            b: b.to_vec(),
            y: y.to_vec(),
            value: game.value(z),
            residual: stationarity_residual(&payoff, a, x, b, y),
            exploitability: f64::NAN,
            converged: true,
            eta_used: f64::NAN,
            steps: 0,
            restarts_used: 0,
            grid_atoms: (0, 0),
        };
        return Ok(Equilibrium { payoff, seed, solution });
    }
    let mne = MneConfig {
        n,
        m,
        ..cfg.mne.clone().unwrap_or(MneConfig {
            seed: cfg.seed,
            grid: 64,
            ..Default::default()
        })
    };
    let solution = solve_mne(&payoff, &mne).context("solving for the mixed equilibrium")?;
    Ok(Equilibrium { payoff, seed, solution })
}

fn equilibrium_summary(e: &Equilibrium) -> serde_json::Value {
    let s = &e.solution;
    json!({
        "payoff_seed": e.seed,
        "a": s.a, "x": s.x, "b": s.b, "y": s.y,
        "value": s.value,
        "residual": s.residual,
        "exploitability": s.exploitability,
    })
}

struct Budget {
    min: usize,
    max: usize,
    decay: f64,
    eps: f64,
}

impl Budget {
    fn from(cfg: &ExperimentConfig) -> Self {
        let min = cfg.steps.unwrap_or(DEFAULT_MIN_STEPS);
        Self {
            min,
            max: cfg.max_steps.unwrap_or(DEFAULT_MAX_STEPS).max(min),
            decay: cfg.target_decay.unwrap_or(DEFAULT_DECAY),
            eps: cfg.perturbation.unwrap_or(DEFAULT_PERTURBATION),
        }
    }
}

/// Game on which `algo` runs: `particle` for conic methods, `simplex` for
/// entropic methods on the weights alone.
fn game_kind(algo: Algo) -> Option<&'static str> {
    if algo.is_conic() {
        Some("particle")
    } else if algo.is_entropic() {
        Some("simplex")
    } else {
        None
    }
}

fn unsupported() -> Measured {
    Measured {
        rate: f64::NAN,
        r_squared: f64::NAN,
        steps: 0,
        diverged: false,
        status: "unsupported".into(),
    }
}

/// Simulates `algo` at `(eta, gamma)`; returns the predicted and measured rates.
fn simulate(e: &Equilibrium, algo: Algo, eta: f64, gamma: f64, b: &Budget, index: u64) -> Result<(f64, Measured)> {
    match game_kind(algo) {
        Some("particle") => {
            let game = e.game();
            let m = m_gamma_unchecked(&e.payoff, &e.solution.a, &e.solution.x, &e.solution.b, &e.solution.y, gamma)?;
            let pred = predicted_rate(algo, &m, None, eta);
            let z_star = e.solution.z();
            let z0 = perturb(&game, &z_star, b.eps, e.seed, index);
            let steps = plan_steps(pred, b.decay, b.min, b.max);
            Ok((pred.unwrap_or(f64::NAN), measure(&game, algo, eta, gamma, steps, b.decay, &z0, &z_star)))
        }
        Some(_) => {
            let (game, m) = e.weight_game()?;
            let pred = predicted_rate(algo, &m, None, eta);
            let z_star: Vec<f64> = e.solution.a.iter().chain(&e.solution.b).copied().collect();
            let z0 = perturb(&game, &z_star, b.eps, e.seed, index);
            let steps = plan_steps(pred, b.decay, b.min, b.max);
            Ok((pred.unwrap_or(f64::NAN), measure(&game, algo, eta, gamma, steps, b.decay, &z0, &z_star)))
        }
        None => Ok((f64::NAN, unsupported())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub seed: u64,
    pub gamma: f64,
    pub eta: f64,
    pub mu_tilde: f64,
    /// `eta mu_tilde(M_gamma)`: the flow's rate per unit step.
    pub gf_rate: f64,
    pub algo: String,
    pub predicted_rate: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub steps: usize,
    pub status: String,
}

pub fn fig2_rate_vs_gamma(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let algos = cfg.algorithms_or(&[Algo::CpMf]);
    if algos.is_empty() {
        return Ok(RecipeOutput {
            seeds: vec![cfg.seed],
            ..Default::default()
        });
    }
    let e = equilibrium(cfg)?;
    let gammas = ExperimentConfig::grid_or(&cfg.gamma, Grid::log(1e-3, 1e-1, 9));
    let eta = ExperimentConfig::grid_or(&cfg.eta, Grid::Values(vec![DEFAULT_ETA]))[0];
    let budget = Budget::from(cfg);
    let mus: Vec<f64> = gammas
        .iter()
        .map(|&g| Ok(spectral_abscissa_min(&e.m_gamma(g)?)?))
        .collect::<Result<_>>()?;

    let points: Vec<(usize, Algo)> = (0..gammas.len()).flat_map(|i| algos.iter().map(move |&a| (i, a))).collect();
    let rows: Vec<GammaRow> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(i, algo))| {
            let gamma = gammas[i];
            let (pred, r) = simulate(&e, algo, eta, gamma, &budget, 1 + k as u64)?;
            Ok(GammaRow {
                seed: e.seed,
                gamma,
                eta,
                mu_tilde: mus[i],
                gf_rate: eta * mus[i],
                algo: algo.name().into(),
                predicted_rate: pred,
                rate: r.rate,
                r_squared: r.r_squared,
                steps: r.steps,
                status: r.status,
            })
        })
        .collect::<Result<_>>()?;

    let gf_rates: Vec<f64> = mus.iter().map(|m| eta * m).collect();
    let lo = gammas.iter().copied().fold(f64::INFINITY, f64::min);
    let asym_grid = log_grid(lo * 1e-2, lo * 1e-1, 3);
    let asym: Vec<f64> = asym_grid
        .iter()
        .map(|&g| Ok(spectral_abscissa_min(&e.m_gamma(g)?)?))
        .collect::<Result<_>>()?;
    let simulated: Vec<_> = algos
        .iter()
        .map(|a| {
            let (g, r): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.algo == a.name() && r.status == OK)
                .map(|r| (r.gamma, r.rate))
                .unzip();
            json!({"algo": a.name(), "ok_points": g.len(), "slope": loglog_slope(&g, &r)})
        })
        .collect();
    let summary = json!({
        "equilibrium": equilibrium_summary(&e),
        "gf_slope": loglog_slope(&gammas, &gf_rates),
        "asymptotic_gamma_grid": asym_grid,
        "asymptotic_slope": loglog_slope(&asym_grid, &asym),
        "simulated": simulated,
    });
    let plot = Plot::new("fig2_rate_vs_gamma", "fig2_rate_vs_gamma.csv", "rate against gamma", "gamma", "rate per step")
        .series("gamma", "gf_rate", "linespoints", "eta mu_tilde(M_gamma)")
        .series("gamma", "rate", "points pt 7", "simulated");
    Ok(RecipeOutput {
        tables: vec![Table::from_rows("fig2_rate_vs_gamma", &rows)?],
        plots: vec![plot],
        summary,
        seeds: vec![e.seed],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaRow {
    pub seed: u64,
    pub gamma: f64,
    pub eta: f64,
    pub algo: String,
    pub game: String,
    pub predicted_rate: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub steps: usize,
    pub status: String,
}

pub fn fig2_rate_vs_eta(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let algos = cfg.algorithms_or(&[Algo::Cpmp, Algo::Mp]);
    if algos.is_empty() {
        return Ok(RecipeOutput {
            seeds: vec![cfg.seed],
            ..Default::default()
        });
    }
    let e = equilibrium(cfg)?;
    let gammas = ExperimentConfig::grid_or(&cfg.gamma, Grid::Values(vec![DEFAULT_GAMMA]));
    let etas = ExperimentConfig::grid_or(&cfg.eta, Grid::log(1e-4, 1e-2, 5));
    let budget = Budget::from(cfg);
    let mut points = Vec::new();
    for &gamma in &gammas {
        for &algo in &algos {
            for &eta in &etas {
                points.push((gamma, algo, eta));
            }
        }
    }
    let rows: Vec<EtaRow> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(gamma, algo, eta))| {
            let (pred, r) = simulate(&e, algo, eta, gamma, &budget, 1 + k as u64)?;
            Ok(EtaRow {
                seed: e.seed,
                gamma,
                eta,
                algo: algo.name().into(),
                game: game_kind(algo).unwrap_or("none").into(),
                predicted_rate: pred,
                rate: r.rate,
                r_squared: r.r_squared,
                steps: r.steps,
                status: r.status,
            })
        })
        .collect::<Result<_>>()?;

    let mut slopes = Vec::new();
    for &gamma in &gammas {
        for a in &algos {
            let sel: Vec<&EtaRow> = rows.iter().filter(|r| r.algo == a.name() && r.gamma == gamma).collect();
            let (e1, r1): (Vec<f64>, Vec<f64>) = sel.iter().filter(|r| r.status == OK).map(|r| (r.eta, r.rate)).unzip();
            let (e2, r2): (Vec<f64>, Vec<f64>) = sel.iter().map(|r| (r.eta, r.predicted_rate)).unzip();
            slopes.push(json!({
                "algo": a.name(),
                "gamma": gamma,
                "ok_points": e1.len(),
                "slope": loglog_slope(&e1, &r1),
                "predicted_slope": loglog_slope(&e2, &r2),
            }));
        }
    }
    let plot = Plot::new("fig2_rate_vs_eta", "fig2_rate_vs_eta.csv", "rate against step size", "eta", "rate per step")
        .series("eta", "rate", "points pt 7", "simulated")
        .series("eta", "predicted_rate", "points pt 6", "linearisation");
    Ok(RecipeOutput {
        tables: vec![Table::from_rows("fig2_rate_vs_eta", &rows)?],
        plots: vec![plot],
        summary: json!({"equilibrium": equilibrium_summary(&e), "slopes": slopes}),
        seeds: vec![e.seed],
    })
}
