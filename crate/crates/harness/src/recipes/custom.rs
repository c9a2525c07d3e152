use anyhow::{bail, Context, Result};
use minmax_core::dynamics::Algo;
use minmax_core::game::{jacobian, Domain, Game, GameModel};
use minmax_core::linalg::DenseMatrix;
use minmax_core::mirror::{effective_jacobian_at, m_gamma_unchecked, LinkGeometry};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Grid};
use crate::mne::{solve_mne, MneConfig};
use crate::output::{RecipeOutput, Table, OK};
use crate::sim::{measure, perturb, plan_steps, predicted_rate};

#[derive(Debug, Clone, Serialize)]
pub struct CustomRow {
    pub seed: u64,
    pub algo: String,
    pub eta: f64,
    pub gamma: f64,
    pub predicted_rate: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub diverged: bool,
    pub steps: usize,
    pub status: String,
}

fn default_algorithms(domain: Domain) -> Vec<Algo> {
    match domain {
        Domain::Euclidean => vec![Algo::SimGda, Algo::Eg, Algo::Pp],
        Domain::Simplex => vec![Algo::Mda, Algo::Mp],
        Domain::Particle { .. } => vec![Algo::Cpmp],
    }
}

/// Equilibrium of the configured game: `z_star`, the origin for Euclidean
/// quadratic games, or a solved mixed equilibrium for particle games.
fn equilibrium(cfg: &ExperimentConfig, game: &Game) -> Result<Vec<f64>> {
    if let Some(z) = &cfg.z_star {
        return Ok(z.clone());
    }
    match game {
        Game::Quadratic(q) if q.domain() == Domain::Euclidean => {
            let (n, m) = q.dims();
            Ok(vec![0.0; n + m])
        }
        Game::Particle(p) => {
            let mne = MneConfig {
                n: p.n_particles,
                m: p.m_particles,
                ..cfg.mne.clone().unwrap_or(MneConfig {
                    seed: cfg.seed,
                    grid: 64,
                    ..Default::default()
                })
            };
            Ok(solve_mne(&p.payoff, &mne).context("solving for the mixed equilibrium")?.z())
        }
        _ => bail!("recipe `custom` needs `z_star` for this game"),
    }
}

/// Linearisation used for the predicted rate, when one applies.
fn linearisation(game: &Game, algo: Algo, z: &[f64], gamma: f64) -> Option<(DenseMatrix, Option<usize>)> {
    match (game, game.domain()) {
        (_, Domain::Euclidean) if !algo.is_entropic() => Some((jacobian(game, z), Some(game.dims().0))),
        (_, Domain::Simplex) if algo.is_entropic() => {
            let link = LinkGeometry::for_domain(Domain::Simplex, game.dims());
            effective_jacobian_at(game, &link, z).ok().map(|e| (e.reduced, None))
        }
        (Game::Particle(p), _) if algo.is_conic() => {
            let (n, m) = (p.n_particles, p.m_particles);
            let (a, x, b, y) = (&z[..n], &z[n..2 * n], &z[2 * n..2 * n + m], &z[2 * n + m..]);
            m_gamma_unchecked(&p.payoff, a, x, b, y, gamma).ok().map(|m| (m, None))
        }
        _ => None,
    }
}

pub fn custom(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let spec = cfg.game.as_ref().context("recipe `custom` needs a `game`")?;
    let game = spec.build()?;
    let algos = cfg.algorithms_or(&default_algorithms(game.domain()));
    if algos.is_empty() {
        return Ok(RecipeOutput {
            seeds: vec![cfg.seed],
            ..Default::default()
        });
    }
    let z_star = equilibrium(cfg, &game)?;
    let (n, m) = game.dims();
    let dim = match game.domain() {
        Domain::Particle { .. } => 2 * (n + m),
        _ => n + m,
    };
    if z_star.len() != dim {
        bail!("z_star has {} entries, expected {dim}", z_star.len());
    }
    let etas = ExperimentConfig::grid_or(&cfg.eta, Grid::Values(vec![1e-2]));
    let gammas = ExperimentConfig::grid_or(&cfg.gamma, Grid::Values(vec![1.0]));
    let min_steps = cfg.steps.unwrap_or(10_000);
    let max_steps = cfg.max_steps.unwrap_or(10_000_000).max(min_steps);
    let decay = cfg.target_decay.unwrap_or(10.0);
    let eps = cfg.perturbation.unwrap_or(1e-3);

    let mut points = Vec::new();
    for &algo in &algos {
        for &eta in &etas {
            for &gamma in &gammas {
                points.push((algo, eta, gamma));
            }
        }
    }
    let rows: Vec<CustomRow> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(algo, eta, gamma))| {
            let pred = linearisation(&game, algo, &z_star, gamma).and_then(|(m, split)| predicted_rate(algo, &m, split, eta));
            let steps = plan_steps(pred, decay, min_steps, max_steps);
            let z0 = perturb(&game, &z_star, eps, cfg.seed, 1 + k as u64);
            let r = measure(&game, algo, eta, gamma, steps, decay, &z0, &z_star);
            CustomRow {
                seed: cfg.seed,
                algo: algo.name().into(),
                eta,
                gamma,
                predicted_rate: pred.unwrap_or(f64::NAN),
                rate: r.rate,
                r_squared: r.r_squared,
                diverged: r.diverged,
                steps: r.steps,
                status: r.status,
            }
        })
        .collect();
    let summary = json!({
        "z_star": z_star,
        "ok_points": rows.iter().filter(|r| r.status == OK).count(),
    });
    Ok(RecipeOutput {
        tables: vec![Table::from_rows("custom", &rows)?],
        plots: Vec::new(),
        summary,
        seeds: vec![cfg.seed],
    })
}
