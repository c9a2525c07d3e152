use serde::{Deserialize, Serialize};

use crate::game::{torus_diff, Domain, GameModel};

use super::fit::FIT_FLOOR;
use super::particles::match_particles;
use super::step::Stepper;
use super::{Algo, AlgoConfig, DynamicsError};

/// Iterates with a larger Euclidean norm count as divergent.
pub const BLOWUP_NORM: f64 = 1e12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub algo: Algo,
    pub eta: f64,
    pub gamma: f64,
    /// Step indices of the recorded samples, starting at 0.
    pub ks: Vec<usize>,
    pub distances: Vec<f64>,
    /// Recorded iterates when requested.
    pub iterates: Vec<Vec<f64>>,
    pub diverged: bool,
    pub final_state: Vec<f64>,
}

/// `||z - z*||` with the torus metric on periodic coordinates; particle
/// games are matched up to relabelling.
pub fn distance(game: &dyn GameModel, z: &[f64], z_star: &[f64]) -> Result<f64, DynamicsError> {
    if z.len() != z_star.len() {
        return Err(DynamicsError::InvalidConfig("point dimensions differ".into()));
    }
    if let Domain::Particle {
        n_particles,
        m_particles,
    } = game.domain()
    {
        return match_particles(n_particles, m_particles, z, z_star);
    }
    let mask = game.torus_mask();
    Ok(z.iter()
        .zip(z_star)
        .zip(&mask)
        .map(|((a, b), &t)| if t { torus_diff(*a, *b) } else { a - b }.powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Runs `cfg.steps` updates from `z0`, recording `||z^k - z*||` every
/// `cfg.stride` steps. Stops early on blowup, below the distance floor, or
/// once the target decay is reached.
pub fn run(game: &dyn GameModel, cfg: &AlgoConfig, z0: &[f64], z_star: &[f64]) -> Result<Trajectory, DynamicsError> {
    let mut st = Stepper::new(game, cfg, z0)?;
    let mut t = Trajectory {
        algo: cfg.algo,
        eta: cfg.eta,
        gamma: cfg.gamma,
        ks: Vec::new(),
        distances: Vec::new(),
        iterates: Vec::new(),
        diverged: false,
        final_state: Vec::new(),
    };
    let record = |t: &mut Trajectory, k: usize, z: Vec<f64>| -> Result<f64, DynamicsError> {
        let d = distance(game, &z, z_star)?;
        t.ks.push(k);
        t.distances.push(d);
        if cfg.keep_iterates {
            t.iterates.push(z);
        }
        Ok(d)
    };
    let d0 = record(&mut t, 0, st.current())?;
    let goal = cfg.target_decay.map(|g| d0 * (-g).exp());
    if d0 >= FIT_FLOOR {
        for k in 1..=cfg.steps {
            match st.advance() {
                Ok(()) => {}
                Err(DynamicsError::NumericalBlowup { .. }) => {
                    t.diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            if k % cfg.stride == 0 || k == cfg.steps {
                let d = record(&mut t, k, st.current())?;
                if !d.is_finite() {
                    t.diverged = true;
                    break;
                }
                if d < FIT_FLOOR || goal.is_some_and(|g| d < g) {
                    break;
                }
            }
        }
    }
    t.final_state = st.current();
    Ok(t)
}

/// RK4 integration of `gf`, `mf` or `cp_mf` with step `cfg.eta`.
pub fn integrate_flow(
    game: &dyn GameModel,
    cfg: &AlgoConfig,
    z0: &[f64],
    z_star: &[f64],
) -> Result<Trajectory, DynamicsError> {
    if !cfg.algo.is_flow() {
        return Err(DynamicsError::InvalidConfig(format!("{} is not a flow", cfg.algo)));
    }
    run(game, cfg, z0, z_star)
}
