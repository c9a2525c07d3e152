use crate::game::{wrap_unit, Domain, GameModel};

use super::{AlgoConfig, DynamicsError};

/// Per-coordinate update rules for one algorithm on one game.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    /// Simplex blocks `[start, start + len)` updated multiplicatively.
    pub blocks: Vec<(usize, usize)>,
    pub entropic: Vec<bool>,
    pub torus: Vec<bool>,
    /// Step multiplier per coordinate.
    pub rate: Vec<f64>,
    /// Weight coordinate dividing the field at each position coordinate.
    pub precond: Vec<Option<usize>>,
}

impl Geometry {
    pub fn for_algo(game: &dyn GameModel, cfg: &AlgoConfig) -> Result<Self, DynamicsError> {
        let (n, m) = game.dims();
        let d = n + m;
        let mut g = Geometry {
            blocks: Vec::new(),
            entropic: vec![false; d],
            torus: game.torus_mask(),
            rate: vec![1.0; d],
            precond: vec![None; d],
        };
        if !cfg.algo.is_entropic() {
            return Ok(g);
        }
        match game.domain() {
            Domain::Euclidean => {
                return Err(DynamicsError::InvalidConfig(format!(
                    "{} needs a simplex or particle game",
                    cfg.algo
                )))
            }
            Domain::Simplex => g.blocks = vec![(0, n), (n, m)],
            Domain::Particle {
                n_particles: np,
                m_particles: mp,
            } => {
                g.blocks = vec![(0, np), (2 * np, mp)];
                if cfg.algo.is_conic() {
                    for i in 0..np {
                        g.rate[np + i] = cfg.gamma;
                        g.precond[np + i] = Some(i);
                    }
                    for j in 0..mp {
                        g.rate[2 * np + mp + j] = cfg.gamma;
                        g.precond[2 * np + mp + j] = Some(2 * np + j);
                    }
                }
            }
        }
        if cfg.algo.is_conic() && !matches!(game.domain(), Domain::Particle { .. }) {
            return Err(DynamicsError::InvalidConfig(format!("{} needs a particle game", cfg.algo)));
        }
        for &(s, l) in &g.blocks {
            for e in &mut g.entropic[s..s + l] {
                *e = true;
            }
        }
        Ok(g)
    }

    /// `rate_i g_i / z_{w(i)}`.
    pub fn direction(&self, g: &[f64], z: &[f64]) -> Vec<f64> {
        g.iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = v * self.rate[i];
                match self.precond[i] {
                    Some(w) => v / z[w],
                    None => v,
                }
            })
            .collect()
    }

    /// Mirror step from `z` along `-v`; multiplicative on simplex blocks.
    pub fn update(&self, z: &[f64], v: &[f64], eta: f64) -> Vec<f64> {
        let mut out: Vec<f64> = z.iter().zip(v).map(|(a, b)| a - eta * b).collect();
        for &(s, l) in &self.blocks {
            let vmin = v[s..s + l].iter().copied().fold(f64::INFINITY, f64::min);
            let mut total = 0.0;
            for i in s..s + l {
                out[i] = z[i] * (-eta * (v[i] - vmin)).exp();
                total += out[i];
            }
            for o in &mut out[s..s + l] {
                *o /= total;
            }
        }
        self.wrap(&mut out);
        out
    }

    /// Mirror-flow velocity `-Phi^{-1} P v` on simplex blocks, `-v` elsewhere.
    pub fn velocity(&self, z: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|x| -x).collect();
        for &(s, l) in &self.blocks {
            let mass: f64 = z[s..s + l].iter().sum();
            let mean = z[s..s + l].iter().zip(&v[s..s + l]).map(|(a, b)| a * b).sum::<f64>() / mass;
            for i in s..s + l {
                out[i] = -z[i] * (v[i] - mean);
            }
        }
        out
    }

    pub fn wrap(&self, z: &mut [f64]) {
        for (v, &t) in z.iter_mut().zip(&self.torus) {
            if t {
                *v = wrap_unit(*v);
            }
        }
    }

    /// Simplex coordinates must be at least `floor`.
    pub fn check_interior(&self, z: &[f64], floor: f64) -> Result<(), DynamicsError> {
        for (index, (&e, &value)) in self.entropic.iter().zip(z).enumerate() {
            if e && !(value >= floor && value > 0.0) {
                return Err(DynamicsError::DomainBoundary { index, value });
            }
        }
        Ok(())
    }
}
