//! Shared pieces of simulated rate measurements.

use minmax_core::dynamics::{fit_rate, run, Algo, AlgoConfig, DynamicsError};
use minmax_core::game::{wrap_unit, GameModel};
use minmax_core::linalg::{eigenvalues, spectral_radius, DenseMatrix, C64};
use minmax_core::mirror::LinkGeometry;
use minmax_core::rng;
use serde::{Deserialize, Serialize};

use crate::output::OK;

/// Point at distance `eps` from `z_star` along a random direction that
/// keeps every simplex constraint.
pub fn perturb(game: &dyn GameModel, z_star: &[f64], eps: f64, seed: u64, index: u64) -> Vec<f64> {
    let mut g = rng::stream(seed, index);
    let mut v = rng::gaussian_vec(&mut g, z_star.len());
    let link = LinkGeometry::for_domain(game.domain(), game.dims());
    let c = &link.constraints;
    for row in 0..c.rows() {
        let idx: Vec<usize> = (0..c.cols()).filter(|&j| c[(row, j)].re != 0.0).collect();
        let mean = idx.iter().map(|&j| v[j]).sum::<f64>() / idx.len() as f64;
        for &j in &idx {
            v[j] -= mean;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mask = game.torus_mask();
    z_star
        .iter()
        .zip(&v)
        .zip(&mask)
        .map(|((z, d), &t)| {
            let w = z + eps * d / norm;
            if t {
                wrap_unit(w)
            } else {
                w
            }
        })
        .collect()
}

/// RK4 stability polynomial `1 + z + z^2/2 + z^3/6 + z^4/24`.
fn rk4_factor(z: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    one + z * (one + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
}

/// Per-step rate `1 - rho(T)` of the linearisation of `algo` at a fixed point
/// whose (whitened) Jacobian is `m`. Alternating methods need the split `n`
/// between the players.
pub fn predicted_rate(algo: Algo, m: &DenseMatrix, n: Option<usize>, eta: f64) -> Option<f64> {
    if matches!(algo, Algo::AltGdaStd | Algo::AltGdaSym) {
        let n = n?;
        let d = m.rows();
        let mxx = m.block(0, 0, n, n);
        let mxy = m.block(0, n, n, d - n);
        let myx = m.block(n, 0, d - n, n);
        let myy = m.block(n, n, d - n, d - n);
        let ix = &DenseMatrix::identity(n) - &mxx.scale_real(eta);
        let mut t = DenseMatrix::zeros(d, d);
        t.set_block(0, 0, &ix);
        t.set_block(0, n, &mxy.scale_real(-eta));
        t.set_block(n, 0, &myx.matmul(&ix).scale_real(-eta));
        let yy = &(&DenseMatrix::identity(d - n) - &myy.scale_real(eta)) + &myx.matmul(&mxy).scale_real(eta * eta);
        t.set_block(n, n, &yy);
        return spectral_radius(&t).ok().map(|r| 1.0 - r);
    }
    let ev = eigenvalues(m).ok()?;
    let one = C64::new(1.0, 0.0);
    let modulus = |l: &C64| -> f64 {
        let z = l * eta;
        match algo {
            Algo::SimGda | Algo::Mda => (one - z).norm(),
            Algo::Eg | Algo::Mp | Algo::Cpmp => (one - z + z * z).norm(),
            Algo::Pp | Algo::BregmanPp => 1.0 / (one + z).norm(),
            Algo::Gf | Algo::Mf | Algo::CpMf => rk4_factor(-z).norm(),
            Algo::AltGdaStd | Algo::AltGdaSym => unreachable!(),
        }
    };
    Some(1.0 - ev.iter().map(modulus).fold(0.0, f64::max))
}

/// Iteration budget for a run expected to contract at `rate` per step.
pub fn plan_steps(rate: Option<f64>, decay: f64, min: usize, max: usize) -> usize {
    match rate {
        Some(r) if r > 0.0 => ((1.5 * decay / r).ceil() as usize).clamp(min, max),
        _ => max,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub rate: f64,
    pub r_squared: f64,
    pub steps: usize,
    pub diverged: bool,
    pub status: String,
}

/// Runs `algo` from `z0` and fits the exponential rate of `||z^k - z*||`.
/// Samples are thinned to at most about 4000.
pub fn measure(
    game: &dyn GameModel,
    algo: Algo,
    eta: f64,
    gamma: f64,
    steps: usize,
    decay: f64,
    z0: &[f64],
    z_star: &[f64],
) -> Measured {
    let cfg = AlgoConfig::new(algo, eta, steps)
        .with_gamma(gamma)
        .with_stride((steps / 4000).max(1))
        .with_target_decay(decay);
    let mut out = Measured {
        rate: f64::NAN,
        r_squared: f64::NAN,
        steps: 0,
        diverged: false,
        status: OK.into(),
    };
    let traj = match run(game, &cfg, z0, z_star) {
        Ok(t) => t,
        Err(e) => {
            out.status = status_of(&e);
            return out;
        }
    };
    out.steps = traj.ks.last().copied().unwrap_or(0);
    out.diverged = traj.diverged;
    if traj.diverged {
        out.status = "diverged".into();
        return out;
    }
    match fit_rate(&traj) {
        Ok(f) => {
            out.rate = f.r;
            out.r_squared = f.r_squared;
        }
        Err(e) => out.status = status_of(&e),
    }
    out
}

pub fn status_of(e: &DynamicsError) -> String {
    match e {
        DynamicsError::NumericalBlowup { .. } => "diverged".into(),
        DynamicsError::InsufficientDecay { .. } => "insufficient_decay".into(),
        DynamicsError::InsufficientSamples { .. } => "insufficient_samples".into(),
        DynamicsError::DomainBoundary { .. } => "domain_boundary".into(),
        DynamicsError::ImplicitSolveFailed { .. } => "implicit_solve_failed".into(),
        other => format!("error: {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use minmax_core::game::QuadraticGame;

    #[test]
    fn perturbation_keeps_simplex_sums() {
        let p = DenseMatrix::from_real(2, 3, &[1.0, -1.0, 0.5, 0.2, 0.3, -0.4]).unwrap();
        let game = QuadraticGame::simplex_bilinear(p).unwrap();
        let z = vec![0.5, 0.5, 0.2, 0.3, 0.5];
        let w = perturb(&game, &z, 1e-3, 1, 0);
        assert!((w[0] + w[1] - 1.0).abs() < 1e-15 && (w[2] + w[3] + w[4] - 1.0).abs() < 1e-15);
        let d: f64 = w.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((d - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn predictions_on_a_rotation() {
        let m = DenseMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let eta = 0.1;
        let sim = predicted_rate(Algo::SimGda, &m, None, eta).unwrap();
        assert!((sim - (1.0 - (1.0f64 + eta * eta).sqrt())).abs() < 1e-14);
        let pp = predicted_rate(Algo::Pp, &m, None, eta).unwrap();
        assert!((pp - (1.0 - 1.0 / (1.0f64 + eta * eta).sqrt())).abs() < 1e-14);
        // Alternating GDA is volume preserving on a pure rotation.
        let alt = predicted_rate(Algo::AltGdaStd, &m, Some(1), eta).unwrap();
        assert!(alt.abs() < 1e-12);
        assert!(predicted_rate(Algo::AltGdaStd, &m, None, eta).is_none());
    }
}
