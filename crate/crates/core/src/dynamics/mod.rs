//! Discrete algorithms, continuous flows and exponential rate fitting.
//!
//! Every method acts on the concatenated state of the game. Euclidean
//! methods use the skewed field `g` directly; entropic methods replace the
//! update on each simplex block by a multiplicative step; conic particle
//! methods additionally move positions with step `gamma * eta` along
//! `Diag(1/a) grad_x F`.

mod fit;
mod geometry;
mod particles;
mod run;
mod step;

use serde::{Deserialize, Serialize};

use crate::linalg::LinalgError;
use crate::mirror::MirrorError;

pub use fit::{fit_rate, RateFit, FIT_FLOOR, MIN_SAMPLES};
pub use particles::match_particles;
pub use run::{distance, integrate_flow, run, Trajectory, BLOWUP_NORM};
pub use step::{step, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    SimGda,
    AltGdaStd,
    AltGdaSym,
    Eg,
    Pp,
    Mda,
    Mp,
    BregmanPp,
    Cpmp,
    Gf,
    Mf,
    CpMf,
}

impl Algo {
    pub const ALL: [Algo; 12] = [
        Algo::SimGda,
        Algo::AltGdaStd,
        Algo::AltGdaSym,
        Algo::Eg,
        Algo::Pp,
        Algo::Mda,
        Algo::Mp,
        Algo::BregmanPp,
        Algo::Cpmp,
        Algo::Gf,
        Algo::Mf,
        Algo::CpMf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::SimGda => "sim_gda",
            Algo::AltGdaStd => "alt_gda_std",
            Algo::AltGdaSym => "alt_gda_sym",
            Algo::Eg => "eg",
            Algo::Pp => "pp",
            Algo::Mda => "mda",
            Algo::Mp => "mp",
            Algo::BregmanPp => "bregman_pp",
            Algo::Cpmp => "cpmp",
            Algo::Gf => "gf",
            Algo::Mf => "mf",
            Algo::CpMf => "cp_mf",
        }
    }

    pub fn is_flow(self) -> bool {
        matches!(self, Algo::Gf | Algo::Mf | Algo::CpMf)
    }

    /// Uses the entropy link on simplex blocks.
    pub fn is_entropic(self) -> bool {
        matches!(self, Algo::Mda | Algo::Mp | Algo::BregmanPp | Algo::Mf | Algo::Cpmp | Algo::CpMf)
    }

    /// Moves particle positions with the `gamma`-scaled preconditioned field.
    pub fn is_conic(self) -> bool {
        matches!(self, Algo::Cpmp | Algo::CpMf)
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_gamma() -> f64 {
    1.0
}
fn default_stride() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-12
}
fn default_iters() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algo: Algo,
    /// Step size, or the integration step for flows.
    pub eta: f64,
    /// Position to weight timescale ratio of conic methods.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub steps: usize,
    /// Record a distance every `stride` steps.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_tol")]
    pub implicit_tol: f64,
    #[serde(default = "default_iters")]
    pub implicit_max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Stop once `d_k < d_0 exp(-target_decay)`.
    #[serde(default)]
    pub target_decay: Option<f64>,
    #[serde(default)]
    pub keep_iterates: bool,
}

impl AlgoConfig {
    pub fn new(algo: Algo, eta: f64, steps: usize) -> Self {
        Self {
            algo,
            eta,
            gamma: 1.0,
            steps,
            stride: 1,
            implicit_tol: 1e-12,
            implicit_max_iters: 100,
            seed: 0,
            target_decay: None,
            keep_iterates: false,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_target_decay(mut self, target: f64) -> Self {
        self.target_decay = Some(target);
        self
    }

    pub fn keeping_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("gamma = {} must be positive", self.gamma)));
        }
        if self.stride == 0 {
            return Err(DynamicsError::InvalidConfig("stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("implicit solve failed after {iters} iterations (residual {residual:.3e})")]
    ImplicitSolveFailed { iters: usize, residual: f64 },
    #[error("iterate norm {norm:.3e} exceeds the blowup threshold")]
    NumericalBlowup { norm: f64 },
    #[error("coordinate {index} = {value:.3e} left the open simplex")]
    DomainBoundary { index: usize, value: f64 },
    #[error("{usable} usable samples, need {needed}")]
    InsufficientSamples { usable: usize, needed: usize },
    #[error("log-distance fit has R^2 = {r_squared:.3}")]
    InsufficientDecay { r_squared: f64 },
    #[error("particle counts differ: {0}")]
    CountMismatch(String),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
