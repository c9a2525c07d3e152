use std::path::PathBuf;

use anyhow::{bail, Result};
use minmax_core::dynamics::Algo;
use minmax_core::game::{GameSpec, TrigSource};
use minmax_core::stats::log_grid;
use serde::{Deserialize, Serialize};

use crate::mne::MneConfig;
use crate::rmt::RmtConfig;

/// Parameter grid: explicit values or `{"log": [lo, hi], "count": k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Log { log: [f64; 2], count: usize },
}

impl Grid {
    pub fn log(lo: f64, hi: f64, count: usize) -> Self {
        Grid::Log { log: [lo, hi], count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Log { log, count } => log_grid(log[0], log[1], *count),
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            bail!("grid `{name}` is empty");
        }
        if let Grid::Log { log, .. } = self {
            if !(log[0] > 0.0 && log[1] >= log[0]) {
                bail!("grid `{name}` needs 0 < lo <= hi");
            }
        }
        if v.iter().any(|x| !x.is_finite()) {
            bail!("grid `{name}` has non-finite values");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Fig1Rates,
    Fig1Spectrum,
    Fig2RateVsGamma,
    Fig2RateVsEta,
    RmtSweep,
    Custom,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Fig1Rates => "fig1_rates",
            Recipe::Fig1Spectrum => "fig1_spectrum",
            Recipe::Fig2RateVsGamma => "fig2_rate_vs_gamma",
            Recipe::Fig2RateVsEta => "fig2_rate_vs_eta",
            Recipe::RmtSweep => "rmt_sweep",
            Recipe::Custom => "custom",
        }
    }
}

/// A recipe run. Unset fields take recipe-specific defaults; an explicitly
/// empty `algorithms` list produces a manifest only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub recipe: Recipe,
    #[serde(default)]
    pub game: Option<GameSpec>,
    #[serde(default)]
    pub algorithms: Option<Vec<Algo>>,
    #[serde(default)]
    pub alpha: Option<Grid>,
    #[serde(default)]
    pub eta: Option<Grid>,
    #[serde(default)]
    pub gamma: Option<Grid>,
    /// Base seed; `seeds` lists per-draw seeds explicitly.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub draws: Option<usize>,
    /// Matrix dimension for random bilinear games.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Minimum and maximum iteration counts per run.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    /// Runs stop once the distance has decayed by `exp(-target_decay)`.
    #[serde(default)]
    pub target_decay: Option<f64>,
    /// Initial distance to the equilibrium.
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub payoff: Option<TrigSource>,
    #[serde(default)]
    pub particles: Option<[usize; 2]>,
    #[serde(default)]
    pub mne: Option<MneConfig>,
    #[serde(default)]
    pub rmt: Option<RmtConfig>,
    #[serde(default)]
    pub z_star: Option<Vec<f64>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub plot: bool,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(recipe: Recipe) -> Self {
        Self {
            recipe,
            game: None,
            algorithms: None,
            alpha: None,
            eta: None,
            gamma: None,
            seed: 0,
            seeds: None,
            draws: None,
            dim: None,
            steps: None,
            max_steps: None,
            target_decay: None,
            perturbation: None,
            payoff: None,
            particles: None,
            mne: None,
            rmt: None,
            z_star: None,
            output: None,
            plot: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("alpha", &self.alpha), ("eta", &self.eta), ("gamma", &self.gamma)] {
            if let Some(g) = g {
                g.validate(name)?;
            }
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            bail!("`seeds` is empty");
        }
        if self.draws == Some(0) {
            bail!("`draws` must be positive");
        }
        if let Some(p) = self.perturbation {
            if !(p > 0.0 && p.is_finite()) {
                bail!("`perturbation` must be positive");
            }
        }
        if self.recipe == Recipe::Custom && self.game.is_none() {
            bail!("recipe `custom` needs a `game`");
        }
        Ok(())
    }

    /// Per-draw seeds: `seeds` if given, else `seed, seed + 1, ...`.
    pub fn draw_seeds(&self, default_draws: usize) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.draws.unwrap_or(default_draws) as u64).map(|i| self.seed + i).collect(),
        }
    }

    pub fn algorithms_or(&self, default: &[Algo]) -> Vec<Algo> {
        self.algorithms.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn grid_or(grid: &Option<Grid>, default: Grid) -> Vec<f64> {
        grid.clone().unwrap_or(default).values()
    }
}
