//! Experiment recipes. Each returns its tables in grid order; nothing is
//! written until [`run_recipe`] hands the output to [`write_all`].

use std::path::Path;
use std::time::Instant;

use anyhow::Result;

use crate::config::{ExperimentConfig, Recipe};
use crate::output::{write_all, Manifest, RecipeOutput};
use crate::rmt::{rmt_sweep, RmtConfig, SpectrumKind};

pub mod custom;
pub mod fig1;
pub mod fig2;

/// Default sweep: evenly spaced spectrum on `[1, 2]` at `n = 8, 16, 32`.
pub fn default_rmt(seed: u64) -> RmtConfig {
    RmtConfig {
        seed,
        ..RmtConfig::new(SpectrumKind::Linear { low: 1.0, high: 2.0 }, vec![8, 16, 32])
    }
}

pub fn build(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    cfg.validate()?;
    match cfg.recipe {
        Recipe::Fig1Rates => fig1::fig1_rates(cfg),
        Recipe::Fig1Spectrum => fig1::fig1_spectrum(cfg),
        Recipe::Fig2RateVsGamma => fig2::fig2_rate_vs_gamma(cfg),
        Recipe::Fig2RateVsEta => fig2::fig2_rate_vs_eta(cfg),
        Recipe::RmtSweep => {
            if cfg.algorithms.as_ref().is_some_and(|a| a.is_empty()) {
                return Ok(RecipeOutput {
                    seeds: vec![cfg.seed],
                    ..Default::default()
                });
            }
            rmt_sweep(&cfg.rmt.clone().unwrap_or_else(|| default_rmt(cfg.seed)))
        }
        Recipe::Custom => custom::custom(cfg),
    }
}

/// Runs the recipe and writes its CSVs, plot scripts and manifest to `dir`.
pub fn run_recipe(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let out = build(cfg)?;
    let config = serde_json::to_value(cfg)?;
    write_all(dir, cfg.recipe.name(), config, &out, cfg.plot, start.elapsed().as_secs_f64())
}
