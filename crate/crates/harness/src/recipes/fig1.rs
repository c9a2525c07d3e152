//! Regularised random bilinear games: simulated rates and the spectrum
//! along the regularisation curve.

use anyhow::{Context, Result};
use minmax_core::dynamics::Algo;
use minmax_core::game::{antisymmetric_from, make_reg_bilinear};
use minmax_core::linalg::{eigenvalues, match_nearest, op_norm, spectral_abscissa_min, DenseMatrix, EigenSystem, C64};
use minmax_core::perturbation::{eigenvalue_derivatives, normal_expansion_constants};
use minmax_core::rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Grid};
use crate::output::{Plot, RecipeOutput, Table, OK};
use crate::sim::{measure, perturb, plan_steps, predicted_rate};

pub const DEFAULT_DIM: usize = 2;
pub const DEFAULT_DRAWS: usize = 5;
pub const DEFAULT_ETA: f64 = 1e-2;
pub const DEFAULT_MIN_STEPS: usize = 100_000;
pub const DEFAULT_MAX_STEPS: usize = 20_000_000;
pub const DEFAULT_DECAY: f64 = 10.0;
pub const DEFAULT_PERTURBATION: f64 = 1e-3;

pub fn default_alpha() -> Grid {
    Grid::log(1e-3, 1.0, 7)
}

/// Coupling matrix of draw `seed`.
pub fn draw_p(seed: u64, d: usize) -> DenseMatrix {
    rng::gaussian_matrix(&mut rng::stream(seed, 0), d, d)
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub draw: usize,
    pub seed: u64,
    pub algo: String,
    pub alpha: f64,
    pub eta: f64,
    pub mu_tilde: f64,
    pub predicted_rate: f64,
    pub rate: f64,
    pub rate_over_eta: f64,
    pub rel_error: f64,
    pub r_squared: f64,
    pub steps: usize,
    pub status: String,
}

pub fn fig1_rates(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let seeds = cfg.draw_seeds(DEFAULT_DRAWS);
    let algos = cfg.algorithms_or(&[Algo::AltGdaStd]);
    if algos.is_empty() {
        return Ok(RecipeOutput {
            seeds,
            ..Default::default()
        });
    }
    let d = cfg.dim.unwrap_or(DEFAULT_DIM);
    let alphas = ExperimentConfig::grid_or(&cfg.alpha, default_alpha());
    let etas = ExperimentConfig::grid_or(&cfg.eta, Grid::Values(vec![DEFAULT_ETA]));
    let min_steps = cfg.steps.unwrap_or(DEFAULT_MIN_STEPS);
    let max_steps = cfg.max_steps.unwrap_or(DEFAULT_MAX_STEPS).max(min_steps);
    let decay = cfg.target_decay.unwrap_or(DEFAULT_DECAY);
    let eps = cfg.perturbation.unwrap_or(DEFAULT_PERTURBATION);

    let mut points = Vec::new();
    for (draw, &seed) in seeds.iter().enumerate() {
        for &alpha in &alphas {
            for &eta in &etas {
                for &algo in &algos {
                    points.push((draw, seed, alpha, eta, algo));
                }
            }
        }
    }
    let rows: Vec<RateRow> = points
        .par_iter()
        .map(|&(draw, seed, alpha, eta, algo)| {
            let game = make_reg_bilinear(draw_p(seed, d), alpha).expect("square coupling");
            let m = game.m();
            let mu = spectral_abscissa_min(&m).unwrap_or(f64::NAN);
            let pred = predicted_rate(algo, &m, Some(d), eta);
            let steps = plan_steps(pred, decay, min_steps, max_steps);
            let z_star = vec![0.0; 2 * d];
            let z0 = perturb(&game, &z_star, eps, seed, 1);
            let r = measure(&game, algo, eta, 1.0, steps, decay, &z0, &z_star);
            RateRow {
                draw,
                seed,
                algo: algo.name().into(),
                alpha,
                eta,
                mu_tilde: mu,
                predicted_rate: pred.unwrap_or(f64::NAN),
                rate: r.rate,
                rate_over_eta: r.rate / eta,
                rel_error: (r.rate / eta - mu).abs() / mu,
                r_squared: r.r_squared,
                steps: r.steps,
                status: r.status,
            }
        })
        .collect();

    let per_algo: Vec<_> = algos
        .iter()
        .map(|a| {
            let ok: Vec<&RateRow> = rows.iter().filter(|r| r.algo == a.name() && r.status == OK).collect();
            let small = ok.iter().filter(|r| r.alpha <= 0.1 + 1e-12).map(|r| r.rel_error).fold(0.0, f64::max);
            json!({"algo": a.name(), "ok_points": ok.len(), "max_rel_error_alpha_le_0_1": small})
        })
        .collect();
    let plot = Plot::new("fig1_rates", "fig1_rates.csv", "observed rate / eta against mu_tilde", "alpha", "rate / eta")
        .series("alpha", "rate_over_eta", "points pt 7", "observed")
        .series("alpha", "mu_tilde", "points pt 6", "predicted");
    Ok(RecipeOutput {
        tables: vec![Table::from_rows("fig1_rates", &rows)?],
        plots: vec![plot],
        summary: json!({"dim": d, "algorithms": per_algo}),
        seeds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub seed: u64,
    pub alpha: f64,
    pub index: usize,
    pub exact_re: f64,
    pub exact_im: f64,
    pub first_re: f64,
    pub first_im: f64,
    pub second_re: f64,
    pub second_im: f64,
    pub error: f64,
    pub remainder_bound: f64,
    /// `alpha` lies within the certified radius.
    pub certified: bool,
    pub status: String,
}

/// Spectrum of `A + alpha Diag(e_1 e_1^T, 0)` against its second-order
/// expansion at `alpha = 0`.
pub fn spectrum_rows(seed: u64, d: usize, alphas: &[f64]) -> Result<Vec<SpectrumRow>> {
    let p = draw_p(seed, d);
    let m0 = antisymmetric_from(&p);
    let mut m1 = DenseMatrix::zeros(2 * d, 2 * d);
    m1[(0, 0)] = C64::new(1.0, 0.0);
    let m2 = DenseMatrix::zeros(2 * d, 2 * d);
    let es = EigenSystem::new(&m0).context("eigensystem of the antisymmetric part")?;
    let der = eigenvalue_derivatives(&es, &m1, &m2).context("eigenvalue derivatives")?;
    let (radius, c) = normal_expansion_constants(es.gap(), 2 * d, op_norm(&m1), op_norm(&m2));
    let mut rows = Vec::new();
    for &alpha in alphas {
        let first: Vec<C64> = (0..2 * d).map(|k| es.values[k] + der.d1[k] * alpha).collect();
        let second: Vec<C64> = (0..2 * d).map(|k| first[k] + der.d2[k] * (0.5 * alpha * alpha)).collect();
        let m = &m0 + &m1.scale_real(alpha);
        let exact_all = eigenvalues(&m)?;
        let idx = match_nearest(&second, &exact_all);
        let bound = c * alpha.abs().powi(3);
        let certified = alpha.abs() <= radius;
        for k in 0..2 * d {
            let ex = exact_all[idx[k]];
            let error = (ex - second[k]).norm();
            rows.push(SpectrumRow {
                seed,
                alpha,
                index: k,
                exact_re: ex.re,
                exact_im: ex.im,
                first_re: first[k].re,
                first_im: first[k].im,
                second_re: second[k].re,
                second_im: second[k].im,
                error,
                remainder_bound: bound,
                certified,
                status: if certified && error > bound {
                    "bound_violated".into()
                } else {
                    OK.into()
                },
            });
        }
    }
    Ok(rows)
}

pub fn fig1_spectrum(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let seeds = cfg.draw_seeds(1);
    let d = cfg.dim.unwrap_or(3);
    let alphas = ExperimentConfig::grid_or(&cfg.alpha, default_alpha());
    let per_seed: Vec<Result<Vec<SpectrumRow>>> = seeds.par_iter().map(|&s| spectrum_rows(s, d, &alphas)).collect();
    let mut rows = Vec::new();
    for r in per_seed {
        rows.extend(r?);
    }
    let certified: Vec<&SpectrumRow> = rows.iter().filter(|r| r.certified).collect();
    let summary = json!({
        "dim": d,
        "certified_points": certified.len(),
        "max_error_over_bound": certified
            .iter()
            .filter(|r| r.remainder_bound > 0.0)
            .map(|r| r.error / r.remainder_bound)
            .fold(0.0, f64::max),
    });
    let plot = Plot::new("fig1_spectrum", "fig1_spectrum.csv", "eigenvalues along the regularisation curve", "Re", "Im")
        .linear_axes()
        .series("exact_re", "exact_im", "points pt 7", "exact")
        .series("second_re", "second_im", "points pt 6", "second order");
    Ok(RecipeOutput {
        tables: vec![Table::from_rows("fig1_spectrum", &rows)?],
        plots: vec![plot],
        summary,
        seeds,
    })
}
