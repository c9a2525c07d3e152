//! Subcommands of the command-line interface. Each reads one JSON config
//! and writes its results under an output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use minmax_core::conditions::check_conditions;
use minmax_core::dynamics::{fit_rate, run, AlgoConfig};
use minmax_core::game::{GameModel, GameSpec, ParticleGame, TrigSource};
use minmax_core::linalg::{spectral_abscissa_min, DenseMatrix};
use minmax_core::mirror::m_gamma;
use minmax_core::perturbation::{check_expansion, MatrixCurve, PerturbationError};
use minmax_core::update::{rho_expansion, UpdateAlgo};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, Grid};
use crate::mne::{solve_mne, MneConfig};
use crate::output::{write_all, RecipeOutput, Table, OK};
use crate::recipes::run_recipe;
use crate::rmt::{rmt_sweep, RmtConfig};
use crate::sim::{perturb, status_of};

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn dir(&self, config: Option<&PathBuf>, default: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.cloned())
            .unwrap_or_else(|| Path::new("out").join(default))
    }
}

/// Files written and the number of grid points whose status is not `ok`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub point_failures: usize,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn finish(dir: PathBuf, recipe: &str, config: serde_json::Value, out: RecipeOutput, start: Instant) -> Result<Outcome> {
    let m = write_all(&dir, recipe, config, &out, true, start.elapsed().as_secs_f64())?;
    Ok(Outcome {
        dir,
        point_failures: m.point_failures,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub p: DenseMatrix,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Conditions for `min Re lambda(M) > 0`, written to `conditions.json`.
pub fn analyze(path: &Path, o: &Overrides) -> Result<Outcome> {
    let cfg: AnalyzeConfig = read_json(path)?;
    let report = check_conditions(&cfg.q, &cfg.r, &cfg.p, cfg.tol)?;
    let dir = o.dir(cfg.output.as_ref(), "analyze");
    write_json(&dir, "conditions.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome {
        dir,
        point_failures: usize::from(!report.all_agree()),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    pub curve: MatrixCurve,
    pub alphas: Grid,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct ExpandRow {
    alpha: f64,
    index: usize,
    base_re: f64,
    base_im: f64,
    approx_re: f64,
    approx_im: f64,
    exact_re: f64,
    exact_im: f64,
    error: f64,
    remainder_bound: f64,
    validity_radius: f64,
    status: String,
}

/// Second-order spectral expansion along a matrix curve, written to `expansion.csv`.
pub fn expand(path: &Path, o: &Overrides) -> Result<Outcome> {
    let start = Instant::now();
    let cfg: ExpandConfig = read_json(path)?;
    cfg.alphas.validate("alphas")?;
    let mut rows = Vec::new();
    for alpha in cfg.alphas.values() {
        match check_expansion(&cfg.curve, alpha) {
            Ok(c) => {
                let e = &c.expansion;
                for k in 0..e.base.len() {
                    rows.push(ExpandRow {
                        alpha,
                        index: k,
                        base_re: e.base[k].re,
                        base_im: e.base[k].im,
                        approx_re: e.approx[k].re,
                        approx_im: e.approx[k].im,
                        exact_re: c.exact[k].re,
                        exact_im: c.exact[k].im,
                        error: c.abs_error[k],
                        remainder_bound: e.remainder_bound,
                        validity_radius: e.validity_radius,
                        status: if c.abs_error[k] <= e.remainder_bound {
                            OK.into()
                        } else {
                            "bound_violated".into()
                        },
                    });
                }
            }
            Err(PerturbationError::AlphaOutOfRange { .. }) => rows.push(ExpandRow {
                alpha,
                index: 0,
                base_re: f64::NAN,
                base_im: f64::NAN,
                approx_re: f64::NAN,
                approx_im: f64::NAN,
                exact_re: f64::NAN,
                exact_im: f64::NAN,
                error: f64::NAN,
                remainder_bound: f64::NAN,
                validity_radius: f64::NAN,
                status: "out_of_range".into(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    let out = RecipeOutput {
        tables: vec![Table::from_rows("expansion", &rows)?],
        ..Default::default()
    };
    finish(o.dir(cfg.output.as_ref(), "expand"), "expand", serde_json::to_value(&cfg)?, out, start)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub p: DenseMatrix,
    pub eta: Grid,
    pub alpha: Grid,
    #[serde(default)]
    pub algorithms: Option<Vec<UpdateAlgo>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct RatesRow {
    algo: String,
    eta: f64,
    alpha: f64,
    leading: f64,
    rho_sq_exact: f64,
    rho_sq_composite: Option<f64>,
    error: f64,
    budget: f64,
    validity_radius: f64,
    valid: bool,
    status: String,
}

/// Leading terms of the squared spectral radius against the exact value,
/// written to `rates.csv`. Points inside the validity radius must respect the budget.
pub fn rates(path: &Path, o: &Overrides) -> Result<Outcome> {
    let start = Instant::now();
    let cfg: RatesConfig = read_json(path)?;
    cfg.eta.validate("eta")?;
    cfg.alpha.validate("alpha")?;
    let algos = cfg.algorithms.clone().unwrap_or_else(|| UpdateAlgo::ALL.to_vec());
    let mut rows = Vec::new();
    for &algo in &algos {
        for eta in cfg.eta.values() {
            for alpha in cfg.alpha.values() {
                let e = rho_expansion(algo, &cfg.q, &cfg.r, &cfg.p, eta, alpha)?;
                let status = if e.valid && e.error() > e.budget {
                    "budget_exceeded".into()
                } else {
                    OK.into()
                };
                rows.push(RatesRow {
                    algo: algo.name().into(),
                    eta,
                    alpha,
                    leading: e.leading,
                    rho_sq_exact: e.rho_sq_exact,
                    rho_sq_composite: e.rho_sq_composite,
                    error: e.error(),
                    budget: e.budget,
                    validity_radius: e.validity_radius,
                    valid: e.valid,
                    status,
                });
            }
        }
    }
    let out = RecipeOutput {
        tables: vec![Table::from_rows("rates", &rows)?],
        ..Default::default()
    };
    finish(o.dir(cfg.output.as_ref(), "rates"), "rates", serde_json::to_value(&cfg)?, out, start)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub game: GameSpec,
    pub algorithm: AlgoConfig,
    pub z_star: Vec<f64>,
    /// Starting point; defaults to a random point at distance `perturbation`.
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct TrajectoryRow {
    seed: u64,
    k: usize,
    distance: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SimulateSummary {
    algo: String,
    eta: f64,
    gamma: f64,
    seed: u64,
    steps: usize,
    rate: Option<f64>,
    r_squared: Option<f64>,
    diverged: bool,
    status: String,
}

/// One run: `trajectory.csv` with `(k, ||z^k - z*||)` and `summary.json`
/// with the fitted rate.
pub fn simulate(path: &Path, o: &Overrides) -> Result<Outcome> {
    let mut cfg: SimulateConfig = read_json(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    let game = cfg.game.build()?;
    let z0 = match &cfg.z0 {
        Some(z) => z.clone(),
        None => perturb(&game, &cfg.z_star, cfg.perturbation.unwrap_or(1e-3), cfg.seed, 0),
    };
    let traj = run(&game, &cfg.algorithm, &z0, &cfg.z_star)?;
    let fit = if traj.diverged { None } else { Some(fit_rate(&traj)) };
    let status = match &fit {
        None => "diverged".to_string(),
        Some(Ok(_)) => OK.into(),
        Some(Err(e)) => status_of(e),
    };
    let fit = fit.and_then(|f| f.ok());
    let summary = SimulateSummary {
        algo: cfg.algorithm.algo.name().into(),
        eta: cfg.algorithm.eta,
        gamma: cfg.algorithm.gamma,
        seed: cfg.seed,
        steps: traj.ks.last().copied().unwrap_or(0),
        rate: fit.map(|f| f.r),
        r_squared: fit.map(|f| f.r_squared),
        diverged: traj.diverged,
        status,
    };
    let rows: Vec<TrajectoryRow> = traj
        .ks
        .iter()
        .zip(&traj.distances)
        .map(|(&k, &d)| TrajectoryRow {
            seed: cfg.seed,
            k,
            distance: d,
        })
        .collect();
    let dir = o.dir(cfg.output.as_ref(), "simulate");
    fs::create_dir_all(&dir)?;
    Table::from_rows("trajectory", &rows)?.write(&dir)?;
    write_json(&dir, "summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(Outcome {
        dir,
        point_failures: usize::from(summary.status != OK),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MneCommand {
    pub payoff: TrigSource,
    #[serde(default)]
    pub mne: MneConfig,
    /// Reports `mu_tilde(M_gamma)` at each value.
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Mixed equilibrium of a particle game, written to `mne.json`.
pub fn mne(path: &Path, o: &Overrides) -> Result<Outcome> {
    let mut cfg: MneCommand = read_json(path)?;
    if let Some(s) = o.seed {
        cfg.mne.seed = s;
    }
    let payoff = cfg.payoff.build()?;
    let sol = solve_mne(&payoff, &cfg.mne)?;
    let game = ParticleGame::new(payoff.clone(), sol.a.len(), sol.b.len());
    let mut spectra = Vec::new();
    for &g in &cfg.gammas {
        let mu = spectral_abscissa_min(&m_gamma(&payoff, &sol.a, &sol.x, &sol.b, &sol.y, g)?)?;
        spectra.push(json!({"gamma": g, "mu_tilde": mu}));
    }
    let report = json!({
        "seed": cfg.mne.seed,
        "solution": sol,
        "value_check": game.value(&sol.z()),
        "spectra": spectra,
    });
    let dir = o.dir(cfg.output.as_ref(), "mne");
    write_json(&dir, "mne.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome { dir, point_failures: 0 })
}

/// Monte Carlo sweep, written to `rmt.csv` and `rmt_tails.csv`.
pub fn rmt(path: &Path, o: &Overrides) -> Result<Outcome> {
    let start = Instant::now();
    let mut cfg: RmtConfig = read_json(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    let out = rmt_sweep(&cfg)?;
    finish(o.dir(None, "rmt"), "rmt", serde_json::to_value(&cfg)?, out, start)
}

pub fn recipe(path: &Path, o: &Overrides) -> Result<Outcome> {
    let mut cfg: ExperimentConfig = read_json(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
        if let Some(r) = cfg.rmt.as_mut() {
            r.seed = s;
        }
    }
    cfg.validate()?;
    let dir = o.dir(cfg.output.as_ref(), cfg.recipe.name());
    let m = run_recipe(&cfg, &dir)?;
    println!("{}", serde_json::to_string_pretty(&m.summary)?);
    Ok(Outcome {
        dir,
        point_failures: m.point_failures,
    })
}

pub fn dispatch(command: &str, path: &Path, o: &Overrides) -> Result<Outcome> {
    match command {
        "analyze" => analyze(path, o),
        "expand" => expand(path, o),
        "rates" => rates(path, o),
        "simulate" => simulate(path, o),
        "mne" => mne(path, o),
        "rmt" => rmt(path, o),
        "recipe" => recipe(path, o),
        other => bail!("unknown command `{other}`"),
    }
}
