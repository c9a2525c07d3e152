//! Monte Carlo sweeps of `min_j u_j^T Q u_j + v_j^T R v_j` under Haar rotations.

use anyhow::{bail, Result};
use minmax_core::ensembles::{bound_spreadout, bound_sparse, mc_min_quadform, McEstimate, SpectrumSpec, TailBound};
use minmax_core::stats::loglog_slope;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{Plot, RecipeOutput, Table, OK};

/// Spectrum family swept over `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    /// `Q = R = I_n`.
    Identity,
    /// `2n` eigenvalues evenly spaced on `[low, high]`, dealt alternately to `Q` and `R`.
    Linear { low: f64, high: f64 },
    /// `Q = diag(values)` padded with zeros, `R = 0`.
    Sparse { values: Vec<f64> },
    /// Fixed eigenvalues padded with zeros to `2n`.
    Values { values: Vec<f64> },
}

impl SpectrumKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpectrumKind::Identity => "identity",
            SpectrumKind::Linear { .. } => "linear",
            SpectrumKind::Sparse { .. } => "sparse",
            SpectrumKind::Values { .. } => "values",
        }
    }

    pub fn spec(&self, n: usize) -> SpectrumSpec {
        match self {
            SpectrumKind::Identity => SpectrumSpec::identity(n),
            SpectrumKind::Linear { low, high } => {
                let k = 2 * n;
                let v: Vec<f64> = (0..k)
                    .map(|i| if k == 1 { *low } else { low + (high - low) * i as f64 / (k - 1) as f64 })
                    .collect();
                SpectrumSpec::from_values(&v, n)
            }
            SpectrumKind::Sparse { values } => SpectrumSpec::q_only(values, n),
            SpectrumKind::Values { values } => SpectrumSpec::from_values(values, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmtConfig {
    pub spectrum: SpectrumKind,
    pub n: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Deviation parameters of the tail certificates, each in `[0, 1]`.
    #[serde(default = "default_tail_g")]
    pub tail_g: Vec<f64>,
    /// Search all subsets for the sparse bound instead of prefixes.
    #[serde(default)]
    pub full_search: bool,
}

fn default_trials() -> usize {
    2000
}

fn default_tail_g() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

impl RmtConfig {
    pub fn new(spectrum: SpectrumKind, n: Vec<usize>) -> Self {
        Self {
            spectrum,
            n,
            trials: default_trials(),
            seed: 0,
            tail_g: default_tail_g(),
            full_search: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            bail!("rmt: `n` is empty");
        }
        if self.n.iter().any(|&n| n < 2) {
            bail!("rmt: every n must be at least 2");
        }
        if self.trials < 100 {
            bail!("rmt: need at least 100 trials for quantiles");
        }
        if self.tail_g.iter().any(|g| !(0.0..=1.0).contains(g)) {
            bail!("rmt: tail deviations must lie in [0, 1]");
        }
        for &n in &self.n {
            match &self.spectrum {
                SpectrumKind::Sparse { values } if values.len() > n => bail!("rmt: more than n = {n} sparse values"),
                SpectrumKind::Values { values } if values.len() > 2 * n => bail!("rmt: more than 2n = {} values", 2 * n),
                _ => {}
            }
            self.spectrum.spec(n).validate().map_err(anyhow::Error::msg)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RmtRow {
    pub kind: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub q05: f64,
    pub q95: f64,
    pub lower: f64,
    pub upper: f64,
    pub sparse_bound: f64,
    /// `tr(S) / ||S||_F >= 1.1 * 2 sqrt(log n)`: the spread-out regime.
    pub proviso: bool,
    /// Mean within `[lower - 3 se, upper + 3 se]`.
    pub sandwich: bool,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub kind: String,
    pub n: usize,
    pub seed: u64,
    pub bound: String,
    pub g: f64,
    pub threshold: f64,
    pub certified: f64,
    pub empirical: f64,
    /// Binomial standard error at the certified probability.
    pub stderr: f64,
    pub status: String,
}

fn tail_row(kind: &str, n: usize, seed: u64, bound: &str, g: f64, t: TailBound, empirical: f64, trials: usize) -> TailRow {
    let p = t.probability;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    TailRow {
        kind: kind.into(),
        n,
        seed,
        bound: bound.into(),
        g,
        threshold: t.threshold,
        certified: p,
        empirical,
        stderr: se,
        status: if empirical >= p - 3.0 * se { OK.into() } else { "violated".into() },
    }
}

/// One `n` of the sweep: the estimate plus its tail rows.
pub fn sweep_point(cfg: &RmtConfig, n: usize) -> (RmtRow, McEstimate, Vec<TailRow>) {
    let spec = cfg.spectrum.spec(n);
    let kind = cfg.spectrum.name();
    let est = mc_min_quadform(&spec, cfg.trials, cfg.seed);
    let sb = bound_spreadout(&spec);
    let sp = bound_sparse(&spec, cfg.full_search);
    let proviso = sb.trace / sb.frobenius >= 1.1 * 2.0 * (n as f64).ln().sqrt();
    let sandwich = est.mean >= sb.lower - 3.0 * est.stderr && est.mean <= sb.upper + 3.0 * est.stderr;
    let mut tails = Vec::new();
    for &g in &cfg.tail_g {
        let lo = sb.highprob_lower(g);
        tails.push(tail_row(kind, n, cfg.seed, "spreadout_lower", g, lo, est.frac_at_least(lo.threshold), cfg.trials));
        let up = sb.highprob_upper(g);
        tails.push(tail_row(kind, n, cfg.seed, "spreadout_upper", g, up, est.frac_at_most(up.threshold), cfg.trials));
        if !sp.subset.is_empty() {
            let s = sp.highprob(g);
            tails.push(tail_row(kind, n, cfg.seed, "sparse", g, s, est.frac_at_least(s.threshold), cfg.trials));
        }
    }
    let row = RmtRow {
        kind: kind.into(),
        n,
        trials: cfg.trials,
        seed: cfg.seed,
        mean: est.mean,
        stderr: est.stderr,
        q05: est.q05,
        q95: est.q95,
        lower: sb.lower,
        upper: sb.upper,
        sparse_bound: sp.value,
        proviso,
        sandwich,
        status: OK.into(),
    };
    (row, est, tails)
}

pub fn rmt_sweep(cfg: &RmtConfig) -> Result<RecipeOutput> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut tails = Vec::new();
    for &n in &cfg.n {
        let (row, _, t) = sweep_point(cfg, n);
        rows.push(row);
        tails.extend(t);
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let slope = if rows.len() >= 2 && means.iter().all(|&m| m > 0.0) {
        loglog_slope(&ns, &means)
    } else {
        None
    };
    let summary = json!({
        "kind": cfg.spectrum.name(),
        "loglog_slope_mean_vs_n": slope,
        "sandwich_violations": rows.iter().filter(|r| r.proviso && !r.sandwich).count(),
        "tail_violations": tails.iter().filter(|t| t.status != OK).count(),
    });
    let plot = Plot::new("rmt", "rmt.csv", "min quadratic form under Haar rotations", "n", "value")
        .series("n", "mean", "linespoints", "MC mean")
        .series("n", "upper", "lines", "upper")
        .series("n", "sparse_bound", "lines", "sparse lower");
    Ok(RecipeOutput {
        tables: vec![Table::from_rows("rmt", &rows)?, Table::from_rows("rmt_tails", &tails)?],
        plots: vec![plot],
        summary,
        seeds: vec![cfg.seed],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exactly_two_and_linear_spectrum_fills_both_blocks() {
        let mut cfg = RmtConfig::new(SpectrumKind::Identity, vec![4]);
        cfg.trials = 100;
        let (row, _, _) = sweep_point(&cfg, 4);
        assert!((row.mean - 2.0).abs() < 1e-12 && row.stderr < 1e-12);
        let s = SpectrumKind::Linear { low: 1.0, high: 2.0 }.spec(3);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14);
        assert!(close(&s.q, &[2.0, 1.6, 1.2]) && close(&s.r, &[1.8, 1.4, 1.0]));
    }

    #[test]
    fn config_rejects_small_n() {
        let cfg: RmtConfig = serde_json::from_str(r#"{"spectrum": {"kind": "identity"}, "n": [1]}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
