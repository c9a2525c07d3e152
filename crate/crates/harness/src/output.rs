//! CSV tables, gnuplot scripts and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Status of a successful grid point.
pub const OK: &str = "ok";

/// A CSV file in memory; rows are written in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Builds a table from serializable rows; field names become the header.
    pub fn from_rows<T: Serialize>(name: &str, rows: &[T]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().context("flushing CSV buffer")?;
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes.as_slice());
        let mut records = rd.records();
        let header = match records.next() {
            Some(h) => h?.iter().map(str::to_string).collect(),
            None => Vec::new(),
        };
        let rows = records
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        Ok(Self {
            name: name.to_string(),
            header,
            rows,
        })
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        if !self.header.is_empty() {
            w.write_record(&self.header)?;
        }
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// A gnuplot script plotting columns of one CSV by name.
#[derive(Debug, Clone)]
pub struct Plot {
    pub name: String,
    pub csv: String,
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub logx: bool,
    pub logy: bool,
    /// `(x column, y column, style, legend)`.
    pub series: Vec<(String, String, String, String)>,
}

impl Plot {
    pub fn new(name: &str, csv: &str, title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            name: name.into(),
            csv: csv.into(),
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            logx: true,
            logy: true,
            series: Vec::new(),
        }
    }

    pub fn series(mut self, x: &str, y: &str, style: &str, legend: &str) -> Self {
        self.series.push((x.into(), y.into(), style.into(), legend.into()));
        self
    }

    pub fn linear_axes(mut self) -> Self {
        self.logx = false;
        self.logy = false;
        self
    }

    pub fn script(&self) -> String {
        let mut s = String::new();
        s.push_str("set datafile separator ','\n");
        s.push_str("set datafile columnheaders\n");
        s.push_str("set terminal pngcairo size 800,600\n");
        s.push_str(&format!("set output '{}.png'\n", self.name));
        s.push_str(&format!("set title '{}'\n", self.title));
        s.push_str(&format!("set xlabel '{}'\nset ylabel '{}'\n", self.xlabel, self.ylabel));
        if self.logx {
            s.push_str("set logscale x\n");
        }
        if self.logy {
            s.push_str("set logscale y\n");
        }
        s.push_str("set key left top\n");
        let parts: Vec<String> = self
            .series
            .iter()
            .map(|(x, y, style, legend)| {
                format!(
                    "'{}' using (column('{x}')):(column('{y}')) with {style} title '{legend}'",
                    self.csv
                )
            })
            .collect();
        s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        s
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.gp", self.name));
        fs::write(&path, self.script()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Everything a recipe produces before it touches the filesystem.
#[derive(Debug, Clone, Default)]
pub struct RecipeOutput {
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Recipe-specific summary recorded in the manifest.
    pub summary: serde_json::Value,
    pub seeds: Vec<u64>,
}

impl RecipeOutput {
    /// Rows whose `status` column is not [`OK`].
    pub fn failures(&self) -> usize {
        self.tables
            .iter()
            .map(|t| match t.header.iter().position(|h| h == "status") {
                Some(c) => t.rows.iter().filter(|r| r[c] != OK).count(),
                None => 0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub recipe: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
    pub point_failures: usize,
    pub wall_time_secs: f64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
}

/// Writes tables, plot scripts (when `plot` is set) and `manifest.json`.
pub fn write_all(
    dir: &Path,
    recipe: &str,
    config: serde_json::Value,
    out: &RecipeOutput,
    plot: bool,
    wall_time_secs: f64,
) -> Result<Manifest> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for t in &out.tables {
        t.write(dir)?;
        files.push(t.file_name());
    }
    if plot {
        for p in &out.plots {
            p.write(dir)?;
            files.push(format!("{}.gp", p.name));
        }
    }
    let manifest = Manifest {
        recipe: recipe.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: out.seeds.clone(),
        files,
        point_failures: out.failures(),
        wall_time_secs,
        threads: rayon::current_num_threads(),
        config,
        summary: out.summary.clone(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
