use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use minmax_spectra::commands::{dispatch, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Analyze,
    Expand,
    Rates,
    Simulate,
    Mne,
    Rmt,
    Recipe,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Expand => "expand",
            Command::Rates => "rates",
            Command::Simulate => "simulate",
            Command::Mne => "mne",
            Command::Rmt => "rmt",
            Command::Recipe => "recipe",
        }
    }
}

/// Local convergence analysis of min-max algorithms.
///
/// Exit status: 0 on success, 2 when some grid points failed, 1 on a fatal error.
#[derive(Debug, Parser)]
#[command(name = "minmax-spectra", version)]
struct Cli {
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
    };
    match dispatch(cli.command.name(), &cli.config, &overrides) {
        Ok(o) if o.point_failures > 0 => {
            eprintln!("{} point failures; results in {}", o.point_failures, o.dir.display());
            ExitCode::from(2)
        }
        Ok(o) => {
            eprintln!("results in {}", o.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
