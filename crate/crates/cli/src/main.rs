//! `latprog`: simulate, fit, check and summarize latent process models.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "latprog", version, about = "Latent process models of progress towards a target")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand; they override values from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    #[arg(long, global = true)]
    pub burnin: Option<usize>,
    #[arg(long, global = true)]
    pub thin: Option<usize>,
    /// Latent dimension q.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub metric: Option<Metric>,
    /// Poincaré disk radius.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Poincare,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    N300,
    N600,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a group scenario as a long-format response file.
    Simulate {
        #[arg(long, value_enum, default_value = "n300")]
        scenario: Scenario,
    },
    /// Fit chains and persist their draws.
    Fit {
        /// Response file; defaults to `input` from the configuration.
        data: Option<PathBuf>,
    },
    /// WAIC, PSRF and acceptance rates of a fit.
    Diagnose { fit: PathBuf },
    /// Rate-of-progress summaries and density tables.
    Summarize {
        fit: PathBuf,
        /// One-based individual ids for the density table (default: all).
        #[arg(long, value_delimiter = ',')]
        ids: Vec<usize>,
    },
    /// Posterior predictive proportions per individual and time.
    Predict {
        fit: PathBuf,
        /// Response file; defaults to the copy stored with the fit.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
    },
    /// Aligned posterior-median interaction map.
    ExportMap { fit: PathBuf },
    /// WAIC table across fits (typically one per latent dimension).
    Compare {
        #[arg(required = true)]
        fits: Vec<PathBuf>,
    },
    /// Replication study over latent dimensions.
    Study {
        #[arg(long, value_enum, default_value = "n300")]
        scenario: Scenario,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        dims: Vec<usize>,
        /// Divide the per-dimension chain lengths by this factor.
        #[arg(long, default_value_t = 10)]
        shorten: usize,
    },
    /// Turn raw categories into binary responses.
    Dichotomize {
        input: PathBuf,
        /// Custom category map such as `1:0,2:1` (default: 1 -> 1, 2-4 -> 0).
        #[arg(long)]
        map: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
