//! `actuator-lab`: dataset generation, surrogate training, max-min
//! optimization, heat maps and closed-loop simulation driven by one JSON
//! configuration file.
//!
//! Every subcommand writes its artifact atomically and a
//! `<out>.manifest.json` describing the run.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{HeatmapSource, Placement};
use crate::config::PipelineConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "actuator-lab", version, about = "Optimal actuator placement experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output artifact path.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed; overrides the `seed` key of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Riccati equation over the training grid and write the dataset CSV.
    Data(Common),
    /// Train a surrogate on a dataset and write the JSON bundle.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Solve the max-min problem on a trained surrogate.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Worst-case value over an actuator grid.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "exact")]
        source: HeatmapSource,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Integrate the closed loop at a placement.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated actuator locations.
        #[arg(long, value_delimiter = ',', conflicts_with = "solution")]
        r: Option<Vec<f64>>,
        /// Solution record written by `optimize`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<(PipelineConfig, u64), CliError> {
    let cfg = PipelineConfig::load(&common.config)?;
    let seed = common.seed.unwrap_or(cfg.seed);
    Ok((cfg, seed))
}

pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    match cli.command {
        Command::Data(c) => {
            let (cfg, seed) = load(&c)?;
            commands::cmd_data(&cfg, seed, &c.out)?;
            Ok(c.out)
        }
        Command::Train { common: c, data } => {
            let (cfg, seed) = load(&c)?;
            commands::cmd_train(&cfg, seed, &data, &c.out)?;
            Ok(c.out)
        }
        Command::Optimize { common: c, bundle } => {
            let (cfg, seed) = load(&c)?;
            commands::cmd_optimize(&cfg, seed, &bundle, &c.out)?;
            Ok(c.out)
        }
        Command::Heatmap { common: c, source, bundle } => {
            let (cfg, seed) = load(&c)?;
            commands::cmd_heatmap(&cfg, seed, source, bundle.as_deref(), &c.out)?;
            Ok(c.out)
        }
        Command::Simulate { common: c, r, solution } => {
            let (cfg, seed) = load(&c)?;
            let placement = match (r, &solution) {
                (Some(r), _) => Placement::Explicit(r),
                (None, Some(path)) => Placement::Solution(path),
                (None, None) => Placement::FromConfig,
            };
            commands::cmd_simulate(&cfg, seed, placement, &c.out)?;
            Ok(c.out)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(out) => {
            println!("wrote {}", out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
