mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use enclosure::{Error, Result};

use crate::commands::Context;
use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "enclosure",
    version,
    about = "Enclosure-method inclusion reconstruction on a disk"
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Enable ground-truth comparisons.
    #[arg(long, global = true)]
    validate: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and write the mesh.
    Mesh,
    /// Assemble perturbed, background and gap DtN matrices.
    Dtn,
    /// Evaluate indicator series from the DtN gap.
    Indicate,
    /// Estimate the inclusion from indicator values.
    Reconstruct {
        /// Indicator CSV; defaults to `<out>/indicator.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Tabulate the Mittag-Leffler function on a grid.
    Mleval {
        #[arg(long)]
        alpha: f64,
        /// Real-part grid `start:end:count`.
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// Imaginary-part grid `start:end:count`.
        #[arg(long, allow_hyphen_values = true, default_value = "0:0:1")]
        im: String,
    },
    /// Run the consistency checks and write a report.
    Validate,
}

fn context(cli: &Cli) -> Result<Context> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let (cfg, hash) = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Context::new(cfg, hash, cli.out.clone(), cli.validate, cli.seed)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Mleval { alpha, re, im } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            commands::cmd_mleval(&out, *alpha, re, im)
        }
        Command::Mesh => commands::cmd_mesh(&context(&cli)?),
        Command::Dtn => commands::cmd_dtn(&context(&cli)?),
        Command::Indicate => commands::cmd_indicate(&context(&cli)?),
        Command::Reconstruct { input } => commands::cmd_reconstruct(&context(&cli)?, input.clone()),
        Command::Validate => commands::cmd_validate(&context(&cli)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
