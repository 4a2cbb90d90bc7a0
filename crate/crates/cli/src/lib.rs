//! Batch front-end for the double-well tunneling pipeline.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dwtunnel", version, about = "Tunneling splittings of two-dimensional double wells")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed, overriding `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues, splittings and spread index.
    Spectrum,
    /// Birkhoff bounce map of random billiard trajectories.
    Bouncemap,
    /// Barrier-line Husimi statistics per pair.
    Husimi,
    /// Figures from existing spectrum and Husimi products.
    Report,
    /// Exact levels of the 1D double square well.
    Oned,
}

impl Cli {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Spectrum => commands::cmd_spectrum(cfg),
        Command::Bouncemap => commands::cmd_bouncemap(cfg),
        Command::Husimi => commands::cmd_husimi(cfg),
        Command::Report => commands::cmd_report(cfg),
        Command::Oned => commands::cmd_oned(cfg),
    }
}

/// Parses arguments, runs one subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.config().and_then(|cfg| execute(cli.command, &cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            e.exit_code()
        }
    }
}
