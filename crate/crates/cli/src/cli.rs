//! Argument parsing and subcommand dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::{key_help, RunConfig};
use crate::error::{CliError, CliResult};
use crate::model::verify_masks;

#[derive(Debug, Parser)]
#[command(name = "locsparse", version, about = "Locally sparse quantile regression with functional interactions")]
#[command(after_help = key_help())]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw (overrides the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid and replicate parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Quantile level; repeat for several.
    #[arg(long, global = true)]
    pub tau: Vec<f64>,
    /// alt1..alt5 or proposed.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Check the written interval masks for hierarchy breaks; exit 3 on any.
    #[arg(long, global = true)]
    pub verify_hierarchy: bool,
    /// Output directory (overrides the configuration).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Extra `key=value` settings applied after the configuration file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Fit at fixed tuning parameters.
    Fit,
    /// Select tuning parameters on a validation set, then fit.
    Tune,
    /// Predict with a saved model.
    Predict,
    /// Run the simulation benchmark.
    Simulate,
    /// Official and random-partition analysis of the Tecator data.
    Tecator,
    /// Convert the raw Tecator text file to functional and scalar CSV.
    ConvertTecator,
    /// Residual density and QQ diagnostic of a saved model.
    Diagnose,
}

impl Cli {
    /// Configuration file, then `--set` entries, then dedicated flags.
    pub fn run_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.tau.is_empty() {
            cfg.taus = self.tau.clone();
        }
        if let Some(m) = &self.method {
            cfg.set("method", m)?;
        }
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_hierarchy(cfg: &RunConfig) -> CliResult<()> {
    let (checked, bad) = verify_masks(&cfg.output.join("masks.csv"))?;
    if bad.is_empty() {
        eprintln!("hierarchy verified: {checked} (tau, interval) pairs, 0 violations");
        Ok(())
    } else {
        Err(CliError::Numeric(format!("hierarchy violated at (tau, interval) {bad:?}")))
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = cli.run_config()?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Input("--jobs must be positive".into()));
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match cli.command {
        Command::Fit => commands::cmd_fit(&cfg).map(drop)?,
        Command::Tune => commands::cmd_tune(&cfg).map(drop)?,
        Command::Predict => commands::cmd_predict(&cfg)?,
        Command::Simulate => commands::cmd_simulate(&cfg, cli.verify_hierarchy).map(drop)?,
        Command::Tecator => commands::cmd_tecator(&cfg).map(drop)?,
        Command::ConvertTecator => commands::cmd_convert_tecator(&cfg)?,
        Command::Diagnose => commands::cmd_diagnose(&cfg)?,
    }
    if cli.verify_hierarchy && matches!(cli.command, Command::Fit | Command::Tune | Command::Tecator) {
        check_hierarchy(&cfg)?;
    }
    Ok(())
}
