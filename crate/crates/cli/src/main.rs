mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

/// Z(N)-Ising S-matrix checks, fusion tables and weak wedge-locality reports.
#[derive(Debug, Parser)]
#[command(name = "znwedge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Unitarity, crossing and bootstrap checks plus the pole registry.
    Axioms(Common),
    /// Fusion angles, residues and couplings.
    Fusion(Common),
    /// Cancellation of [φ, φ′] against [χ, χ′] on wedge-separated pairs.
    WeakCommutator(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature level for verdicts, overriding quadrature.level.
    #[arg(long, value_name = "LEVEL")]
    refine: Option<u32>,
    /// Set every bound-state coupling to zero.
    #[arg(long)]
    zero_eta: bool,
    /// Add a constant to every S-matrix component.
    #[arg(long, value_name = "EPS", allow_hyphen_values = true)]
    perturb_s: Option<f64>,
}

/// What a finished run reports through the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Incomplete,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.out {
            cfg.output_dir = dir.clone();
        }
        if let Some(level) = self.refine {
            cfg.quadrature.level = level;
        }
        Ok(cfg)
    }
}

fn execute(common: &Common, run: impl Fn(&RunConfig, &Common) -> anyhow::Result<Outcome>) -> anyhow::Result<Outcome> {
    let cfg = common.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    run(&cfg, common)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Axioms(c) => execute(c, commands::axioms),
        Command::Fusion(c) => execute(c, commands::fusion),
        Command::WeakCommutator(c) => execute(c, commands::weak_commutator),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Ok(Outcome::Incomplete) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
