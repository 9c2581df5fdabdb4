use std::path::PathBuf;
use std::process::ExitCode;

use cavitation::experiments::{self, CommandOutcome, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

/// Radial cavitation solver for compressible hyperelastic balls.
#[derive(Parser)]
#[command(name = "cavitation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimizer on the punctured ball at one `eps`.
    Solve(Common),
    /// Minimizers along the `eps` list with a convergence table.
    SweepEps(Common),
    /// Critical boundary displacement.
    Critical(Common),
    /// Penalty materials approaching the incompressible limit.
    Incompressible(Common),
    /// Invariant suite on the configured material.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Boundary stretch, overriding `run.lambda`.
    #[arg(long)]
    lambda: Option<f64>,
    /// Puncture radius, replacing `run.eps_list`.
    #[arg(long)]
    eps: Option<f64>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    emit_plots: bool,
}

impl Common {
    fn config(&self, base: ExperimentConfig) -> cavitation::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path_with_base(p, base)?,
            None => base,
        };
        cfg.apply_overrides(self.lambda, self.eps, self.out.clone(), self.emit_plots)?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> cavitation::Result<CommandOutcome> {
    match cli.command {
        Command::Solve(c) => experiments::cmd_solve(&c.config(ExperimentConfig::example_one())?),
        Command::SweepEps(c) => experiments::cmd_sweep_eps(&c.config(ExperimentConfig::example_one())?),
        Command::Critical(c) => experiments::cmd_critical(&c.config(ExperimentConfig::example_one())?),
        Command::Incompressible(c) => experiments::cmd_incompressible(&c.config(ExperimentConfig::example_two())?),
        Command::Check(c) => experiments::cmd_check(&c.config(ExperimentConfig::example_one())?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("wrote {}", outcome.directory.join(experiments::MANIFEST).display());
            if outcome.failures > 0 {
                eprintln!("error: {} of the runs failed", outcome.failures);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiments::exit_code(&e) as u8)
        }
    }
}
