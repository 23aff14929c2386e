//! Command-line front end for `levy-liquidation`. Each subcommand reads one
//! TOML config and writes CSV and JSON files into an output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Context;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "levy-liq", version, about = "Optimal liquidation under Levy prices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte-Carlo seed; overrides `simulate.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Optimal trajectories and summaries for each risk aversion.
    Solve,
    /// Levy model against its moment-matched Brownian model.
    Compare,
    /// Impact function that makes the Levy model reproduce the Brownian one.
    DeriveImpact,
    /// Monte-Carlo evaluation of the optimal strategy.
    Simulate,
    /// Assumption checks, HJB residuals, cumulant bound and oracle certification.
    Validate,
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::from_path(path)?;
    let ctx = Context::new(&cfg, cli.out.clone(), cli.seed);
    match cli.command {
        Command::Solve => {
            for r in commands::cmd_solve(&cfg, &ctx)? {
                let tau = r.result.termination.tau().map_or("inf".to_string(), |t| format!("{t:.6e}"));
                println!("A = {:e}: tau = {tau}, log value = {:.6}", r.result.risk_aversion, r.result.ln_value);
            }
        }
        Command::Compare => {
            for (a, g) in cfg.solve.risk_aversion.iter().zip(commands::cmd_compare(&cfg, &ctx)?) {
                println!("A = {a:e}: max gap {:.6e} shares at t = {:.6e}", g.sup_gap, g.at_time);
            }
        }
        Command::DeriveImpact => {
            for (a, g) in cfg.solve.risk_aversion.iter().zip(commands::cmd_derive_impact(&cfg, &ctx)?) {
                match g {
                    Some(g) => println!("A = {a:e}: trajectory gap {:.6e} shares", g.sup_gap),
                    None => println!("A = {a:e}: tabulated"),
                }
            }
        }
        Command::Simulate => {
            let r = commands::cmd_simulate(&cfg, &ctx)?;
            println!(
                "certainty equivalent {:.6} +/- {:.6} over {} paths",
                r.certainty_equivalent.value, r.certainty_equivalent.std_error, r.n_paths
            );
        }
        Command::Validate => {
            let checks = commands::cmd_validate(&cfg, &ctx)?;
            commands::print_checks(&checks);
            if let Some(e) = commands::failures(&checks) {
                return Err(e);
            }
        }
    }
    Ok(())
}
