use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use elswap_cli::commands::{cmd_mpdp, cmd_simulate, cmd_spread, cmd_stochvol_check};
use elswap_cli::config::ScenarioConfig;
use elswap_cli::report::{resolve_precision, NumberFormat};

/// Electricity swap pricing: MPDP term structures, swap simulation and
/// Monte Carlo self-checks.
#[derive(Debug, Parser)]
#[command(name = "elswap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Term structures of the MPDP, true and classical market prices of risk
    /// and their spread.
    Mpdp(Common),
    /// Monte Carlo swap paths and martingale report.
    Simulate(Common),
    /// Pricing spread between the geometric and approximated swaps.
    Spread(Common),
    /// CIR stochastic-volatility checks and the density martingale check.
    StochvolCheck(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

type CommandFn = fn(&ScenarioConfig, &std::path::Path, NumberFormat) -> Result<bool>;

fn run(cli: Cli) -> Result<bool> {
    let (common, cmd): (&Common, CommandFn) = match &cli.command {
        Command::Mpdp(c) => (c, cmd_mpdp),
        Command::Simulate(c) => (c, cmd_simulate),
        Command::Spread(c) => (c, cmd_spread),
        Command::StochvolCheck(c) => (c, cmd_stochvol_check),
    };
    let config = ScenarioConfig::load(&common.config)?.with_seed(common.seed);
    let out = common.out.clone().unwrap_or_else(|| config.output.directory.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let fmt = NumberFormat {
        significant: resolve_precision(config.output.precision)?,
    };
    cmd(&config, &out, fmt)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more self-checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
