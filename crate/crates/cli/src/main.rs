mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "irsmg",
    version,
    about = "Mixture-Gamma channel models and network metrics for IRS-assisted downlinks"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Network configuration (TOML); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Override a configuration key, e.g. `irs.n_elements=500` or `noise_power="-147 dBm"`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Gauss-Laguerre order for product laws.
    #[arg(long, global = true, default_value_t = 20)]
    quad_order: usize,
    #[arg(long, global = true, default_value_t = 10_000)]
    mc_realizations: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a fading power law with a Gamma mixture.
    Fit(commands::FitArgs),
    /// Cascaded BS-IRS-UE channel law at one geometry.
    Cascade(commands::LinkArgs),
    /// Direct-plus-cascaded channel law at one geometry.
    Mixture(commands::LinkArgs),
    /// Interference Laplace transforms and CDFs.
    Interference(commands::InterferenceArgs),
    /// Spectral efficiency, SINR moments and outage, optionally swept over a parameter.
    Metrics(commands::MetricsArgs),
    /// Monte-Carlo network simulation.
    Simulate(commands::SimulateArgs),
    /// Analytic against Monte-Carlo comparison table.
    Validate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = commands::Context::new(&cli.global)?;
    match cli.command {
        Command::Fit(a) => commands::fit(ctx, &a),
        Command::Cascade(a) => commands::link(ctx, &a, false),
        Command::Mixture(a) => commands::link(ctx, &a, true),
        Command::Interference(a) => commands::interference(ctx, &a),
        Command::Metrics(a) => commands::metrics(ctx, &a),
        Command::Simulate(a) => commands::simulate(ctx, &a),
        Command::Validate => commands::validate(ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irsmg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
