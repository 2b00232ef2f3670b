//! `eta`: data generation, training, evaluation, bound checks and GEVD
//! utilities for tail-matching regression experiments.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure, 4 property violation.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "eta", version, about = "Tail-matching regression experiments")]
struct Cli {
    /// Flat TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress and summaries on stdout
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the training set, the input pool and the reference sample
    GenData,
    /// Train the ERM baseline or the tail-regularized model
    Train(TrainArgs),
    /// Evaluate checkpoints against the reference (`truth` names the exact map)
    Eval(EvalArgs),
    /// Randomized checks of the distance bounds
    BoundsCheck(BoundsArgs),
    /// Fit or query a generalized extreme value distribution
    #[command(subcommand)]
    Gevd(GevdCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Erm,
    Eta,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Starting checkpoint. In eta mode defaults to `<out>/erm.ckpt.json`;
    /// in erm mode training continues from it instead of a fresh init
    #[arg(long)]
    init: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint files, or `truth`
    checkpoints: Vec<String>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Debug, Subcommand)]
enum GevdCommand {
    /// Maximum-likelihood fit to a one-column sample CSV
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Print quantiles, truncated when `--gamma` is given
    Quantile(GevdQuantileArgs),
}

#[derive(Debug, Args)]
struct GevdQuantileArgs {
    /// Descriptor JSON with kappa, zeta, sigma and optional gamma
    #[arg(long, conflicts_with_all = ["kappa", "zeta", "sigma"])]
    params: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Read `--kappa` with the opposite sign convention (shape `c = -kappa`)
    #[arg(long)]
    scipy: bool,
    /// Probability levels
    #[arg(required = true, num_args = 1.., allow_hyphen_values = true)]
    q: Vec<f64>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<eta_core::Error> for CliError {
    fn from(e: eta_core::Error) -> Self {
        let code = if e.is_numerical() { 3 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = config::ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let ctx = commands::Context { cfg, quiet: cli.quiet };
    match cli.command {
        Command::GenData => commands::gen_data(&ctx),
        Command::Train(a) => commands::train(&ctx, a.mode == Mode::Eta, a.init.as_deref()),
        Command::Eval(a) => commands::eval(&ctx, &a.checkpoints),
        Command::BoundsCheck(a) => commands::bounds_check(&ctx, a.trials, a.inject_fault),
        Command::Gevd(GevdCommand::Fit { input }) => commands::gevd_fit(&ctx, &input),
        Command::Gevd(GevdCommand::Quantile(a)) => commands::gevd_quantile(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
