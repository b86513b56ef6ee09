use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;

use config::RunConfig;
use manifest::Recorder;

#[derive(Parser)]
#[command(name = "contour-opt", version, about = "Shape optimization of a cooling contour in 2D steady heat conduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the direct and adjoint problems for one contour.
    Solve(RunArgs),
    /// Run a list of κ-test combinations and check each plateau.
    Validate(RunArgs),
    /// Run the gradient descent from the configured contour.
    Optimize(RunArgs),
    /// Write the κ(ε) table of one contour and perturbation.
    Kappa(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Built-in run: case1, case2, test1, test2.
    #[arg(long)]
    preset: Option<String>,
    /// Initial contour (C1..C6) for the case presets.
    #[arg(long, requires = "preset")]
    initial: Option<String>,
    /// Accepted for interface compatibility; the pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_NOT_CONVERGED: u8 = 5;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        CliError { code: EXIT_SOLVER, message: message.into() }
    }

    /// Errors while building inputs: only numerical breakdowns are
    /// solver failures, everything else is a bad configuration.
    pub fn from_setup(e: contour_opt::Error) -> Self {
        match e {
            contour_opt::Error::Numerical(_) => Self::solver(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }

    pub fn from_run(e: contour_opt::Error) -> Self {
        match e {
            contour_opt::Error::Argument(_) => Self::config(e.to_string()),
            _ => Self::solver(e.to_string()),
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    match (&args.config, &args.preset) {
        (Some(path), None) => RunConfig::load(path),
        (None, Some(name)) => config::preset(name, args.initial.as_deref()),
        _ => Err(CliError::config("give either --config <path> or --preset <name>")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Solve(a) => ("solve", a),
        Command::Validate(a) => ("validate", a),
        Command::Optimize(a) => ("optimize", a),
        Command::Kappa(a) => ("kappa", a),
    };
    if args.seed.is_some() {
        log::info!("--seed ignored: the pipeline has no random components");
    }
    let config = match load(args) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut rec = match Recorder::new(name, &args.out, &config) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let result = match &cli.command {
        Command::Solve(_) => commands::solve(&config, &mut rec),
        Command::Validate(_) => commands::validate(&config, &mut rec),
        Command::Optimize(_) => commands::optimize(&config, &mut rec),
        Command::Kappa(_) => commands::kappa(&config, &mut rec),
    };
    let finished = rec.finish();
    match (result, finished) {
        (Err(e), _) | (Ok(_), Err(e)) => fail(e),
        (Ok(code), Ok(())) => ExitCode::from(code),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {}", e.message);
    ExitCode::from(e.code)
}
