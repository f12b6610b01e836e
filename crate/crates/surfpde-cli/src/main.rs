//! surfpde: meshfree surface-PDE toolbox. Subcommands generate node sets,
//! assemble operators, inspect spectra, and run the benchmark problems; a
//! one-line summary goes to stdout and data artifacts to the output
//! directory. Exit codes: 0 success, 1 usage or configuration error, 2
//! runtime failure.

mod commands;
mod config;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::Opts;
use surfpde::SurfError;

/// Failures split by exit code: usage and configuration problems exit 1,
/// runtime (numerical or i/o) failures exit 2.
pub enum CliError {
    Usage(String),
    Run(String),
}

impl From<SurfError> for CliError {
    fn from(e: SurfError) -> Self {
        match e {
            SurfError::InvalidParameter(_) | SurfError::Parse { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Run(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "surfpde",
    version,
    about = "Meshfree differential operators and PDE benchmarks on point-cloud surfaces",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a surface node set and write it as CSV or PLY
    Nodes(Opts),
    /// Report the collapsed stencil weights of a single node
    Weights(Opts),
    /// Assemble an operator matrix in Matrix Market form
    Assemble(Opts),
    /// Eigenvalue spectrum of an assembled operator
    Spectrum(Opts),
    /// Poisson boundary-value solve against an analytic solution
    Poisson(Opts),
    /// Diffusion benchmark: sphere harmonic decay or forced torus heat
    Heat(Opts),
    /// Transport a bell profile once around the surface
    Advect(Opts),
    /// Reaction-diffusion pattern formation on a static surface
    Turing(Opts),
    /// Forced diffusion on an expanding sphere with resampling
    Moving(Opts),
    /// Convergence study over a built-in resolution ladder
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct ConvergeArgs {
    /// Study to run: poisson | heat | moving
    target: String,
    #[command(flatten)]
    opts: Opts,
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    let (name, target, raw) = match cli.command {
        Command::Nodes(o) => ("nodes", None, o),
        Command::Weights(o) => ("weights", None, o),
        Command::Assemble(o) => ("assemble", None, o),
        Command::Spectrum(o) => ("spectrum", None, o),
        Command::Poisson(o) => ("poisson", None, o),
        Command::Heat(o) => ("heat", None, o),
        Command::Advect(o) => ("advect", None, o),
        Command::Turing(o) => ("turing", None, o),
        Command::Moving(o) => ("moving", None, o),
        Command::Converge(c) => ("converge", Some(c.target), c.opts),
    };
    let opts = config::resolve(raw)?;
    config::init_threads(&opts)?;
    match name {
        "nodes" => commands::nodes(&opts),
        "weights" => commands::weights(&opts),
        "assemble" => commands::assemble_op(&opts),
        "spectrum" => commands::spectrum_op(&opts),
        "poisson" => commands::poisson(&opts),
        "heat" => commands::heat(&opts),
        "advect" => commands::advect(&opts),
        "turing" => commands::turing(&opts),
        "moving" => commands::moving(&opts),
        _ => commands::converge(target.as_deref().unwrap_or_default(), &opts),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful outcomes; any other
            // parse failure is a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(summary) => println!("{summary}"),
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            std::process::exit(1);
        }
        Err(CliError::Run(message)) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    }
}
