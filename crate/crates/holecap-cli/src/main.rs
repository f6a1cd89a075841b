//! `holecap`: capacities, spectra and asymptotic ladders from TOML configs.
//!
//! Exit codes: 0 pass, 1 usage or validation failure (including a failed
//! verdict), 2 theorem hypothesis violated, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holecap::discrete::HRule;

#[derive(Parser)]
#[command(name = "holecap", version, about = "Eigenvalues of planar domains with small holes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier constants A_{j,k}, C_k and D(P).
    Constants {
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        /// Coefficients c_j of Σ c_j x1^(k-j) x2^j, comma-separated. Repeatable.
        #[arg(long = "poly")]
        poly: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Condenser or eigenfunction capacity along a ladder.
    Capacity(Common),
    /// Lowest eigenvalues of the domain at h and h/2.
    Spectrum(Common),
    /// Fit a ladder and compare with the predicted law.
    Verify(Common),
    /// Compare the lattice Aharonov–Bohm spectrum with NDN ∪ DND.
    Isospectral(Common),
    /// Eigenvalue shifts for colliding poles, via the slit and NDN routes.
    AbCollide(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output.dir`, else `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid rule, e.g. `eps/8` or `0.005`.
    #[arg(long)]
    h_rule: Option<HRule>,
    /// Comma-separated ladder overriding the config.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
    /// Also write an SVG log-log plot.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<holecap::Error> for CliError {
    fn from(e: holecap::Error) -> Self {
        let code = match &e {
            holecap::Error::Hypothesis(_) => 2,
            e if e.is_numerical() => 3,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Constants { k_max, poly, out } => commands::constants(k_max, &poly, out.as_deref()),
        Command::Capacity(c) => commands::capacity(&c.into()),
        Command::Spectrum(c) => commands::spectrum(&c.into()),
        Command::Verify(c) => commands::verify(&c.into()),
        Command::Isospectral(c) => commands::isospectral(&c.into()),
        Command::AbCollide(c) => commands::ab_collide(&c.into()),
    }
}

impl From<Common> for commands::Invocation {
    fn from(c: Common) -> Self {
        commands::Invocation { config: c.config, out: c.out, h_rule: c.h_rule, ladder: c.ladder, plot: c.plot }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
