//! The `dkl` command line: argument parsing, configuration merge and the
//! command implementations, each of which renders its result as CSV.

pub mod commands;
pub mod config;
pub mod csv;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dkl_core::DklError;

/// Exit status 1: a numerical failure or a failed check.
pub const EXIT_NUMERICAL: i32 = 1;
/// Exit status 2: bad usage or input.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<DklError> for CliError {
    fn from(e: DklError) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        CliError { code, message: e.to_string() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "dkl", version, about = "Heat kernel and Green function estimates with critical killing")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Stability index in (0, 2).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Boundary weight exponents `b1,b2,b3,b4`.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the CSV here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// A `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PairArgs {
    /// First point, comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Boundary decay exponent; solved from kappa when absent.
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve C(alpha, q, B) = kappa for q.
    SolveQ,
    /// Tabulate q -> C(alpha, q, B) and check its shape.
    CShape {
        #[arg(long)]
        points: Option<usize>,
    },
    /// Closed-form heat kernel estimate at one space-time point.
    Hke {
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Dominant bracket term over a grid of y for fixed t and x.
    Map {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long)]
        q: Option<f64>,
        /// Cells per axis.
        #[arg(long)]
        n: Option<usize>,
        /// Half-width of the tangential range and height of the grid.
        #[arg(long)]
        extent: Option<f64>,
    },
    /// Closed-form Green function estimate.
    Green {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Green estimate against the time integral of the heat kernel estimate.
    GreenIntegrate {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Subordinate killed Brownian motion against the killed estimate.
    Oracle {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        times: Option<String>,
    },
    /// Sampled comparability checks: an id, `all`, `extras`, or a comma list.
    Check {
        selector: String,
        /// Report required constants as a constants file instead of checking.
        #[arg(long)]
        explore: bool,
        /// Factor applied to required constants with `--explore`.
        #[arg(long)]
        slack: Option<f64>,
    },
}

/// A command's rendered output and whether every check in it passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub pass: bool,
    /// Summary lines for standard error.
    pub notes: Vec<String>,
}

fn set_threads() {
    if let Some(n) = std::env::var("DKL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    set_threads();
    let out = cli.common.out.clone();
    match commands::execute(&cli) {
        Ok(outcome) => {
            for n in &outcome.notes {
                eprintln!("{n}");
            }
            let written = match &out {
                Some(path) => std::fs::write(path, &outcome.text),
                None => std::io::stdout().write_all(outcome.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("dkl: cannot write output: {e}");
                return EXIT_USAGE;
            }
            if outcome.pass {
                0
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(e) => {
            eprintln!("dkl: {e}");
            e.code
        }
    }
}
