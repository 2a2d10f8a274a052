//! `fdual`: command-line front end for the fractal-duality library.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! non-convergence.

mod commands;
mod config;
mod expr;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::expr::Expr;

#[derive(Debug, Parser)]
#[command(
    name = "fdual",
    version,
    about = "Renormalized valuations, devil's staircases and fractal wave solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a sequence against a scale sequence by its limiting valuation.
    Classify {
        /// Closed-form sequence in `n`, e.g. "n^(-2.5)".
        sequence: String,
        /// Scale sequence in `n`.
        #[arg(long, default_value = "n^(-1)")]
        scale: String,
        /// First sample index.
        #[arg(long, default_value_t = 1 << 10)]
        n0: u64,
        /// Number of doublings after `n0`.
        #[arg(long, default_value_t = 20)]
        doublings: u32,
    },
    /// Renormalized valuation of `x` at scale `delta`.
    Valuation {
        #[arg(value_parser = constant)]
        x: f64,
        #[arg(long, value_parser = constant)]
        delta: f64,
        /// Also test the ultrametric bound for `x + x2`.
        #[arg(long, value_parser = constant)]
        with: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate a Cantor-seed staircase as `xi,value` CSV.
    Staircase {
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Mass function of an IFS curve over `[a, b]`.
    Massfn {
        /// IFS document (TOML); the Koch curve when omitted.
        #[arg(long, conflicts_with = "koch_angle")]
        ifs: Option<PathBuf>,
        /// Apex angle of the Koch curve in degrees.
        #[arg(long, value_parser = constant)]
        koch_angle: Option<f64>,
        /// Hutchinson iterations.
        #[arg(long, default_value_t = 6)]
        level: u32,
        /// Mass exponent; the similarity dimension when omitted.
        #[arg(long, value_parser = constant)]
        s: Option<f64>,
        #[arg(long, value_parser = constant, default_value = "0")]
        a: f64,
        #[arg(long, value_parser = constant, default_value = "1")]
        b: f64,
        /// Also write the normalized mass staircase as CSV.
        #[arg(long)]
        staircase_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Local fractional derivative of `f(v(x))` at a point.
    Derivative {
        /// Outer function in `u`.
        function: String,
        #[arg(long, value_parser = constant)]
        at: f64,
        /// Interval length `l`.
        #[arg(long, value_parser = constant, default_value = "1")]
        length: f64,
        #[command(flatten)]
        seed: SeedArgs,
        /// Partition depth for support detection and quotient refinement.
        #[arg(long, default_value_t = 40)]
        partition_level: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Stieltjes integral of `g(u)` against the staircase over `[a, b]`.
    Integrate {
        /// Integrand in `u`.
        integrand: String,
        #[arg(long, value_parser = constant, default_value = "0")]
        a: f64,
        #[arg(long, value_parser = constant, default_value = "1")]
        b: f64,
        #[arg(long, value_parser = constant, default_value = "1")]
        length: f64,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long, default_value_t = 12)]
        partition_level: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fractal string: modal coefficients and an optional solution grid.
    Solve1d(SolverArgs),
    /// Fractal membrane on the unit square.
    Solve2d(SolverArgs),
    /// Dispersion relation `omega = v(c)·k`.
    Dispersion(SolverArgs),
    /// Lacunary level-k term of the quadratic Koch membrane.
    Lacunary(SolverArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Overrides the output path from the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration supplying tolerances and caps.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedChoice {
    MiddleThird,
    Cantor,
    Identity,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long, value_enum, default_value_t = SeedChoice::MiddleThird)]
    pub seed: SeedChoice,
    /// Number of Cantor pieces (with `--seed cantor`).
    #[arg(long, default_value_t = 2)]
    pub pieces: usize,
    /// Piece ratio (with `--seed cantor`), e.g. "1/4".
    #[arg(long, value_parser = constant, default_value = "1/3")]
    pub ratio: f64,
    /// Digit depth of the staircase.
    #[arg(long, default_value_t = 40)]
    pub level: u32,
}

/// A numeric argument written as a constant expression, e.g. `1/4` or `10^-6`.
fn constant(s: &str) -> Result<f64, String> {
    let e = Expr::parse(s, &[]).map_err(|e| e.render(s))?;
    let v = e.eval(&[]);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not a finite number"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let outcome = commands::run(cli.command, &mut out).and_then(|()| Ok(out.flush()?));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        // the reader went away, e.g. `fdual ... | head`
        Err(failure) if failure.broken_pipe => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
