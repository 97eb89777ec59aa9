use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqexp_core::Error;

mod commands;
mod output;

/// Error exponents, entropy dualities and exact finite-blocklength
/// experiments for classical-quantum channels.
#[derive(Parser)]
#[command(name = "cqexp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Channel or source description (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Rescale input probabilities and output traces to one instead of
    /// rejecting them.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Clone)]
struct ExponentArgs {
    /// Cap on `s` for channel-coding sphere packing.
    #[arg(long, default_value_t = 64.0)]
    smax: f64,
    /// Cap on `α` for privacy-amplification sphere packing.
    #[arg(long = "alpha-max", default_value_t = 64.0)]
    alpha_max: f64,
    /// Floor on `α` for compression sphere packing.
    #[arg(long = "alpha-min", default_value_t = 1e-4)]
    alpha_min: f64,
    /// Argument tolerance of the exponent maximizations.
    #[arg(long = "exponent-tol", default_value_t = 1e-10)]
    exponent_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional entropies of the source state and its dual.
    Entropy {
        #[command(flatten)]
        common: Common,
        /// Orders, e.g. `0.5,1,2`.
        #[arg(long, default_value = "0.5,1,2")]
        alphas: String,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
    },
    /// Exponent bound as a function of rate.
    Curve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exponents: ExponentArgs,
        #[arg(long, value_enum)]
        family: CurveFamily,
        /// Rates in bits, e.g. `0.1,0.2` or `0.05:0.95:0.05`.
        #[arg(long)]
        rates: String,
    },
    /// Compares the guessing probability with the dual maximal fidelity
    /// on random Toeplitz hashes.
    Duality {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = DualityFamily::Both)]
        family: DualityFamily,
    },
    /// Exact errors or distances under random Toeplitz hashes, next to the
    /// exponent bounds.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exponents: ExponentArgs,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Blocklengths, e.g. `1,2,3`.
        #[arg(long)]
        n: String,
        #[arg(long)]
        rates: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Constant of the finite-blocklength bound; adds `K` and
        /// `finite_n` columns.
        #[arg(long = "K")]
        k: Option<f64>,
    },
    /// Rate at which the lower and sphere-packing bounds start to agree.
    CriticalRate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exponents: ExponentArgs,
        #[arg(long, value_enum)]
        which: CriticalWhich,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    PetzUp,
    SandDown,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveFamily {
    CcLower,
    CcSp,
    DcLower,
    DcSp,
    PaLower,
    PaSp,
}

#[derive(Clone, Copy, ValueEnum)]
enum DualityFamily {
    Standard,
    Conjugate,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Dc,
    Pa,
    Cc,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriticalWhich {
    Cc,
    Dc,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) => 2,
        Error::Resource(_) => 3,
        Error::NonConvergence { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cqexp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
