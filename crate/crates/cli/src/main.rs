use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

const EXIT_CODES: &str = "Exit codes:
  0  success
  2  bad flags, unreadable or invalid config, malformed input CSV
  3  total failure (every estimator call of a simulation failed, or an output could not be written)";

#[derive(Parser, Debug)]
#[command(name = "prefest", version, about = "Estimation from samples and preference labels", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a seeded Monte Carlo experiment described by a JSON config.
    #[command(after_help = EXIT_CODES)]
    Simulate {
        /// Config file, or `-` for stdin.
        #[arg(long)]
        config: PathBuf,
        /// Result CSV path; the summary goes to `<out>.summary.csv`. Defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads. Output does not depend on this.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record wall time per estimator call (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Fit log-log error slopes from a result CSV.
    #[command(after_help = EXIT_CODES)]
    Rates {
        #[arg(long = "in")]
        input: PathBuf,
        /// Estimator name, or `all`.
        #[arg(long, default_value = "all")]
        estimator: String,
        /// Fraction of the largest checkpoints used in the fit.
        #[arg(long, default_value_t = 0.5)]
        tail: f64,
    },
    /// Monte Carlo Fisher-gap matrices, flattened.
    #[command(after_help = EXIT_CODES)]
    Matrices {
        #[command(flatten)]
        family: FamilyArgs,
        /// Evaluation point; defaults to 0 (or −0.5 for rayleigh).
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rescale to the standardized family.
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form Hellinger and restricted Bhattacharyya quantities.
    #[command(after_help = EXIT_CODES)]
    Divergences {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        theta1: String,
        #[arg(long, allow_hyphen_values = true)]
        theta2: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampling checks of the labelling assumptions.
    #[command(name = "check-assumptions", after_help = EXIT_CODES)]
    CheckAssumptions {
        #[command(flatten)]
        family: FamilyArgs,
        /// True parameter; defaults to 1 (or −0.5 for rayleigh) in every coordinate.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        /// Extra random directions on top of the coordinate axes.
        #[arg(long, default_value_t = 0)]
        random_directions: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run estimators on a triplet CSV (`i,x..,y..,z`).
    #[command(after_help = EXIT_CODES)]
    Estimate {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        data: PathBuf,
        /// Estimator names; repeat or comma-separate.
        #[arg(long, value_delimiter = ',', default_value = "so")]
        estimator: Vec<String>,
        /// Channel the labels came from.
        #[arg(long, default_value = "deterministic")]
        channel: String,
        /// True parameter, for WC and for error reporting.
        #[arg(long, allow_hyphen_values = true)]
        theta_star: Option<String>,
        /// Uniform box `lo,hi`; defaults to the family box.
        #[arg(long = "box", allow_hyphen_values = true)]
        bounds: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FamilyName {
    Gaussian,
    Laplace,
    Rayleigh,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    /// Dimension (gaussian only).
    #[arg(long)]
    d: Option<usize>,
    /// `identity`, `diag:a,b,..` or `full:a11,a12,..` (gaussian only).
    #[arg(long)]
    sigma: Option<String>,
    /// Scale (laplace only).
    #[arg(long)]
    b: Option<f64>,
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
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
