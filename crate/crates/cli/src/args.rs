use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_count, parse_grid, parse_k, Grid};

#[derive(Debug, Parser)]
#[command(
    name = "kfreewalk",
    version,
    about = "k-free numbers hit by alpha-random walks",
    after_help = "Set KFREEWALK_THREADS to cap the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting hit density theta_k(a,b,r).
    Theta(ThetaArgs),
    /// Density of k-free numbers congruent to r mod q.
    Beta(BetaArgs),
    /// Monte Carlo batch of walks, or a convergence table with --grid.
    Simulate(SimulateArgs),
    /// Exact hit probabilities E(X_i) and moments of the hit fraction.
    Exact(ExactArgs),
    /// Run the verification suite; exit code is the number of failed checks.
    Verify(VerifyArgs),
    /// Count k-free numbers up to N, optionally in a progression.
    Count(CountArgs),
    /// Fit the decay of the hit-fraction variance along a grid of N.
    Decay(DecayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the table or report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct Walk {
    /// Power in the k-free condition [default: 3]
    #[arg(short = 'k', value_parser = parse_k)]
    pub k: Option<u32>,
    /// Step taken with probability alpha [default: 2]
    #[arg(short = 'a', value_parser = parse_count)]
    pub a: Option<u64>,
    /// Step taken with probability 1 - alpha [default: 3]
    #[arg(short = 'b', value_parser = parse_count)]
    pub b: Option<u64>,
    /// Starting point [default: 0]
    #[arg(short = 'r', value_parser = parse_count)]
    pub r: Option<u64>,
    /// Probability of an a-step [default: 0.5]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Primes up to this bound enter the Euler product [default: 100000]
    #[arg(long, value_parser = parse_count)]
    pub prime_limit: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    #[command(flatten)]
    pub walk: Walk,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    /// [default: 3]
    #[arg(short = 'k', value_parser = parse_k)]
    pub k: Option<u32>,
    /// Modulus [default: 1]
    #[arg(short = 'q', value_parser = parse_count)]
    pub q: Option<u64>,
    /// Residue [default: 0]
    #[arg(short = 'r', value_parser = parse_count)]
    pub r: Option<u64>,
    /// [default: 100000]
    #[arg(long, value_parser = parse_count)]
    pub prime_limit: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub walk: Walk,
    /// Steps per walk [default: 100000]
    #[arg(short = 'N', value_parser = parse_count)]
    pub n: Option<u64>,
    /// Number of walks [default: 64]
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    /// Master seed; drawn from entropy and echoed when omitted
    #[arg(long, value_parser = parse_count)]
    pub seed: Option<u64>,
    /// Comma-separated N values, e.g. 1000,1e4 or 2^10..2^17; emits a convergence table
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub walk: Walk,
    /// [default: 12]
    #[arg(short = 'N', value_parser = parse_count)]
    pub n: Option<u64>,
    /// Also compute V(S_N); cost grows like N^3
    #[arg(long)]
    pub variance: bool,
    /// Cross-check against enumeration of all 2^N paths (N <= 20)
    #[arg(long)]
    pub oracle: bool,
    /// Largest N accepted with --variance [default: 3000]
    #[arg(long, value_parser = parse_count)]
    pub pair_cap: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Reduced grids; finishes in a few seconds
    #[arg(long)]
    pub quick: bool,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// [default: 2]
    #[arg(short = 'k', value_parser = parse_k)]
    pub k: Option<u32>,
    /// Upper bound [default: 1000000]
    #[arg(short = 'N', value_parser = parse_count)]
    pub n: Option<u64>,
    /// Modulus [default: 1]
    #[arg(short = 'q', value_parser = parse_count)]
    pub q: Option<u64>,
    /// Residue [default: 0]
    #[arg(short = 'r', value_parser = parse_count)]
    pub r: Option<u64>,
    /// One row per N; replaces -N
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub walk: Walk,
    /// At least four increasing N values [default: 2^10..2^14]
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    /// Walks per grid point [default: 256]
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}
