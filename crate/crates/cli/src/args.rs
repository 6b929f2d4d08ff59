use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rms_core::environment::{Measure, Scheme};

#[derive(Debug, Parser)]
#[command(
    name = "rms",
    version,
    about = "Random mass splitting: environments, exact mass fields and verification experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one environment and store it in the binary format.
    GenEnv(Invocation<EnvFlags>),
    /// Exact mass field p(t, y) of one environment.
    Mass(Invocation<TimedEnvFlags>),
    /// Quenched walk paths in one environment.
    Walk(Invocation<WalkFlags>),
    /// Coupled pairs, their difference process and its decomposition.
    Couple(Invocation<CoupleFlags>),
    /// Second-moment curve M(n), B(n) and the fitted growth exponent.
    Moment(Invocation<GridFlags>),
    /// Zero counts of the difference process against M(n); excursion counts.
    Zeros(Invocation<GridFlags>),
    /// Holding-time tails: tau_0 survival and the maximal hold.
    Tails(Invocation<TailFlags>),
    /// Replicate mean of p(n, .) against the binomial law.
    Annealed(Invocation<AnnealedFlags>),
    /// Quenched central limit check: KS distance and variance.
    Clt(Invocation<CltFlags>),
    /// Exact mu_t = sum_k P(S_t >= 2k).
    Mu(Invocation<MuFlags>),
    /// Run the acceptance checks at reduced scale.
    Selftest(Invocation<SelftestFlags>),
}

/// Flags shared by every subcommand plus the command's own flags.
#[derive(Debug, Args)]
pub struct Invocation<T: Args> {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub flags: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Binary (environments and mass fields only).
    Bin,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replicate batches.
    #[arg(long, env = "RMS_THREADS")]
    pub threads: Option<usize>,
    /// Output file; without it the primary output goes to stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

pub fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn measure(s: &str) -> Result<Measure, String> {
    parse_serde(s)
}

fn scheme(s: &str) -> Result<Scheme, String> {
    parse_serde(s)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnvFlags {
    #[arg(long)]
    pub horizon: Option<usize>,
    /// base | size-biased
    #[arg(long, value_parser = measure)]
    pub measure: Option<Measure>,
    #[arg(long)]
    pub replicate: Option<u64>,
    /// walkers | light-cone
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TimedEnvFlags {
    /// Read the environment from a file instead of generating it.
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, value_parser = measure)]
    pub measure: Option<Measure>,
    #[arg(long)]
    pub replicate: Option<u64>,
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WalkFlags {
    #[command(flatten)]
    #[serde(flatten)]
    pub env: TimedEnvFlags,
    /// Number of independent walks.
    #[arg(long)]
    pub walks: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoupleFlags {
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<usize>,
    /// Number of pairs; each gets its own environment unless --env is given.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridFlags {
    #[arg(long)]
    pub replicates: Option<usize>,
    /// `lo:hi:xF` (geometric), `lo:hi:+S` (arithmetic) or a comma list.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TailFlags {
    /// Coupled pairs (one per environment) for the direct curves.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Horizon of the coupled pairs.
    #[arg(long)]
    pub n: Option<usize>,
    /// Tagged-walker samples for the conditional tau_0 curve.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub fit_lo: Option<usize>,
    #[arg(long)]
    pub fit_hi: Option<usize>,
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnnealedFlags {
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CltFlags {
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Number of environments, replicates `0..k`.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_parser = scheme)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MuFlags {
    #[arg(long)]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelftestFlags {}
