use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "hsgd",
    version,
    about = "Robust spectral signal recovery by Hankel structured gradient descent"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Recover a spectrally sparse signal from partial, corrupted samples.
    Recover(RecoverArgs),
    /// Write a synthetic instance (truth, observations, mask, outliers, manifest).
    Synth(SynthArgs),
    /// Success rates over a two-parameter grid of synthetic problems.
    PhaseGrid(GridArgs),
    /// Runtime against signal length.
    Speed(SpeedArgs),
    /// Per-iteration residual, error and factor distance on one instance.
    Trace(TraceArgs),
}

/// Solver settings shared by every command that runs the solver. Values come from
/// `--config` when given, then individual flags override them.
#[derive(Args, Debug, Clone, Default)]
pub struct Tuning {
    /// JSON file with solver configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight of the balance regularizer.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Step size as a multiple of 1/σ₁ of the initial estimate.
    #[arg(long = "eta-scale")]
    pub eta_scale: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Relative residual at which iteration stops.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Incoherence parameter in the row-norm caps.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Skip the row-norm projection.
    #[arg(long = "no-projection")]
    pub no_projection: bool,
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    /// Signal CSV (`index,re,im`); absent or non-finite entries are unobserved.
    pub signal: Option<PathBuf>,
    /// Mask file, one observed index per line. Defaults to the finite entries.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Manifest written by `synth`; supplies the signal, mask, rank and alpha.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Signal length when the last entries are absent from the file.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Outlier fraction.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Sampling rate used by the solver (default: observed fraction).
    #[arg(long)]
    pub prob: Option<f64>,
    /// Seed of the initial Lanczos vector.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Output prefix: writes PREFIX.recovered.csv, PREFIX.outliers.csv, PREFIX.report.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// Instance parameters shared by `synth` and `trace`.
#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    #[arg(long, default_value_t = 125)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Number of observed entries (default 50 unless --prob is given).
    #[arg(long, conflicts_with = "prob")]
    pub samples: Option<usize>,
    /// Observed fraction; the sample count is round(prob·n).
    #[arg(long)]
    pub prob: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Outlier half-width relative to the mean absolute real/imaginary part.
    #[arg(long = "outlier-scale", default_value_t = 10.0)]
    pub outlier_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed frequencies in [0, 1) with unit amplitudes; overrides --rank.
    #[arg(long, value_delimiter = ',')]
    pub frequencies: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Output prefix: PREFIX.{truth,observed,mask,outliers}.csv and PREFIX.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// First axis, e.g. `rank=1,2,3`; one of rank, alpha, samples.
    #[arg(long)]
    pub axis1: String,
    /// Second axis, e.g. `alpha=0.05,0.1,0.2`.
    #[arg(long)]
    pub axis2: String,
    #[arg(long, default_value_t = 125)]
    pub n: usize,
    /// Rank when not swept.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Outlier fraction when not swept.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Sample count when not swept.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Base seed for per-trial seed derivation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "outlier-scale", default_value_t = 10.0)]
    pub outlier_scale: f64,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Output prefix: PREFIX.trials.csv, PREFIX.summary.csv, PREFIX.timing.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpeedArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1024usize, 2048, 4096, 8192, 16384])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.4)]
    pub prob: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Output prefix: PREFIX.csv, PREFIX.summary.csv, PREFIX.report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Manifest written by `synth`; otherwise an instance is generated from the flags.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Output prefix: writes PREFIX.trace.csv.
    #[arg(long)]
    pub out: PathBuf,
}
