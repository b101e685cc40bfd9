use std::path::PathBuf;

use accessmfs::data::DataFormat;
use accessmfs::SolverVariant;
use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "accessmfs", version, about = "Semi-supervised multi-label feature selection")]
pub struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one configuration, select features, score them with ML-KNN.
    Fit(FitArgs),
    /// Grid over hyperparameters, labeled ratios and seeds.
    Sweep(SweepArgs),
    /// All four solver variants on identical splits.
    Ablation(AblationArgs),
    /// Write a planted-structure dataset.
    Synth(SynthArgs),
    /// Check a saved run.json or report.json against the solver invariants.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    /// dense_csv or sparse_multilabel.
    #[arg(long, default_value = "dense_csv")]
    pub format: DataFormat,

    /// Z-score every feature before fitting.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Neighbors per instance in S.
    #[arg(long, default_value_t = 5)]
    pub ks: usize,

    /// Neighbors per label in P [default: min(3, c-1)].
    #[arg(long)]
    pub kp: Option<usize>,

    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,

    #[arg(long, default_value_t = 20)]
    pub max_w_iters: usize,

    /// Relative objective change that ends the outer loop.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Feature counts: a comma list or start:stop[:step]
    /// [default: 100:200:10 within d, else 30% of d].
    #[arg(long)]
    pub features: Option<String>,

    #[arg(long, default_value_t = 10)]
    pub mlknn_k: usize,

    #[arg(long, default_value_t = 1.0)]
    pub mlknn_smoothing: f64,

    /// Fill the runtime_ms column (makes the CSV run-dependent).
    #[arg(long)]
    pub timings: bool,

    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub eval: EvalArgs,

    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    #[arg(long, default_value_t = 0.3)]
    pub labeled_ratio: f64,

    /// Seeds the split and the initialization.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value = "full")]
    pub variant: SolverVariant,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub eval: EvalArgs,

    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub mu: Vec<f64>,

    #[arg(long, alias = "labeled-ratio", value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub labeled_ratios: Vec<f64>,

    /// A comma list or start:stop[:step].
    #[arg(long, default_value = "1:5")]
    pub seeds: String,

    #[arg(long, value_delimiter = ',', default_value = "full")]
    pub variant: Vec<SolverVariant>,

    /// Make the cell with this canonical index fail (for testing).
    #[arg(long, hide = true)]
    pub fail_cell: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AblationArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub eval: EvalArgs,

    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    #[arg(long, default_value_t = 0.3)]
    pub labeled_ratio: f64,

    #[arg(long, default_value = "1:5")]
    pub seeds: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 300)]
    pub instances: usize,
    #[arg(long, default_value_t = 50)]
    pub features: usize,
    #[arg(long, default_value_t = 10)]
    pub informative: usize,
    #[arg(long, default_value_t = 5)]
    pub labels: usize,
    /// Noise added to the label scores before thresholding.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Per-label positive threshold quantile.
    #[arg(long, default_value_t = 0.7)]
    pub quantile: f64,
    /// Latent factors behind the informative block (0 = independent).
    #[arg(long, default_value_t = 0)]
    pub latent: usize,
    #[arg(long, default_value_t = 0.25)]
    pub latent_noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "dense_csv")]
    pub format: DataFormat,
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// run.json, report.json, or a directory holding either.
    pub path: PathBuf,
}

/// `a,b,c` or `start:stop[:step]` (inclusive).
pub fn parse_list(text: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("'{text}' is neither a comma list nor start:stop[:step]");
    if text.contains(':') {
        let parts: Vec<u64> = text
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let (start, stop, step) = match parts[..] {
            [a, b] => (a, b, 1),
            [a, b, s] => (a, b, s),
            _ => return Err(bad()),
        };
        if step == 0 || stop < start {
            return Err(bad());
        }
        return Ok((start..=stop).step_by(step as usize).collect());
    }
    let out: Vec<u64> = text
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
