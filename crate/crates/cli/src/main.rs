//! `bcepp`: dataset generation, preparation, training, evaluation, skill
//! scores and loss curves for ordinal proximity-penalized BCE.

mod commands;
mod config;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bcepp_core::ordinal::ThresholdSpec;
use bcepp_core::pipeline::SplitRole;
use bcepp_core::trainer::{LossKind, ModelKind};

use failure::{CliResult, Failure};
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "bcepp", version = bcepp_core::VERSION, about = "Ordinal proximity-penalized BCE toolkit")]
struct Cli {
    /// Print the resolved run manifest and exit without reading or writing data.
    #[arg(long, global = true)]
    manifest_only: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic magnetogram dataset.
    Gen(GenArgs),
    /// Split a dataset into train/val/test by partition, optionally balancing train.
    Prepare(PrepareArgs),
    /// Train one model, or a grid of models when any --grid-* list is given.
    Train(Box<TrainArgs>),
    /// Evaluate a checkpoint on a prepared split.
    Eval(EvalArgs),
    /// Skill scores from confusion-matrix counts.
    Metrics(MetricsArgs),
    /// Loss-versus-probability curves for BCE and BCE-PP.
    Curves(CurvesArgs),
    /// Seeded synthetic benchmark comparing BCE and BCE-PP.
    Bench(BenchArgs),
    /// Re-run a command from its run_manifest.json.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Per-class sample counts, e.g. FQ=100,C=50,M=20.
    #[arg(long)]
    pub counts: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Side length of the generated (already preprocessed) images.
    #[arg(long, default_value_t = bcepp_core::pipeline::DEFAULT_SYNTH_SIZE)]
    pub size: usize,
    #[arg(long, default_value_t = ThresholdSpec::default())]
    pub threshold: ThresholdSpec,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Dataset directory written by `gen`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = ThresholdSpec::default())]
    pub threshold: ThresholdSpec,
    /// Augment FL and undersample NF in the training split.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub balance: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared dataset directory (output of `prepare`).
    #[arg(long)]
    pub data: PathBuf,
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub loss: Option<LossKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<ThresholdSpec>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Hidden layer widths for --model mlp, e.g. 32,16.
    #[arg(long)]
    pub hidden: Option<String>,
    /// Feature pooling grid side.
    #[arg(long)]
    pub pool: Option<usize>,
    #[arg(long)]
    pub grid_lr: Option<String>,
    #[arg(long)]
    pub grid_weight_decay: Option<String>,
    #[arg(long)]
    pub grid_batch_size: Option<String>,
    #[arg(long)]
    pub grid_alpha: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Prepared dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: SplitRole,
    #[arg(long, default_value_t = bcepp_core::trainer::DEFAULT_CUTOFF)]
    pub cutoff: f64,
    /// Also write the report and a run manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub tp: u64,
    #[arg(long)]
    pub fp: u64,
    #[arg(long)]
    pub tn: u64,
    #[arg(long = "fn")]
    pub fn_: u64,
    /// Also write the report and a run manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Comma-separated alpha values.
    #[arg(long, default_value = "0.25,1")]
    pub alpha: String,
    #[arg(long, default_value_t = ThresholdSpec::default())]
    pub threshold: ThresholdSpec,
    /// Number of interior probability points.
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Divide the reference class counts by this.
    #[arg(long, default_value_t = 50)]
    pub scale: usize,
    #[arg(long, default_value_t = bcepp_core::trainer::DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    let dry = cli.manifest_only;
    match cli.command {
        Command::Gen(a) => commands::gen(&a, dry),
        Command::Prepare(a) => commands::prepare(&a, dry),
        Command::Train(a) => commands::train(&a, dry),
        Command::Eval(a) => commands::eval(&a, dry),
        Command::Metrics(a) => commands::metrics(&a, dry),
        Command::Curves(a) => commands::curves(&a, dry),
        Command::Bench(a) => commands::bench(&a, dry),
        Command::Replay(a) => {
            let recorded = RunManifest::read(&a.manifest)?;
            let mut args = recorded.replay_args(a.out.as_deref());
            if dry {
                args.push("--manifest-only".into());
            }
            let cli = Cli::try_parse_from(&args)
                .map_err(|e| Failure::usage(format!("manifest does not replay: {e}")))?;
            if matches!(cli.command, Command::Replay(_)) {
                return Err(Failure::usage(
                    "a replay manifest cannot itself be a replay",
                ));
            }
            run(cli)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
