//! `loglab` command line: synthetic corpora, preprocessing, sampling,
//! training with well-level cross-validation, well clustering
//! evaluation, domain adaptation, and figure-series reports.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

mod cmd_adapt;
mod cmd_eval_wells;
mod cmd_preprocess;
mod cmd_report;
mod cmd_sample;
mod cmd_synth;
mod cmd_train;
mod common;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "loglab",
    version,
    about = "Similarity learning toolkit for well-log depth series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus CSV.
    Synth(SynthArgs),
    /// Clean, fill, and normalize a raw corpus.
    Preprocess(PreprocessArgs),
    /// Emit pair / triplet datasets from a preprocessed corpus.
    Sample(SampleArgs),
    /// Train a model with well-level cross-validation.
    Train(TrainArgs),
    /// Cluster wells from a checkpoint and report agreement metrics.
    EvalWells(EvalWellsArgs),
    /// Apply, retrain, or fine-tune a checkpoint on a new corpus.
    Adapt(AdaptArgs),
    /// Consolidate run directories into figure-series CSVs.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Linking,
    CloseLinking,
}

impl TaskArg {
    pub fn to_task(self) -> loglab::sampler::Task {
        match self {
            TaskArg::Linking => loglab::sampler::Task::Linking,
            TaskArg::CloseLinking => loglab::sampler::Task::CloseLinking,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Logreg,
    Gbdt,
    SiameseFc3,
    SiameseEuclid,
    SiameseCosine,
    TripletEuclid,
    TripletCosine,
}

impl ModelArg {
    pub fn name(self) -> &'static str {
        match self {
            ModelArg::Logreg => "logreg",
            ModelArg::Gbdt => "gbdt",
            ModelArg::SiameseFc3 => "siamese-fc3",
            ModelArg::SiameseEuclid => "siamese-euclid",
            ModelArg::SiameseCosine => "siamese-cosine",
            ModelArg::TripletEuclid => "triplet-euclid",
            ModelArg::TripletCosine => "triplet-cosine",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    /// Aggregate interval embeddings into one well embedding first.
    #[value(alias = "micro")]
    Embedding,
    /// Score interval pairs first, then reduce the scores.
    #[value(alias = "macro")]
    Score,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Mean,
    Max,
    Min,
    Std,
}

impl StrategyArg {
    pub fn to_strategy(self) -> loglab::wellsim::AggStrategy {
        match self {
            StrategyArg::Mean => loglab::wellsim::AggStrategy::Mean,
            StrategyArg::Max => loglab::wellsim::AggStrategy::Max,
            StrategyArg::Min => loglab::wellsim::AggStrategy::Min,
            StrategyArg::Std => loglab::wellsim::AggStrategy::Std,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Wellname,
    Class,
    ClassLayer,
}

impl TargetArg {
    pub fn to_target(self) -> loglab::wellsim::ClusterTarget {
        match self {
            TargetArg::Wellname => loglab::wellsim::ClusterTarget::WellName,
            TargetArg::Class => loglab::wellsim::ClusterTarget::Class,
            TargetArg::ClassLayer => loglab::wellsim::ClusterTarget::ClassLayer,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Pretrained,
    Scratch,
    Finetune,
}

impl ModeArg {
    pub fn to_mode(self) -> loglab::training::AdaptMode {
        match self {
            ModeArg::Pretrained => loglab::training::AdaptMode::Pretrained,
            ModeArg::Scratch => loglab::training::AdaptMode::Scratch,
            ModeArg::Finetune => loglab::training::AdaptMode::Finetune,
        }
    }
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 10)]
    pub wells_per_class: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    #[arg(long, default_value_t = 6)]
    pub channels: usize,
    #[arg(long, default_value_t = 0.0)]
    pub class_gap: f64,
    #[arg(long, default_value_t = 0.8)]
    pub well_offset: f64,
    #[arg(long, default_value_t = 1.5)]
    pub layer_spread: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ar_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub ar_max: f64,
    #[arg(long, default_value_t = 80)]
    pub thickness: usize,
    #[arg(long, default_value_t = 0.10)]
    pub jitter: f64,
}

#[derive(Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Caliper-minus-bitsize threshold above which a row is cavernous.
    #[arg(long, default_value_t = 0.35)]
    pub cavern_delta: f64,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = TaskArg::Linking)]
    pub task: TaskArg,
    /// pairs, triplets, or both
    #[arg(long, default_value = "both")]
    pub what: String,
    #[arg(long, default_value_t = 10_000)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub interval_len: usize,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = TaskArg::Linking)]
    pub task: TaskArg,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 10_000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub eval_size: usize,
    #[arg(long, default_value_t = 100)]
    pub interval_len: usize,
}

#[derive(Args)]
pub struct EvalWellsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = LevelArg::Embedding)]
    pub level: LevelArg,
    /// Restrict to one strategy; all four are evaluated by default.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum, default_value_t = TargetArg::Class)]
    pub target: TargetArg,
    #[arg(long, default_value_t = 100)]
    pub intervals_per_well: usize,
    #[arg(long, default_value_t = 100)]
    pub interval_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct AdaptArgs {
    /// Source checkpoint to adapt.
    #[arg(long)]
    pub source: PathBuf,
    /// Preprocessed target corpus (its own stats).
    #[arg(long)]
    pub target_corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = TaskArg::Linking)]
    pub task: TaskArg,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 2000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 500)]
    pub eval_size: usize,
    #[arg(long, default_value_t = 100)]
    pub interval_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Preprocessed corpus the series are computed on.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Run directories produced by `train` / `adapt`.
    #[arg(long, required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest start-index shift in the depth-delta series.
    #[arg(long, default_value_t = 800)]
    pub max_delta: usize,
    #[arg(long, default_value_t = 100)]
    pub interval_len: usize,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth::run(&args),
        Command::Preprocess(args) => cmd_preprocess::run(&args),
        Command::Sample(args) => cmd_sample::run(&args),
        Command::Train(args) => cmd_train::run(&args),
        Command::EvalWells(args) => cmd_eval_wells::run(&args),
        Command::Adapt(args) => cmd_adapt::run(&args),
        Command::Report(args) => cmd_report::run(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
