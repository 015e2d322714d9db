//! `fap`: compile, split, train, evaluate and gradient-check FAP models.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fap_core::models::{Family, Task};
use fap_core::ndmath::OptimizerKind;
use fap_core::pipeline::{NounRuleMode, SplitKind};

#[derive(Debug, Parser)]
#[command(
    name = "fap",
    version,
    about = "Focus-aspect-polarity experiments over precomputed embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean tag records into a balanced, aspect-labeled manifest.
    Compile(CompileArgs),
    /// Assign train/dev/test labels to a manifest.
    Split(SplitArgs),
    /// Train a model and write it with its per-epoch log.
    Train(TrainArgs),
    /// Score a model or a baseline on one split.
    Eval(EvalArgs),
    /// Compare analytic gradients of a conditioning layer with finite differences.
    Gradcheck(GradcheckArgs),
    /// Generate a synthetic dataset with its Bayes oracle report.
    Synth(SynthArgs),
    /// Run synth, compile, split, train and eval from one JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Manifest of image records (JSON lines).
    #[arg(long)]
    manifest: PathBuf,
    /// Embeddings file ("#dim=D" header, then id<TAB>values).
    #[arg(long)]
    embeddings: PathBuf,
    /// Aspect lexicon (JSON); the built-in six-aspect table when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompileArgs {
    /// Tag records `{id, noun, adjective}` as JSON lines. A compiled manifest is accepted too.
    #[arg(long)]
    tags: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Excluded adjective-noun combinations `{adjective, noun}` as JSON lines.
    #[arg(long)]
    exclusions: Option<PathBuf>,
    /// Embeddings to filter down to the surviving images.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// How the noun rule combines "too few images" and "too few aspects".
    #[arg(long, default_value = "and")]
    mode: NounRuleMode,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long = "split-kind", default_value = "standard")]
    split_kind: SplitKind,
    /// Held-out combination as noun:aspect; repeatable. Zeroshot defaults to the standard seven.
    #[arg(long = "holdout", value_parser = parse_holdout)]
    holdouts: Vec<(String, String)>,
    /// Comma-separated ratios (train,dev,test or train,dev).
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    seed: u64,
    /// Output manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    family: Family,
    #[arg(long)]
    task: Task,
    #[arg(long, default_value_t = fap_core::models::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = fap_core::models::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = fap_core::models::DEFAULT_BATCH)]
    batch: usize,
    #[arg(long, default_value = "adam", value_parser = parse_optimizer)]
    optimizer: OptimizerKind,
    #[arg(long)]
    seed: u64,
    /// Model file; the log goes next to it with a `.log.jsonl` suffix.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Trained model file.
    #[arg(
        long,
        conflicts_with = "baseline",
        required_unless_present = "baseline"
    )]
    model: Option<PathBuf>,
    /// Image-blind baseline instead of a model.
    #[arg(long)]
    baseline: Option<Task>,
    /// train, dev, test or all.
    #[arg(long, default_value = "test")]
    split: String,
    /// Seed for the baselines.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// tensor_cond or concat_mlp.
    #[arg(long)]
    family: Family,
    /// Checks both tasks when omitted.
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Perturbs the analytic gradient (negative control).
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Comma-separated nouns.
    #[arg(long, value_delimiter = ',', default_value = "dog,cat")]
    nouns: Vec<String>,
    #[arg(long, default_value_t = 1)]
    aspects: usize,
    #[arg(long, default_value_t = 1)]
    aspects_per_noun: usize,
    #[arg(long, default_value_t = 400)]
    images_per_cell: usize,
    /// Distance between polarity means, in noise units.
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Give every noun the same polarity direction.
    #[arg(long)]
    no_flip: bool,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON config with `synth`, optional `compile`, `split` and `models`.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

fn parse_holdout(s: &str) -> Result<(String, String), String> {
    match s.split_once(':') {
        Some((n, a)) if !n.is_empty() && !a.is_empty() => Ok((n.to_string(), a.to_string())),
        _ => Err(format!("expected noun:aspect, got '{s}'")),
    }
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "adam" => Ok(OptimizerKind::Adam),
        "plain" | "sgd" => Ok(OptimizerKind::Plain),
        other => Err(format!("unknown optimizer '{other}'")),
    }
}

/// A failure attributable to how the tool was invoked.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A numeric check that ran but did not pass.
#[derive(Debug)]
struct NumericFailure(String);

impl std::fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if cause.is::<NumericFailure>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<fap_core::Error>() {
            return if e.is_numeric() { 3 } else { 2 };
        }
    }
    2
}

/// The error and its causes, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !msg.ends_with(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compile(a) => commands::compile(a),
        Command::Split(a) => commands::split(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Synth(a) => commands::synth(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
