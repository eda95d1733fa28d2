//! `rwnet`: generate rewriting corpora, train step-prediction networks,
//! evaluate them, run guided rewriting, and author derivations by hand.

mod commands;
mod config;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;

/// Errors split by exit code: usage and configuration problems exit with
/// 2, failures during a well-formed run exit with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(err: impl Into<anyhow::Error>) -> Self {
        CliError::Usage(err.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "rwnet",
    version,
    about = "Term rewriting guided by a learned step predictor",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rewrite rule file.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Solved-form goal: auto, equation, or eliminate:A,B.
    #[arg(long)]
    goal: Option<String>,
    /// Output directory (default: $RWNET_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for generation, initialization, and shuffling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of questions to attempt.
    #[arg(long)]
    count: Option<usize>,
    /// Fraction of steps assigned to the training split.
    #[arg(long)]
    train_ratio: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus directory (default: the output directory).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Hidden layer count; 1, 3, and 5 mirror the experiment grid.
    #[arg(long)]
    hidden_layers: Option<usize>,
    /// Units per hidden layer.
    #[arg(long)]
    hidden_units: Option<usize>,
    /// Partial-tree expansion depth; 1, 2, and 3 mirror the grid.
    #[arg(long)]
    rpt_depth: Option<usize>,
    /// Expansion mode: rpt or crpt.
    #[arg(long)]
    mode: Option<String>,
    /// Add the symbol-agreement matrix block.
    #[arg(long)]
    sav: bool,
    /// Append the last N applied actions as history blocks; 0 disables.
    #[arg(long)]
    rar: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    init_lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Where to write the model (default: <out>/model-<tag>.bin).
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Test,
    Train,
    All,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus directory (default: the output directory).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model file (default: <out>/model-<tag>.bin).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Which split to score.
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
}

#[derive(Args)]
struct RewriteArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Expression to rewrite.
    expr: String,
    /// Model file (default: <out>/model-<tag>.bin).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Step budget before giving up with a step-limit outcome.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Ranked classes tried per step; 0 means unbounded.
    #[arg(long)]
    rank_cap: Option<usize>,
    /// Also append the trace to this file as a JSON line.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Question to start the derivation from.
    expr: String,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of questions with derived step-by-step solutions.
    Gen(GenArgs),
    /// Train a step predictor on a generated corpus.
    Train(TrainArgs),
    /// Score a model's step predictions against recorded derivations.
    Eval(EvalArgs),
    /// Rewrite an expression step by step under model guidance.
    Rewrite(RewriteArgs),
    /// Author a derivation interactively, mixing manual steps and search.
    Repl(ReplArgs),
}

fn base_config(common: &CommonArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref()).map_err(CliError::Usage)?;
    if let Some(rules) = &common.rules {
        cfg.rules = rules.clone();
    }
    if let Some(goal) = &common.goal {
        cfg.goal = goal.clone();
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn validated(cfg: ExperimentConfig) -> CliResult<ExperimentConfig> {
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(args) => {
            let mut cfg = base_config(&args.common)?;
            if let Some(count) = args.count {
                cfg.count = count;
            }
            if let Some(ratio) = args.train_ratio {
                cfg.train_ratio = ratio;
            }
            commands::gen::run(&validated(cfg)?)
        }
        Command::Train(args) => {
            let mut cfg = base_config(&args.common)?;
            if let Some(data) = &args.data {
                cfg.data = Some(data.clone());
            }
            if let Some(n) = args.hidden_layers {
                cfg.hidden_layers = n;
            }
            if let Some(n) = args.hidden_units {
                cfg.hidden_units = n;
            }
            if let Some(d) = args.rpt_depth {
                cfg.rpt_depth = d;
            }
            if let Some(mode) = &args.mode {
                cfg.set("mode", mode).map_err(CliError::Usage)?;
            }
            if args.sav {
                cfg.sav = true;
            }
            if let Some(n) = args.rar {
                cfg.rar = n;
            }
            if let Some(lr) = args.init_lr {
                cfg.init_lr = lr;
            }
            if let Some(b) = args.batch_size {
                cfg.batch_size = b;
            }
            if let Some(e) = args.max_epochs {
                cfg.max_epochs = e;
            }
            if let Some(path) = &args.model_out {
                cfg.model = Some(path.clone());
            }
            commands::train::run(&validated(cfg)?)
        }
        Command::Eval(args) => {
            let mut cfg = base_config(&args.common)?;
            if let Some(data) = &args.data {
                cfg.data = Some(data.clone());
            }
            if let Some(model) = &args.model {
                cfg.model = Some(model.clone());
            }
            let split = match args.split {
                SplitArg::Test => commands::eval::Split::Test,
                SplitArg::Train => commands::eval::Split::Train,
                SplitArg::All => commands::eval::Split::All,
            };
            commands::eval::run(&validated(cfg)?, split)
        }
        Command::Rewrite(args) => {
            let mut cfg = base_config(&args.common)?;
            if let Some(model) = &args.model {
                cfg.model = Some(model.clone());
            }
            if let Some(n) = args.max_steps {
                cfg.max_steps = n;
            }
            if let Some(n) = args.rank_cap {
                cfg.rank_cap = n;
            }
            commands::rewrite::run(&validated(cfg)?, &args.expr, args.trace_out.as_deref())
        }
        Command::Repl(args) => {
            let cfg = base_config(&args.common)?;
            commands::repl::run(&validated(cfg)?, &args.expr)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
