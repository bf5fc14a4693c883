//! Command-line pipeline around the prover, the extraction toolchain, the
//! sequence model, the baseline, and the evaluation kit. Every subcommand
//! is a thin deterministic wrapper; artifacts written by one stage are
//! re-loadable by the next.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod io;
pub mod scorer;

/// Failures carry their process exit code: 1 usage or configuration, 2 bad
/// or missing data, 3 violated internal invariants.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "prooftrace",
    about = "Connection-tableau proving, proof-trace datasets, sequence models, and evaluation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a self-contained directory of CNF problems.
    GenProblems(GenProblemsArgs),
    /// Prove every problem in a directory with iterative deepening.
    Prove(ProveArgs),
    /// Re-validate proof files against their problems.
    Check(CheckArgs),
    /// Extract a training corpus from proofs.
    Extract(ExtractArgs),
    /// Split a corpus by proof into train/valid/test parts.
    Split(SplitArgs),
    /// Train the sequence model on a corpus.
    Train(TrainArgs),
    /// Beam-decode a corpus with a trained model.
    Decode(DecodeArgs),
    /// Score decoded predictions against reference continuations.
    Evaluate(EvaluateArgs),
    /// Train and score the feature-hashing baseline.
    Baseline(BaselineArgs),
    /// Prove with model-guided clause ordering and compare to input order.
    GuidedProve(GuidedProveArgs),
    /// Report statistics of an externally supplied proof corpus.
    DataStats(DataStatsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderingArg {
    Input,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    /// Predict upcoming clause choices from a path.
    ClauseChoice,
    /// Propose the literal a node will hold before expanding it.
    Conjecturing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Literals,
    Clauses,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttentionArg {
    None,
    Multiplicative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args, Debug)]
pub struct GenProblemsArgs {
    /// Directory to write `<id>.p` files into (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Unsatisfiable problems to generate.
    #[arg(long, default_value_t = 100)]
    pub problems: usize,
    /// Satisfiable problems appended after the unsatisfiable ones.
    #[arg(long, default_value_t = 0)]
    pub satisfiable: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub min_goal_height: usize,
    #[arg(long, default_value_t = 7)]
    pub max_goal_height: usize,
    /// Irrelevant clauses mixed into each problem.
    #[arg(long, default_value_t = 3)]
    pub distractors: usize,
    /// Also write the bundled six-clause walkthrough problem as fig1.p.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub fig1: bool,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 32)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 1)]
    pub depth_start: usize,
    #[arg(long, default_value_t = 1)]
    pub depth_step: usize,
    /// Goal-visit budget per problem.
    #[arg(long, default_value_t = 10_000_000)]
    pub node_budget: u64,
    /// Per-problem wall-clock budget in milliseconds.
    #[arg(long)]
    pub time_budget_ms: Option<u64>,
    #[arg(long, value_enum, default_value_t = OrderingArg::Input)]
    pub ordering: OrderingArg,
    /// Shuffle seed used when --ordering random.
    #[arg(long, default_value_t = 0)]
    pub order_seed: u64,
    /// Prune branches repeating a literal already on the path.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub regularity: bool,
}

#[derive(Args, Debug)]
pub struct ProveArgs {
    /// Directory of TPTP CNF problem files (*.p).
    #[arg(long)]
    pub problems: PathBuf,
    /// Directory for proof files and stats.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Worker threads across problems; results merge in sorted order.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub problems: PathBuf,
    /// Directory of proof files (*.proof).
    #[arg(long)]
    pub proofs: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub problems: PathBuf,
    #[arg(long)]
    pub proofs: PathBuf,
    /// Directory for the corpus triple (<stem>.src/.tgt/.meta).
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus stem; defaults to `<kind>_<steps>` or `conjecture`.
    #[arg(long)]
    pub stem: Option<String>,
    #[arg(long, value_enum, default_value_t = TaskArg::ClauseChoice)]
    pub task: TaskArg,
    /// Source-path flavor for clause-choice extraction.
    #[arg(long, value_enum, default_value_t = KindArg::Literals)]
    pub kind: KindArg,
    /// Clause-choice lookahead (1, 2, or 3).
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Directory holding the corpus to split.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub stem: String,
    /// Output directory; defaults to the corpus directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Stem of the training split.
    #[arg(long)]
    pub stem: String,
    /// Checkpoint path; vocabularies and the loss curve are written next
    /// to it.
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub embed: usize,
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1)]
    pub enc_layers: usize,
    #[arg(long, default_value_t = 1)]
    pub dec_layers: usize,
    #[arg(long, value_enum, default_value_t = AttentionArg::Multiplicative)]
    pub attention: AttentionArg,
    /// Parameter initialization seed.
    #[arg(long, default_value_t = 0)]
    pub init_seed: u64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Global gradient-norm ceiling; 0 disables clipping.
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
    #[arg(long, default_value_t = 0)]
    pub shuffle_seed: u64,
    /// Accepted for interface symmetry; training is always single-threaded.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub stem: String,
    /// Checkpoint written by train.
    #[arg(long)]
    pub model: PathBuf,
    /// Beam width and the number of hypotheses kept per example.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Longest decodable output, in content tokens.
    #[arg(long, default_value_t = 64)]
    pub max_len: usize,
    /// Predictions file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Stem of the evaluated (typically test) split.
    #[arg(long)]
    pub stem: String,
    /// Corpus directory supplying reference continuations; defaults to
    /// --corpus.
    #[arg(long)]
    pub reference_corpus: Option<PathBuf>,
    /// Stem of the reference corpus (usually the full unsplit extraction).
    /// Required for clause-choice corpora.
    #[arg(long)]
    pub reference_stem: Option<String>,
    /// Predictions file written by decode.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Hypotheses per example to count (prefix of the decoded beam).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Directory for the report CSVs.
    #[arg(long)]
    pub out: PathBuf,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    pub train_corpus: PathBuf,
    #[arg(long)]
    pub train_stem: String,
    /// Corpus directory to score; defaults to --train-corpus.
    #[arg(long)]
    pub eval_corpus: Option<PathBuf>,
    /// Stem of the split to score; omit to skip evaluation.
    #[arg(long)]
    pub eval_stem: Option<String>,
    /// Stem of the reference corpus; required when evaluating.
    #[arg(long)]
    pub reference_stem: Option<String>,
    /// Path-feature decay toward older literals.
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Labels per prediction.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Where to persist the trained model.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Directory for accuracy CSVs; required when evaluating.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GuidedProveArgs {
    #[arg(long)]
    pub problems: PathBuf,
    /// Directory for guided proofs and both stats files.
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint of a literal-path clause-choice model.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DataStatsArgs {
    /// Root of an externally supplied corpus; omit to skip the check.
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// key=value file applied before the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Command {
    fn config_path(&self) -> Option<&PathBuf> {
        match self {
            Command::GenProblems(a) => a.config.as_ref(),
            Command::Prove(a) => a.config.as_ref(),
            Command::Check(a) => a.config.as_ref(),
            Command::Extract(a) => a.config.as_ref(),
            Command::Split(a) => a.config.as_ref(),
            Command::Train(a) => a.config.as_ref(),
            Command::Decode(a) => a.config.as_ref(),
            Command::Evaluate(a) => a.config.as_ref(),
            Command::Baseline(a) => a.config.as_ref(),
            Command::GuidedProve(a) => a.config.as_ref(),
            Command::DataStats(a) => a.config.as_ref(),
        }
    }
}

/// Turns a key=value config file into synthetic long flags, inserted right
/// after the subcommand. Keys the command line already sets are dropped, so
/// explicit flags win.
fn splice_config(argv: &[String], path: &PathBuf) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    let explicit: std::collections::HashSet<&str> = argv[2..]
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let mut injected = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config file {} line {}: expected key=value, found {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key == "config" {
            return Err(CliError::Usage(format!(
                "config file {} line {}: config files cannot nest",
                path.display(),
                lineno + 1
            )));
        }
        if explicit.contains(key) {
            continue;
        }
        injected.push(format!("--{key}={value}"));
    }
    let mut out = Vec::with_capacity(argv.len() + injected.len());
    out.push(argv[0].clone());
    out.push(argv[1].clone());
    out.extend(injected);
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenProblems(args) => commands::gen::run(args),
        Command::Prove(args) => commands::prove::run(args),
        Command::Check(args) => commands::prove::run_check(args),
        Command::Extract(args) => commands::corpus::run_extract(args),
        Command::Split(args) => commands::corpus::run_split(args),
        Command::Train(args) => commands::model::run_train(args),
        Command::Decode(args) => commands::model::run_decode(args),
        Command::Evaluate(args) => commands::eval::run_evaluate(args),
        Command::Baseline(args) => commands::eval::run_baseline(args),
        Command::GuidedProve(args) => commands::prove::run_guided(args),
        Command::DataStats(args) => commands::stats::run(args),
    }
}

/// Full argv-in, exit-code-out entry point shared by the binary and tests.
pub fn main_entry(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cli = match cli.command.config_path().cloned() {
        None => cli,
        Some(path) => {
            let spliced = match splice_config(&argv, &path) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            };
            match Cli::try_parse_from(&spliced) {
                Ok(cli) => cli,
                Err(e) => {
                    eprintln!("error in config file {}:", path.display());
                    let _ = e.print();
                    return 1;
                }
            }
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
