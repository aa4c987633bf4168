mod analyze;
mod collect;
mod config;
mod trace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Config;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MISSING_DATA: u8 = 3;
pub const EXIT_ANALYSIS: u8 = 4;
pub const EXIT_NO_TRACER: u8 = 5;

/// A failed command: exit code plus the message printed on stderr.
#[derive(Debug)]
pub struct Fail {
    pub code: u8,
    pub message: String,
}

impl Fail {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Fail {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

/// Analyze how program properties relate to model output-prediction results.
///
/// Data follows the usual layout under --root: dataset/<DATASET>/<PROBLEM>/{main.py,input.txt,output.txt},
/// predictions in Experiment_Results/ER/result_stat/<MODEL>_<DATASET>.json, traces in
/// Experiment_Results/traces/<DATASET>/<PROBLEM>.json and reports in Experiment_Results/figures/.
#[derive(Parser, Debug)]
#[command(name = "execlens", version)]
struct Cli {
    /// Project root holding dataset/ and Experiment_Results/ [default: .]
    #[arg(long, global = true, value_name = "DIR")]
    root: Option<PathBuf>,
    /// Flat key = value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log progress, requests and responses (API keys redacted) to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute analyses and write CSV, JSON and SVG reports
    Analyze(AnalyzeArgs),
    /// Run the external tracer over every problem of the datasets
    Trace(TraceArgs),
    /// Query a model for output predictions, or merge existing result files
    Collect(CollectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    Constructs,
    Cc,
    Cognitive,
    Loc,
    LoopLength,
    Types,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Program,
    Bucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregateArg {
    Max,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    HttpChat,
    Mock,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Which analysis to run
    #[arg(value_enum)]
    pub kind: AnalysisKind,
    /// Model ids, comma separated or repeated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub models: Vec<String>,
    /// Dataset names under dataset/, comma separated or repeated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub datasets: Vec<String>,
    /// Spearman over individual programs or over bucket accuracies [default: program]
    #[arg(long, value_enum)]
    pub granularity: Option<GranularityArg>,
    /// Worker threads for per-program analysis [default: number of cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Run the tracer for problems without a trace file
    #[arg(long)]
    pub trace: bool,
    /// How loop sites combine into one loop length per program [default: max]
    #[arg(long, value_enum)]
    pub loop_aggregate: Option<AggregateArg>,
    /// Root under which Experiment_Results/figures/ is written [default: --root]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Tracer executable used with --trace [default: tracer]
    #[arg(long, value_name = "PATH")]
    pub tracer: Option<String>,
    /// Per-program tracer timeout in seconds, passed to the tracer
    #[arg(long)]
    pub timeout: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Dataset names under dataset/, comma separated or repeated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub datasets: Vec<String>,
    /// Re-trace problems that already have a trace file
    #[arg(long)]
    pub force: bool,
    /// Tracer executable [default: tracer]
    #[arg(long, value_name = "PATH")]
    pub tracer: Option<String>,
    /// Per-program timeout in seconds, passed to the tracer
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Concurrent tracer processes [default: number of cores]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CollectArgs {
    /// Model id sent to the provider and used in the result file name
    #[arg(long)]
    pub model: Option<String>,
    /// Dataset names under dataset/, comma separated or repeated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub datasets: Vec<String>,
    /// Provider kind [default: http_chat]
    #[arg(long, value_enum)]
    pub provider: Option<ProviderArg>,
    /// Chat-completions URL, or the response fixture for the mock provider
    /// [default: OpenAI endpoint, or <root>/mock/<model>.json for mock]
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key [default: OPENAI_API_KEY]
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    /// Sampling temperature [default: 0]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Completion token limit [default: 1024]
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Concurrent requests [default: 4]
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Merge these result files for one dataset, keeping any correct prediction, instead of querying
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub merge: Vec<PathBuf>,
}

pub struct Globals {
    pub root: PathBuf,
    pub config: Config,
}

fn run(cli: Cli) -> Result<(), Fail> {
    let config = match &cli.config {
        Some(path) => Config::load(path).map_err(Fail::usage)?,
        None => Config::default(),
    };
    let root = config::pick(cli.root, &config, "root", PathBuf::from(".")).map_err(Fail::usage)?;
    let globals = Globals { root, config };
    match cli.command {
        Command::Analyze(args) => analyze::run(args, &globals),
        Command::Trace(args) => trace::run(args, &globals),
        Command::Collect(args) => collect::run(args, &globals),
    }
}

/// Enum-valued setting: flag, then config file, then default.
pub fn pick_enum<T: ValueEnum>(
    cli: Option<T>,
    config: &Config,
    key: &str,
    default: T,
) -> Result<T, Fail> {
    match (cli, config.str(key)) {
        (Some(v), _) => Ok(v),
        (None, Some(s)) => {
            T::from_str(s, true).map_err(|e| Fail::usage(format!("config key `{key}`: {e}")))
        }
        (None, None) => Ok(default),
    }
}

pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Fail> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Fail::usage("--jobs must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Fail::new(EXIT_ANALYSIS, e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            ExitCode::from(fail.code)
        }
    }
}
