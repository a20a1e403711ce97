use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "iohbench", version, about = "Benchmark iterative optimization heuristics and analyse their logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment described by a configuration file.
    Run(RunArgs),
    /// Write every statistic of one or more result folders as CSV.
    Process(ProcessArgs),
    /// Write a single statistic.
    Export(ExportArgs),
    /// Serve the HTTP API (and dashboard assets, when present).
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    RandomSearch,
    OnePlusLambdaEa,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub algorithm: AlgorithmName,
    #[arg(long, default_value_t = iohbench_core::runner::DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Offspring per generation of the (1+lambda) EA.
    #[arg(long, default_value_t = 1)]
    pub lambda: usize,
}

/// Target grid, budgets and trimming shared by `process` and `export`.
#[derive(Debug, Args, Clone, Default)]
pub struct AnalysisArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub fmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub fmax: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Comma-separated budgets, e.g. `1,10,100`.
    #[arg(long)]
    pub budgets: Option<String>,
    /// Comma-separated percentiles in (0, 100].
    #[arg(long)]
    pub percentiles: Option<String>,
    /// Trim every run to about CAP records before computing.
    #[arg(long, value_name = "CAP")]
    pub efficient: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    #[arg(required = true)]
    pub folders: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(required = true)]
    pub folders: Vec<PathBuf>,
    /// Statistic name, e.g. `fixed-target-summary`.
    #[arg(long)]
    pub statistic: String,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Extra query parameter, e.g. `--param kind=budget`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Result folders preloaded as one dataset.
    pub folders: Vec<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Upload size limit in megabytes.
    #[arg(long, default_value_t = 512)]
    pub max_upload_mb: usize,
    /// Built dashboard directory served at `/`; defaults to `dashboard/dist` when present.
    #[arg(long)]
    pub assets: Option<PathBuf>,
}
