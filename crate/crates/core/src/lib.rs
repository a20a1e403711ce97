//! Benchmarking and profiling of iterative optimization heuristics on
//! pseudo-Boolean problems.
//!
//! The crate covers both halves of the workflow: generating logs
//! ([`suite`], [`logger`], [`runner`]) and analysing them ([`dataset`],
//! [`stats`], [`query`]).

pub mod algorithms;
pub mod config;
pub mod dataset;
pub mod logger;
pub mod query;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod suite;
pub mod table;

pub use algorithms::{OnePlusLambdaEa, RandomSearch};
pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use dataset::{load_folder, load_folders, trim_efficient, Direction, LoadError, LoadReport, Run, RunDataset, RunKey};
pub use logger::{LogRecord, ObserverConfig, RunLogger, RunSummary};
pub use query::{run_query, QueryError, QueryOutput, QueryParams, Statistic};
pub use rng::SeededGenerator;
pub use runner::{run_experiment, Algorithm, AlgorithmContext, ExperimentReport, RunOptions};
pub use stats::{StatTable, TargetGrid};
pub use suite::{InstanceSpec, Problem, Suite};
pub use table::{Cell, Table};
