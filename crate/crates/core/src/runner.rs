//! Experiment driver: suite x dimensions x instances x restarts, with
//! budget enforcement and per-run logging.
//!
//! Run seeding: run `r` (0-based) of instance `i` on function `f` and
//! dimension `d` uses `mix_seed([RUN, seed, f, d, i, r])`, see
//! [`crate::rng::mix_seed`].

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::logger::{self, FileFamily, FinishedRun, InfoBlock, LoggerError, ObserverConfig, RunLogger};
use crate::rng::{mix_seed, tags, SeededGenerator};
use crate::suite::{InstancedProblem, Suite, SuiteError};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("optimum reached, run stopped")]
    OptimumReached,
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Logger(#[from] LoggerError),
    #[error("{0}")]
    Algorithm(String),
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("result folder {path}: {source}")]
    Folder {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Logger(#[from] LoggerError),
    #[error("f{function_id} DIM{dimension} instance {instance_id} run {run}: {source}")]
    Run {
        function_id: u32,
        dimension: usize,
        instance_id: u32,
        run: u32,
        #[source]
        source: RunError,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// The interface an algorithm sees during one run.
pub struct AlgorithmContext<'a> {
    problem: &'a InstancedProblem,
    logger: RunLogger,
    max_budget: u64,
    evaluations: u64,
    staged: Vec<f64>,
    stop_on_optimum: bool,
    optimum_reached: bool,
    pub random: SeededGenerator,
}

impl<'a> AlgorithmContext<'a> {
    pub fn new(
        problem: &'a InstancedProblem,
        observer: &ObserverConfig,
        max_budget: u64,
        seed: u64,
        stop_on_optimum: bool,
    ) -> Self {
        AlgorithmContext {
            problem,
            logger: RunLogger::new(observer, problem.spec.instance_id, max_budget),
            max_budget,
            evaluations: 0,
            staged: vec![f64::NAN; observer.parameter_names.len()],
            stop_on_optimum,
            optimum_reached: false,
            random: SeededGenerator::new(seed),
        }
    }

    pub fn dimension(&self) -> usize {
        self.problem.dimension()
    }

    pub fn max_budget(&self) -> u64 {
        self.max_budget
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn remaining(&self) -> u64 {
        self.max_budget - self.evaluations
    }

    /// True once the budget is spent, or the optimum was hit with early stopping on.
    pub fn should_stop(&self) -> bool {
        self.evaluations >= self.max_budget || self.optimum_reached
    }

    /// Stages parameter values for the next logged evaluation.
    pub fn set_parameters(&mut self, parameters: &[f64]) {
        self.staged.clear();
        self.staged.extend_from_slice(parameters);
    }

    /// Evaluates `x`, logs it, and returns the transformed value.
    pub fn evaluate(&mut self, x: &[u8]) -> Result<f64, RunError> {
        if self.evaluations >= self.max_budget {
            return Err(RunError::BudgetExhausted(self.max_budget));
        }
        if self.optimum_reached {
            return Err(RunError::OptimumReached);
        }
        let e = self.problem.evaluate(x)?;
        self.evaluations += 1;
        self.logger.observe(self.evaluations, e.raw, e.transformed, &self.staged)?;
        if self.stop_on_optimum && self.problem.problem.optimum_value.is_some_and(|opt| e.raw >= opt) {
            self.optimum_reached = true;
        }
        Ok(e.transformed)
    }

    pub fn finish(self) -> FinishedRun {
        self.logger.finalize()
    }
}

/// An iterative optimization heuristic driven through [`AlgorithmContext`].
pub trait Algorithm: Send + Sync {
    fn name(&self) -> &str;

    /// Runs until the context signals a stop; returns the best transformed value.
    fn run(&self, ctx: &mut AlgorithmContext<'_>) -> Result<f64, RunError>;
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub jobs: usize,
}

impl RunOptions {
    pub fn with_seed(seed: u64) -> Self {
        RunOptions { seed, jobs: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupReport {
    pub function_id: u32,
    pub dimension: usize,
    pub runs: usize,
    pub data_files: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub result_folder: PathBuf,
    pub runs_executed: usize,
    pub groups: Vec<GroupReport>,
    pub info_files: Vec<PathBuf>,
}

pub fn run_seed(seed: u64, function_id: u32, dimension: usize, instance_id: u32, run: u32) -> u64 {
    mix_seed(&[tags::RUN, seed, function_id as u64, dimension as u64, instance_id as u64, run as u64])
}

/// Executes one run and returns its logged output.
pub fn execute_run(
    algorithm: &dyn Algorithm,
    problem: &InstancedProblem,
    observer: &ObserverConfig,
    max_budget: u64,
    seed: u64,
    stop_on_optimum: bool,
) -> Result<FinishedRun, RunError> {
    let mut ctx = AlgorithmContext::new(problem, observer, max_budget, seed, stop_on_optimum);
    match algorithm.run(&mut ctx) {
        Ok(_) | Err(RunError::BudgetExhausted(_)) | Err(RunError::OptimumReached) => Ok(ctx.finish()),
        Err(e) => Err(e),
    }
}

/// Runs the full experiment described by `cfg` and writes the result folder.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    suite: &Suite,
    algorithm: &dyn Algorithm,
    options: &RunOptions,
) -> Result<ExperimentReport, RunnerError> {
    for &f in &cfg.function_ids {
        if !suite.contains(f) {
            return Err(SuiteError::UnknownFunction(f).into());
        }
    }
    for &i in &cfg.instance_ids {
        crate::suite::instance_spec(1, i, 1)?;
    }
    let folder = cfg.observer.result_folder.clone();
    fs::create_dir_all(&folder).map_err(|source| RunnerError::Folder { path: folder.clone(), source })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| RunnerError::Pool(e.to_string()))?;

    let first_instance = cfg.first_instance();
    let mut report =
        ExperimentReport { result_folder: folder.clone(), runs_executed: 0, groups: Vec::new(), info_files: Vec::new() };

    for &function_id in &cfg.function_ids {
        let info_path = folder.join(logger::info_file_name(function_id, first_instance));
        match fs::remove_file(&info_path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => return Err(RunnerError::Folder { path: info_path, source }),
        }
        for &dimension in &cfg.dimensions {
            let instances = cfg
                .instance_ids
                .iter()
                .map(|&i| suite.make_instance(function_id, i, dimension))
                .collect::<Result<Vec<_>, _>>()?;
            let tasks: Vec<(usize, u32)> = (0..instances.len())
                .flat_map(|k| (0..cfg.independent_restarts).map(move |r| (k, r)))
                .collect();
            let max_budget = cfg.max_budget(dimension);
            let runs: Vec<FinishedRun> = pool.install(|| {
                tasks
                    .par_iter()
                    .map(|&(k, r)| {
                        let problem = &instances[k];
                        let instance_id = problem.spec.instance_id;
                        let seed = run_seed(options.seed, function_id, dimension, instance_id, r);
                        execute_run(algorithm, problem, &cfg.observer, max_budget, seed, cfg.stop_on_optimum).map_err(
                            |source| RunnerError::Run { function_id, dimension, instance_id, run: r, source },
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let data_files =
                logger::write_data_files(&folder, &cfg.observer, function_id, dimension, first_instance, &runs)?;
            let block = InfoBlock {
                suite_name: cfg.suite_name.clone(),
                function_id,
                dimension,
                algorithm_name: cfg.observer.algorithm_name.clone(),
                algorithm_info: cfg.observer.algorithm_info.clone(),
                version: logger::FORMAT_VERSION.to_string(),
                data_path: logger::relative_data_path(function_id, dimension, first_instance, FileFamily::Dat),
                runs: runs.iter().map(|r| r.summary.clone()).collect(),
            };
            let info = logger::write_info(&folder, first_instance, &block)?;
            if !report.info_files.contains(&info) {
                report.info_files.push(info);
            }
            report.runs_executed += runs.len();
            report.groups.push(GroupReport { function_id, dimension, runs: runs.len(), data_files });
        }
    }
    Ok(report)
}
