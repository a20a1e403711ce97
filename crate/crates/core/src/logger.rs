//! Trigger-driven run logging and the `.info` index.
//!
//! Folder layout, relative to the result folder:
//!
//! ```text
//! IOHprofiler_f{F}_i{I}.info
//! data_f{F}/IOHprofiler_f{F}_DIM{D}_i{I}.{dat,cdat,idat,tdat}
//! ```
//!
//! `I` is the smallest instance id of the experiment; one data file holds
//! every run of every instance for a `(function, dimension)` pair, each run
//! starting with its own header line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const FORMAT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed leading columns of every data file.
pub const BASE_COLUMNS: [&str; 5] = [
    "function evaluation",
    "current f(x)",
    "best-so-far f(x)",
    "current af(x)+b",
    "best af(x)+b",
];

#[derive(Debug, Error)]
pub enum LoggerError {
    #[error("expected {expected} parameter values, got {actual}")]
    ParameterCount { expected: usize, actual: usize },
    #[error("evaluation {got} does not follow {previous}")]
    OutOfOrder { previous: u64, got: u64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LoggerError + '_ {
    move |source| LoggerError::Io { path: path.to_path_buf(), source }
}

/// The four data-file families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FileFamily {
    /// Every improvement of the best-so-far value.
    Dat,
    /// Every evaluation.
    Cdat,
    /// Every tau-th evaluation.
    Idat,
    /// Log-spaced time triggers.
    Tdat,
}

impl FileFamily {
    pub const ALL: [FileFamily; 4] = [FileFamily::Dat, FileFamily::Cdat, FileFamily::Idat, FileFamily::Tdat];

    pub fn extension(self) -> &'static str {
        match self {
            FileFamily::Dat => "dat",
            FileFamily::Cdat => "cdat",
            FileFamily::Idat => "idat",
            FileFamily::Tdat => "tdat",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Observer and trigger settings of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverConfig {
    pub observer_name: String,
    pub result_folder: PathBuf,
    pub algorithm_name: String,
    pub algorithm_info: String,
    pub parameter_names: Vec<String>,
    pub complete_triggers: bool,
    /// Step of the `.idat` interval trigger; 0 disables the file.
    pub interval_step: u64,
    /// Number of log-spaced `.tdat` budgets per decade; 0 disables them.
    pub target_triggers: u32,
    /// Bases `v` of the `v * 10^i` budgets; empty disables them.
    pub base_evaluations: Vec<u64>,
}

impl ObserverConfig {
    pub fn new(result_folder: impl Into<PathBuf>, algorithm_name: impl Into<String>) -> Self {
        let algorithm_name = algorithm_name.into();
        ObserverConfig {
            observer_name: "PBO".into(),
            result_folder: result_folder.into(),
            algorithm_info: algorithm_name.clone(),
            algorithm_name,
            parameter_names: Vec::new(),
            complete_triggers: false,
            interval_step: 0,
            target_triggers: 0,
            base_evaluations: Vec::new(),
        }
    }

    pub fn enabled(&self, family: FileFamily) -> bool {
        match family {
            FileFamily::Dat => true,
            FileFamily::Cdat => self.complete_triggers,
            FileFamily::Idat => self.interval_step > 0,
            FileFamily::Tdat => self.target_triggers > 0 || !self.base_evaluations.is_empty(),
        }
    }

    pub fn enabled_families(&self) -> Vec<FileFamily> {
        FileFamily::ALL.iter().copied().filter(|&f| self.enabled(f)).collect()
    }

    pub fn header_line(&self) -> String {
        let mut line = BASE_COLUMNS.iter().map(|c| format!("\"{c}\"")).collect::<Vec<_>>().join(" ");
        for p in &self.parameter_names {
            let _ = write!(line, " \"{p}\"");
        }
        line
    }
}

/// One logged evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub evaluations: u64,
    pub raw_value: f64,
    pub best_raw: f64,
    pub transformed_value: f64,
    pub best_transformed: f64,
    pub parameters: Vec<f64>,
}

impl LogRecord {
    /// Space-separated data row; numbers use shortest round-trip decimals.
    pub fn to_row(&self) -> String {
        let mut s = format!(
            "{} {} {} {} {}",
            self.evaluations, self.raw_value, self.best_raw, self.transformed_value, self.best_transformed
        );
        for p in &self.parameters {
            let _ = write!(s, " {p}");
        }
        s
    }
}

/// Per-run entry of the `.info` index.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub instance_id: u32,
    pub datapoint_count: usize,
    pub final_best: f64,
}

impl RunSummary {
    pub fn info_entry(&self) -> String {
        format!("{}:{}|{}", self.instance_id, self.datapoint_count, self.final_best)
    }
}

/// `{ v * 10^i } ∪ { round(10^(i/t)) }`, capped at `max_budget`.
pub fn time_trigger_budgets(target_triggers: u32, base_evaluations: &[u64], max_budget: u64) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for &v in base_evaluations.iter().filter(|&&v| v >= 1) {
        let mut b = v;
        while b <= max_budget {
            out.insert(b);
            match b.checked_mul(10) {
                Some(next) => b = next,
                None => break,
            }
        }
    }
    if target_triggers > 0 {
        let t = target_triggers as f64;
        for i in 0.. {
            let b = 10f64.powf(i as f64 / t).round();
            if b > max_budget as f64 {
                break;
            }
            out.insert(b as u64);
        }
    }
    out
}

/// Logging state of one run. Buffers the rows of every enabled family.
#[derive(Debug)]
pub struct RunLogger {
    instance_id: u32,
    parameter_count: usize,
    interval_step: u64,
    time_budgets: BTreeSet<u64>,
    buffers: [Option<String>; 4],
    last_written: [u64; 4],
    last: Option<LogRecord>,
    dat_rows: usize,
    cdat_rows: usize,
}

/// Output of a finished run: the summary and the buffered file contents.
#[derive(Clone, Debug)]
pub struct FinishedRun {
    pub summary: RunSummary,
    pub evaluations: u64,
    buffers: [Option<String>; 4],
}

impl FinishedRun {
    pub fn contents(&self, family: FileFamily) -> Option<&str> {
        self.buffers[family.index()].as_deref()
    }

    /// Number of `.cdat` rows, or `None` when the family is disabled.
    pub fn row_count(&self, family: FileFamily) -> Option<usize> {
        self.contents(family).map(|c| c.lines().count().saturating_sub(1))
    }
}

impl RunLogger {
    pub fn new(config: &ObserverConfig, instance_id: u32, max_budget: u64) -> Self {
        let header = config.header_line();
        let buffers = FileFamily::ALL.map(|f| config.enabled(f).then(|| format!("{header}\n")));
        RunLogger {
            instance_id,
            parameter_count: config.parameter_names.len(),
            interval_step: config.interval_step,
            time_budgets: time_trigger_budgets(config.target_triggers, &config.base_evaluations, max_budget),
            buffers,
            last_written: [0; 4],
            last: None,
            dat_rows: 0,
            cdat_rows: 0,
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.last.as_ref().map_or(0, |r| r.evaluations)
    }

    pub fn best_raw(&self) -> Option<f64> {
        self.last.as_ref().map(|r| r.best_raw)
    }

    pub fn best_transformed(&self) -> Option<f64> {
        self.last.as_ref().map(|r| r.best_transformed)
    }

    fn push(&mut self, family: FileFamily, record: &LogRecord) {
        if let Some(buf) = self.buffers[family.index()].as_mut() {
            buf.push_str(&record.to_row());
            buf.push('\n');
            self.last_written[family.index()] = record.evaluations;
            match family {
                FileFamily::Dat => self.dat_rows += 1,
                FileFamily::Cdat => self.cdat_rows += 1,
                _ => {}
            }
        }
    }

    /// Records one evaluation and appends it to every file whose trigger fires.
    pub fn observe(&mut self, evaluations: u64, raw: f64, transformed: f64, parameters: &[f64]) -> Result<(), LoggerError> {
        if parameters.len() != self.parameter_count {
            return Err(LoggerError::ParameterCount { expected: self.parameter_count, actual: parameters.len() });
        }
        let previous = self.evaluations();
        if evaluations <= previous {
            return Err(LoggerError::OutOfOrder { previous, got: evaluations });
        }
        let (improved, best_raw, best_transformed) = match &self.last {
            None => (true, raw, transformed),
            Some(prev) => (
                raw > prev.best_raw,
                prev.best_raw.max(raw),
                prev.best_transformed.max(transformed),
            ),
        };
        let record = LogRecord {
            evaluations,
            raw_value: raw,
            best_raw,
            transformed_value: transformed,
            best_transformed,
            parameters: parameters.to_vec(),
        };
        let first = previous == 0;
        self.push(FileFamily::Cdat, &record);
        if first || (self.interval_step > 0 && evaluations.is_multiple_of(self.interval_step)) {
            self.push(FileFamily::Idat, &record);
        }
        if first || improved {
            self.push(FileFamily::Dat, &record);
        }
        if first || self.time_budgets.contains(&evaluations) {
            self.push(FileFamily::Tdat, &record);
        }
        self.last = Some(record);
        Ok(())
    }

    /// Ends the run, appending the last record to `.dat`/`.tdat` if missing.
    pub fn finalize(mut self) -> FinishedRun {
        if let Some(last) = self.last.take() {
            for family in [FileFamily::Dat, FileFamily::Tdat] {
                if self.last_written[family.index()] != last.evaluations {
                    self.push(family, &last);
                }
            }
            self.last = Some(last);
        }
        let summary = RunSummary {
            instance_id: self.instance_id,
            datapoint_count: self.dat_rows,
            final_best: self.best_raw().unwrap_or(f64::NAN),
        };
        FinishedRun { summary, evaluations: self.evaluations(), buffers: self.buffers }
    }
}

pub fn data_dir_name(function_id: u32) -> String {
    format!("data_f{function_id}")
}

pub fn data_file_name(function_id: u32, dimension: usize, instance_id: u32, family: FileFamily) -> String {
    format!("IOHprofiler_f{function_id}_DIM{dimension}_i{instance_id}.{}", family.extension())
}

/// Data-file path relative to the result folder, `/`-separated.
pub fn relative_data_path(function_id: u32, dimension: usize, instance_id: u32, family: FileFamily) -> String {
    format!("{}/{}", data_dir_name(function_id), data_file_name(function_id, dimension, instance_id, family))
}

pub fn info_file_name(function_id: u32, instance_id: u32) -> String {
    format!("IOHprofiler_f{function_id}_i{instance_id}.info")
}

/// Writes the data files of one `(function, dimension)` group, replacing
/// existing files. Returns the written paths.
pub fn write_data_files(
    folder: &Path,
    config: &ObserverConfig,
    function_id: u32,
    dimension: usize,
    first_instance: u32,
    runs: &[FinishedRun],
) -> Result<Vec<PathBuf>, LoggerError> {
    let dir = folder.join(data_dir_name(function_id));
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = Vec::new();
    for family in config.enabled_families() {
        let path = dir.join(data_file_name(function_id, dimension, first_instance, family));
        let mut out = String::new();
        for run in runs {
            if let Some(c) = run.contents(family) {
                out.push_str(c);
            }
        }
        fs::write(&path, out).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Header and run entries of one dimension block in an `.info` file.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoBlock {
    pub suite_name: String,
    pub function_id: u32,
    pub dimension: usize,
    pub algorithm_name: String,
    pub algorithm_info: String,
    pub version: String,
    pub data_path: String,
    pub runs: Vec<RunSummary>,
}

impl InfoBlock {
    pub fn render(&self) -> String {
        let mut s = format!(
            "suite = '{}', funcId = {}, DIM = {}, algId = '{}', version = '{}'\n% {}\n{}",
            self.suite_name,
            self.function_id,
            self.dimension,
            self.algorithm_name,
            self.version,
            self.algorithm_info,
            self.data_path
        );
        for r in &self.runs {
            s.push_str(", ");
            s.push_str(&r.info_entry());
        }
        s.push('\n');
        s
    }
}

/// Appends one block to `{folder}/IOHprofiler_f{F}_i{I}.info`.
pub fn write_info(folder: &Path, first_instance: u32, block: &InfoBlock) -> Result<PathBuf, LoggerError> {
    fs::create_dir_all(folder).map_err(io_err(folder))?;
    let path = folder.join(info_file_name(block.function_id, first_instance));
    let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
    file.write_all(block.render().as_bytes()).map_err(io_err(&path))?;
    Ok(path)
}
