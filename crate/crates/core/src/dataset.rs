//! Reading result folders back into memory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::logger::{FileFamily, LogRecord, RunSummary, BASE_COLUMNS};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no .info files under {0}")]
    NoInfoFiles(PathBuf),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("best-so-far values are neither all non-decreasing nor all non-increasing ({0})")]
    MixedDirection(String),
    #[error("dataset is empty")]
    Empty,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// `a` meets or beats target `v`.
    #[inline]
    pub fn reaches(self, a: f64, v: f64) -> bool {
        match self {
            Direction::Maximize => a >= v,
            Direction::Minimize => a <= v,
        }
    }

    /// `a` is strictly better than `b`.
    #[inline]
    pub fn improves(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RunKey {
    pub algorithm: String,
    pub function_id: u32,
    pub dimension: usize,
}

/// One run's records, ordered by evaluation count.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub instance_id: u32,
    pub records: Vec<LogRecord>,
    pub summary: Option<RunSummary>,
}

impl Run {
    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_raw)
    }

    pub fn last_evaluation(&self) -> u64 {
        self.records.last().map_or(0, |r| r.evaluations)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunGroup {
    pub parameter_names: Vec<String>,
    pub runs: Vec<Run>,
}

/// Runs keyed by `(algorithm, function, dimension)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunDataset {
    pub groups: BTreeMap<RunKey, RunGroup>,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportEntry {
    pub algorithm: String,
    pub function_id: u32,
    pub dimension: usize,
    pub runs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LoadReport {
    pub entries: Vec<ReportEntry>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl LoadReport {
    /// Human-readable lines such as "100 runs for the 100-dimensional version of function f2".
    pub fn prompt_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "{}: {} runs for the {}-dimensional version of function f{}",
                    e.algorithm, e.runs, e.dimension, e.function_id
                )
            })
            .collect()
    }
}

impl RunDataset {
    pub fn from_groups(groups: BTreeMap<RunKey, RunGroup>) -> Result<Self, LoadError> {
        let direction = detect_direction_of(&groups)?;
        Ok(RunDataset { groups, direction })
    }

    pub fn is_empty(&self) -> bool {
        self.groups.values().all(|g| g.runs.is_empty())
    }

    pub fn report(&self) -> Vec<ReportEntry> {
        self.groups
            .iter()
            .map(|(k, g)| ReportEntry {
                algorithm: k.algorithm.clone(),
                function_id: k.function_id,
                dimension: k.dimension,
                runs: g.runs.len(),
            })
            .collect()
    }

    pub fn algorithms(&self) -> Vec<String> {
        let mut a: Vec<String> = self.groups.keys().map(|k| k.algorithm.clone()).collect();
        a.dedup();
        a
    }

    /// Subset matching the given filters; `None` keeps everything.
    pub fn filtered(&self, algorithms: Option<&[String]>, function_id: Option<u32>, dimension: Option<usize>) -> Self {
        let groups = self
            .groups
            .iter()
            .filter(|(k, _)| algorithms.is_none_or(|a| a.contains(&k.algorithm)))
            .filter(|(k, _)| function_id.is_none_or(|f| k.function_id == f))
            .filter(|(k, _)| dimension.is_none_or(|d| k.dimension == d))
            .map(|(k, g)| (k.clone(), g.clone()))
            .collect();
        RunDataset { groups, direction: self.direction }
    }

    pub fn runs(&self) -> impl Iterator<Item = &Run> {
        self.groups.values().flat_map(|g| g.runs.iter())
    }

    /// Worst and best best-so-far values over all records.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in self.runs().flat_map(|r| r.records.iter()) {
            lo = lo.min(r.best_raw);
            hi = hi.max(r.best_raw);
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn max_evaluations(&self) -> u64 {
        self.runs().map(Run::last_evaluation).max().unwrap_or(0)
    }

    /// Merges another dataset's groups into this one.
    pub fn merge(&mut self, other: RunDataset) -> Result<(), LoadError> {
        for (k, g) in other.groups {
            let entry = self.groups.entry(k).or_default();
            if entry.parameter_names.is_empty() {
                entry.parameter_names = g.parameter_names;
            }
            entry.runs.extend(g.runs);
        }
        self.direction = detect_direction_of(&self.groups)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Trend {
    Constant,
    Up,
    Down,
    Mixed,
}

fn trend(records: &[LogRecord]) -> Trend {
    let mut up = false;
    let mut down = false;
    for w in records.windows(2) {
        if w[1].best_raw > w[0].best_raw {
            up = true;
        } else if w[1].best_raw < w[0].best_raw {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Up,
        (false, true) => Trend::Down,
        (true, true) => Trend::Mixed,
    }
}

fn detect_direction_of(groups: &BTreeMap<RunKey, RunGroup>) -> Result<Direction, LoadError> {
    let mut up = None;
    let mut down = None;
    for (k, g) in groups {
        for (i, r) in g.runs.iter().enumerate() {
            let label = || format!("{} f{} DIM{} run {}", k.algorithm, k.function_id, k.dimension, i + 1);
            match trend(&r.records) {
                Trend::Mixed => return Err(LoadError::MixedDirection(label())),
                Trend::Up => up = up.or_else(|| Some(label())),
                Trend::Down => down = down.or_else(|| Some(label())),
                Trend::Constant => {}
            }
        }
    }
    match (up, down) {
        (Some(a), Some(b)) => Err(LoadError::MixedDirection(format!("{a} increases, {b} decreases"))),
        (None, Some(_)) => Ok(Direction::Minimize),
        _ => Ok(Direction::Maximize),
    }
}

/// Direction inferred from the best-so-far columns; constant-only data is maximization.
pub fn detect_direction(ds: &RunDataset) -> Result<Direction, LoadError> {
    if ds.is_empty() {
        return Err(LoadError::Empty);
    }
    detect_direction_of(&ds.groups)
}

struct InfoHeader {
    function_id: u32,
    dimension: usize,
    algorithm: String,
}

/// Splits `key = value, key = 'value, with comma'` pairs.
fn split_pairs(line: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '\'' => {
                quoted = !quoted;
                cur.push(c);
            }
            ',' if !quoted => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out.into_iter()
        .filter_map(|p| {
            let (k, v) = p.split_once('=')?;
            Some((k.trim().to_string(), v.trim().trim_matches('\'').to_string()))
        })
        .collect()
}

fn parse_info_header(line: &str, path: &Path, lineno: usize) -> Result<InfoHeader, LoadError> {
    let pairs = split_pairs(line);
    let get = |key: &str| {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| parse_err(path, lineno, format!("missing '{key}'")))
    };
    let function_id =
        get("funcId")?.parse().map_err(|_| parse_err(path, lineno, "funcId is not an integer"))?;
    let dimension = get("DIM")?.parse().map_err(|_| parse_err(path, lineno, "DIM is not an integer"))?;
    Ok(InfoHeader { function_id, dimension, algorithm: get("algId")? })
}

fn parse_run_entry(entry: &str, path: &Path, lineno: usize) -> Result<RunSummary, LoadError> {
    let bad = || parse_err(path, lineno, format!("malformed run entry '{entry}'"));
    let (inst, rest) = entry.split_once(':').ok_or_else(bad)?;
    let (count, best) = rest.split_once('|').ok_or_else(bad)?;
    Ok(RunSummary {
        instance_id: inst.trim().parse().map_err(|_| bad())?,
        datapoint_count: count.trim().parse().map_err(|_| bad())?,
        final_best: best.trim().parse().map_err(|_| bad())?,
    })
}

struct InfoBlockRef {
    header: InfoHeader,
    data_path: String,
    runs: Vec<RunSummary>,
}

fn parse_info_file(path: &Path) -> Result<Vec<InfoBlockRef>, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    let mut blocks = Vec::new();
    let mut header: Option<InfoHeader> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with("suite") {
            header = Some(parse_info_header(trimmed, path, lineno)?);
            continue;
        }
        let h = header.take().ok_or_else(|| parse_err(path, lineno, "data line without a header line"))?;
        let mut parts = trimmed.split(',').map(str::trim);
        let data_path = parts.next().unwrap_or_default().to_string();
        let runs = parts.filter(|p| !p.is_empty()).map(|p| parse_run_entry(p, path, lineno)).collect::<Result<_, _>>()?;
        blocks.push(InfoBlockRef { header: h, data_path, runs });
    }
    if header.is_some() {
        return Err(parse_err(path, text.lines().count(), "header line without a data line"));
    }
    Ok(blocks)
}

/// Header names inside double quotes.
fn header_names(line: &str) -> Vec<String> {
    line.split('"').skip(1).step_by(2).map(str::to_string).collect()
}

/// Parsed runs of one data file and the parameter names of its header.
pub struct DataFile {
    pub parameter_names: Vec<String>,
    pub runs: Vec<Vec<LogRecord>>,
}

/// Parses a data file of any family. Each header line starts a new run.
pub fn parse_data_file(path: &Path) -> Result<DataFile, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    parse_data_text(&text, path)
}

pub fn parse_data_text(text: &str, path: &Path) -> Result<DataFile, LoadError> {
    let mut parameter_names: Option<Vec<String>> = None;
    let mut runs: Vec<Vec<LogRecord>> = Vec::new();
    let mut width = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('"') {
            let names = header_names(line);
            if names.len() < BASE_COLUMNS.len() {
                return Err(parse_err(path, lineno, format!("header has {} columns, expected at least 5", names.len())));
            }
            let params = names[BASE_COLUMNS.len()..].to_vec();
            match &parameter_names {
                Some(p) if *p != params => {
                    return Err(parse_err(path, lineno, "parameter columns differ between runs"));
                }
                _ => parameter_names = Some(params),
            }
            width = names.len();
            runs.push(Vec::new());
            continue;
        }
        let run = runs.last_mut().ok_or_else(|| parse_err(path, lineno, "data row before the first header"))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != width {
            return Err(parse_err(path, lineno, format!("expected {width} columns, found {}", cols.len())));
        }
        let evaluations: u64 =
            cols[0].parse().map_err(|_| parse_err(path, lineno, format!("bad evaluation count '{}'", cols[0])))?;
        let mut nums = Vec::with_capacity(width - 1);
        for c in &cols[1..] {
            nums.push(c.parse::<f64>().map_err(|_| parse_err(path, lineno, format!("bad number '{c}'")))?);
        }
        if let Some(prev) = run.last() {
            if evaluations <= prev.evaluations {
                return Err(parse_err(path, lineno, format!("evaluation {evaluations} does not follow {}", prev.evaluations)));
            }
        }
        run.push(LogRecord {
            evaluations,
            raw_value: nums[0],
            best_raw: nums[1],
            transformed_value: nums[2],
            best_transformed: nums[3],
            parameters: nums[4..].to_vec(),
        });
    }
    Ok(DataFile { parameter_names: parameter_names.unwrap_or_default(), runs })
}

fn find_info_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), LoadError> {
    let rd = fs::read_dir(dir).map_err(|source| LoadError::Io { path: dir.to_path_buf(), source })?;
    let mut entries: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_info_files(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "info") {
            out.push(p);
        }
    }
    Ok(())
}

/// Resolves the data file of a block, preferring `.dat`.
fn resolve_data_file(base: &Path, data_path: &str) -> Option<(PathBuf, FileFamily)> {
    let dat = base.join(data_path);
    let stem = dat.with_extension("");
    [FileFamily::Dat, FileFamily::Cdat, FileFamily::Idat, FileFamily::Tdat]
        .into_iter()
        .map(|f| (stem.with_extension(f.extension()), f))
        .find(|(p, _)| p.is_file())
}

/// Loads every `.info` file under `path` and the data files they reference.
pub fn load_folder(path: &Path) -> Result<(RunDataset, LoadReport), LoadError> {
    let mut infos = Vec::new();
    find_info_files(path, &mut infos)?;
    if infos.is_empty() {
        return Err(LoadError::NoInfoFiles(path.to_path_buf()));
    }
    let mut report = LoadReport::default();
    let mut groups: BTreeMap<RunKey, RunGroup> = BTreeMap::new();
    for info in &infos {
        report.files.push(info.clone());
        let base = info.parent().unwrap_or(path);
        for block in parse_info_file(info)? {
            let Some((file, family)) = resolve_data_file(base, &block.data_path) else {
                report.warnings.push(format!("{}: data file {} not found", info.display(), block.data_path));
                continue;
            };
            if family != FileFamily::Dat {
                report.warnings.push(format!("{}: .dat missing, using {}", info.display(), file.display()));
            }
            let data = parse_data_file(&file)?;
            report.files.push(file.clone());
            if data.runs.len() != block.runs.len() {
                report.warnings.push(format!(
                    "{}: .info lists {} runs, data file holds {}",
                    file.display(),
                    block.runs.len(),
                    data.runs.len()
                ));
            }
            let key = RunKey {
                algorithm: block.header.algorithm.clone(),
                function_id: block.header.function_id,
                dimension: block.header.dimension,
            };
            let group = groups.entry(key).or_default();
            if group.parameter_names.is_empty() {
                group.parameter_names = data.parameter_names.clone();
            }
            for (i, records) in data.runs.into_iter().enumerate() {
                let summary = block.runs.get(i).cloned();
                if let Some(s) = &summary {
                    if family == FileFamily::Dat && s.datapoint_count != records.len() {
                        report.warnings.push(format!(
                            "{}: run {} has {} rows, .info says {}",
                            file.display(),
                            i + 1,
                            records.len(),
                            s.datapoint_count
                        ));
                    }
                }
                if records.is_empty() {
                    report.warnings.push(format!("{}: run {} is empty and was skipped", file.display(), i + 1));
                    continue;
                }
                let instance_id = summary.as_ref().map_or(0, |s| s.instance_id);
                group.runs.push(Run { instance_id, records, summary });
            }
        }
    }
    let ds = RunDataset::from_groups(groups)?;
    if ds.is_empty() {
        return Err(LoadError::Empty);
    }
    report.entries = ds.report();
    Ok((ds, report))
}

/// Loads several folders into one dataset keyed by algorithm name.
pub fn load_folders(paths: &[PathBuf]) -> Result<(RunDataset, LoadReport), LoadError> {
    let mut iter = paths.iter();
    let first = iter.next().ok_or(LoadError::Empty)?;
    let (mut ds, mut report) = load_folder(first)?;
    for p in iter {
        let (other, rep) = load_folder(p)?;
        ds.merge(other)?;
        report.warnings.extend(rep.warnings);
        report.files.extend(rep.files);
    }
    report.entries = ds.report();
    Ok((ds, report))
}

/// Keeps the first, last and strictly improving records of each run; when
/// more than `cap` remain, keeps every `ceil(count / cap)`-th improvement
/// plus the endpoints.
pub fn trim_efficient(ds: &RunDataset, cap: usize) -> RunDataset {
    let cap = cap.max(2);
    let dir = ds.direction;
    let mut out = ds.clone();
    for g in out.groups.values_mut() {
        for run in g.runs.iter_mut() {
            let n = run.records.len();
            if n <= cap {
                continue;
            }
            let mut improving = Vec::new();
            for i in 1..n.saturating_sub(1) {
                if dir.improves(run.records[i].best_raw, run.records[i - 1].best_raw) {
                    improving.push(i);
                }
            }
            let mut keep = Vec::with_capacity(improving.len() + 2);
            keep.push(0);
            if improving.len() + 2 > cap {
                let stride = (improving.len() + 2).div_ceil(cap);
                keep.extend(improving.iter().copied().step_by(stride));
            } else {
                keep.extend(improving);
            }
            keep.push(n - 1);
            run.records = keep.into_iter().map(|i| run.records[i].clone()).collect();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(evaluations: u64, best: f64) -> LogRecord {
        LogRecord {
            evaluations,
            raw_value: best,
            best_raw: best,
            transformed_value: best,
            best_transformed: best,
            parameters: vec![],
        }
    }

    fn ds_of(runs: Vec<Vec<(u64, f64)>>) -> RunDataset {
        let key = RunKey { algorithm: "A".into(), function_id: 1, dimension: 4 };
        let runs = runs
            .into_iter()
            .map(|r| Run { instance_id: 1, records: r.into_iter().map(|(e, b)| rec(e, b)).collect(), summary: None })
            .collect();
        RunDataset::from_groups([(key, RunGroup { parameter_names: vec![], runs })].into_iter().collect()).unwrap()
    }

    #[test]
    fn direction_detection() {
        assert_eq!(ds_of(vec![vec![(1, 1.0), (2, 3.0)]]).direction, Direction::Maximize);
        assert_eq!(ds_of(vec![vec![(1, -1.0), (2, -3.0)]]).direction, Direction::Minimize);
        assert_eq!(ds_of(vec![vec![(1, 2.0), (5, 2.0)]]).direction, Direction::Maximize);
        assert_eq!(ds_of(vec![vec![(1, 2.0)], vec![(1, 5.0), (2, 4.0)]]).direction, Direction::Minimize);
        let key = RunKey { algorithm: "A".into(), function_id: 1, dimension: 4 };
        let mixed = vec![
            Run { instance_id: 1, records: vec![rec(1, 1.0), rec(2, 2.0)], summary: None },
            Run { instance_id: 1, records: vec![rec(1, 2.0), rec(2, 1.0)], summary: None },
        ];
        let err = RunDataset::from_groups([(key, RunGroup { parameter_names: vec![], runs: mixed })].into_iter().collect());
        assert!(matches!(err, Err(LoadError::MixedDirection(_))));
    }

    #[test]
    fn info_header_parsing() {
        let h = parse_info_header(
            "suite = 'PBO', funcId = 2, DIM = 100, algId = 'RS, v2', version = '0.1.0'",
            Path::new("x"),
            1,
        )
        .unwrap();
        assert_eq!((h.function_id, h.dimension, h.algorithm.as_str()), (2, 100, "RS, v2"));
    }

    #[test]
    fn data_parse_errors_carry_line() {
        let text = "\"function evaluation\" \"current f(x)\" \"best-so-far f(x)\" \"current af(x)+b\" \"best af(x)+b\"\n1 1 1 1 1\n2 1 1 1\n";
        match parse_data_text(text, Path::new("f.dat")) {
            Err(LoadError::Parse { line, .. }) => assert_eq!(line, 3),
            _ => panic!(),
        }
        let text = "\"function evaluation\" \"current f(x)\" \"best-so-far f(x)\" \"current af(x)+b\" \"best af(x)+b\"\n2 1 1 1 1\n2 1 1 1 1\n";
        assert!(matches!(parse_data_text(text, Path::new("f.dat")), Err(LoadError::Parse { line: 3, .. })));
    }

    #[test]
    fn empty_folder() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_folder(dir.path()), Err(LoadError::NoInfoFiles(_))));
    }

    #[test]
    fn trim_keeps_endpoints_and_improvements() {
        let ds = ds_of(vec![vec![(1, 1.0), (2, 1.0), (3, 2.0), (4, 2.0), (5, 3.0), (6, 3.0)]]);
        let t = trim_efficient(&ds, 4);
        let evs: Vec<u64> = t.runs().next().unwrap().records.iter().map(|r| r.evaluations).collect();
        assert_eq!(evs, vec![1, 3, 5, 6]);
        // small runs untouched
        let t = trim_efficient(&ds, 10);
        assert_eq!(t, ds);
        // cap 2: endpoints survive
        let t = trim_efficient(&ds, 2);
        let r = t.runs().next().unwrap();
        assert_eq!(r.records.first().unwrap().evaluations, 1);
        assert_eq!(r.records.last().unwrap().evaluations, 6);
        assert_eq!(r.final_best(), Some(3.0));
    }
}
