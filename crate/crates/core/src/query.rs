//! Named statistics queries shared by the command line and the HTTP service.
//!
//! A query is a statistic name plus string key/value parameters; the result
//! is a [`Table`] whose CSV and JSON renderings carry identical columns.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::{Direction, RunDataset};
use crate::stats::{self, StatTable, StatsError, Summary, TargetGrid, DEFAULT_PERCENTILES};
use crate::table::{Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Statistic {
    FixedTargetSummary,
    FixedBudgetSummary,
    RawSamples,
    EcdfTarget,
    EcdfBudget,
    Auc,
    Histogram,
    Pmf,
    ParameterTable,
}

impl Statistic {
    pub const ALL: [Statistic; 9] = [
        Statistic::FixedTargetSummary,
        Statistic::FixedBudgetSummary,
        Statistic::RawSamples,
        Statistic::EcdfTarget,
        Statistic::EcdfBudget,
        Statistic::Auc,
        Statistic::Histogram,
        Statistic::Pmf,
        Statistic::ParameterTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::FixedTargetSummary => "fixed-target-summary",
            Statistic::FixedBudgetSummary => "fixed-budget-summary",
            Statistic::RawSamples => "raw-samples",
            Statistic::EcdfTarget => "ecdf-target",
            Statistic::EcdfBudget => "ecdf-budget",
            Statistic::Auc => "auc",
            Statistic::Histogram => "histogram",
            Statistic::Pmf => "pmf",
            Statistic::ParameterTable => "parameter-table",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Statistic::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| QueryError::UnknownStatistic(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("unknown statistic '{0}'")]
    UnknownStatistic(String),
    #[error("invalid parameter '{name}': {message}")]
    BadParam { name: String, message: String },
    #[error("no runs match the filters")]
    NoMatch,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn bad(name: &str, message: impl Into<String>) -> QueryError {
    QueryError::BadParam { name: name.to_string(), message: message.into() }
}

/// Which axis a sample-based statistic is taken on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Hitting times at a target value.
    #[default]
    Target,
    /// Best values at a budget.
    Budget,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// One column per run.
    #[default]
    Wide,
    /// One row per sample.
    Long,
}

/// Parameters as supplied; every field is optional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryParams {
    pub algorithms: Option<Vec<String>>,
    pub function: Option<u32>,
    pub dimension: Option<usize>,
    pub fmin: Option<f64>,
    pub fmax: Option<f64>,
    pub step: Option<f64>,
    pub budgets: Option<Vec<u64>>,
    pub percentiles: Option<Vec<f64>>,
    pub target: Option<f64>,
    pub budget: Option<u64>,
    pub parameter: Option<String>,
    pub orientation: Option<Orientation>,
    pub kind: Option<Kind>,
    pub max_budget: Option<u64>,
}

fn parse_num<T: FromStr>(name: &str, v: &str) -> Result<T, QueryError> {
    v.trim().parse().map_err(|_| bad(name, format!("'{v}' is not a valid number")))
}

fn parse_list<T: FromStr>(name: &str, v: &str) -> Result<Vec<T>, QueryError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(name, s)).collect()
}

impl QueryParams {
    /// Builds parameters from `key=value` pairs. Empty values are ignored;
    /// `format` is accepted and left to the caller.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Result<Self, QueryError> {
        let mut p = QueryParams::default();
        for (k, v) in pairs {
            let (k, v) = (k.as_ref(), v.as_ref());
            if v.trim().is_empty() {
                continue;
            }
            match k {
                "algorithms" => {
                    p.algorithms = Some(v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
                }
                "function" => p.function = Some(parse_num(k, v)?),
                "dimension" => p.dimension = Some(parse_num(k, v)?),
                "fmin" => p.fmin = Some(parse_num(k, v)?),
                "fmax" => p.fmax = Some(parse_num(k, v)?),
                "step" => p.step = Some(parse_num(k, v)?),
                "budgets" => p.budgets = Some(parse_list(k, v)?),
                "percentiles" => p.percentiles = Some(parse_list(k, v)?),
                "target" => p.target = Some(parse_num(k, v)?),
                "budget" => p.budget = Some(parse_num(k, v)?),
                "parameter" => p.parameter = Some(v.to_string()),
                "max_budget" => p.max_budget = Some(parse_num(k, v)?),
                "orientation" => {
                    p.orientation = Some(match v {
                        "wide" => Orientation::Wide,
                        "long" => Orientation::Long,
                        _ => return Err(bad(k, "expected 'wide' or 'long'")),
                    })
                }
                "kind" => {
                    p.kind = Some(match v {
                        "target" => Kind::Target,
                        "budget" => Kind::Budget,
                        _ => return Err(bad(k, "expected 'target' or 'budget'")),
                    })
                }
                "format" => {}
                _ => return Err(bad(k, "unknown parameter")),
            }
        }
        Ok(p)
    }
}

/// Parameters after defaults are filled in, echoed back with every result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub algorithms: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub direction: Direction,
    pub fmin: f64,
    pub fmax: f64,
    pub step: f64,
    pub targets: Vec<f64>,
    pub budgets: Vec<u64>,
    pub percentiles: Vec<f64>,
    pub target: f64,
    pub budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    pub orientation: Orientation,
    pub kind: Kind,
    pub max_budget: u64,
}

/// Budgets `1, 2, 5, 10, 20, 50, ...` below `max`, followed by `max`.
pub fn default_budgets(max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut scale = 1u64;
    'outer: loop {
        for m in [1u64, 2, 5] {
            let Some(b) = m.checked_mul(scale) else { break 'outer };
            if b >= max {
                break 'outer;
            }
            out.push(b);
        }
        let Some(next) = scale.checked_mul(10) else { break };
        scale = next;
    }
    out.push(max.max(1));
    out
}

/// Default grid over the observed best-so-far range with ten steps.
fn resolve_grid(ds: &RunDataset, p: &QueryParams) -> Result<TargetGrid, QueryError> {
    let (lo, hi) = ds.value_range().ok_or(QueryError::NoMatch)?;
    let fmin = p.fmin.unwrap_or(lo);
    let fmax = p.fmax.unwrap_or(hi);
    let step = p.step.unwrap_or_else(|| {
        let s = (fmax - fmin) / 10.0;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    });
    TargetGrid::new(fmin, fmax, step).map_err(|e| bad("fmin/fmax/step", e.to_string()))
}

fn resolve(ds: &RunDataset, p: &QueryParams) -> Result<ResolvedParams, QueryError> {
    let grid = resolve_grid(ds, p)?;
    let max_eval = ds.max_evaluations();
    let budgets = match &p.budgets {
        Some(b) if b.is_empty() => return Err(bad("budgets", "empty list")),
        Some(b) if b.contains(&0) => return Err(bad("budgets", "budgets must be at least 1")),
        Some(b) => b.clone(),
        None => default_budgets(max_eval),
    };
    let percentiles = p.percentiles.clone().unwrap_or_else(|| DEFAULT_PERCENTILES.to_vec());
    if let Some(&bad_p) = percentiles.iter().find(|&&x| !(x > 0.0 && x <= 100.0)) {
        return Err(bad("percentiles", format!("{bad_p} outside (0, 100]")));
    }
    let best = match ds.direction {
        Direction::Maximize => grid.f_max,
        Direction::Minimize => grid.f_min,
    };
    let max_budget = p.max_budget.unwrap_or(max_eval);
    if max_budget == 0 {
        return Err(bad("max_budget", "must be at least 1"));
    }
    let budget = p.budget.unwrap_or(max_eval);
    if budget == 0 {
        return Err(bad("budget", "must be at least 1"));
    }
    Ok(ResolvedParams {
        algorithms: ds.algorithms(),
        function: p.function,
        dimension: p.dimension,
        direction: ds.direction,
        fmin: grid.f_min,
        fmax: grid.f_max,
        step: grid.step,
        targets: grid.ordered(ds.direction),
        budgets,
        percentiles,
        target: p.target.unwrap_or(best),
        budget,
        parameter: p.parameter.clone(),
        orientation: p.orientation.unwrap_or_default(),
        kind: p.kind.unwrap_or_default(),
        max_budget,
    })
}

/// A computed statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryOutput {
    pub statistic: Statistic,
    pub table: Table,
    pub params: ResolvedParams,
    /// Groups left out of the table and why.
    pub notes: Vec<String>,
}

impl QueryOutput {
    pub fn to_csv(&self) -> String {
        self.table.to_csv()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "statistic": self.statistic.name(),
            "columns": self.table.columns,
            "rows": self.table.json_rows(),
            "params": self.params,
            "notes": self.notes,
        })
    }
}

const KEY_COLUMNS: [&str; 3] = ["algorithm", "function", "dimension"];

fn key_cells(k: &crate::dataset::RunKey) -> Vec<Cell> {
    vec![k.algorithm.as_str().into(), k.function_id.into(), k.dimension.into()]
}

fn percentile_label(p: f64) -> String {
    format!("{p}%")
}

fn summary_columns(axis: &str, percentiles: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend([axis, "runs", "mean", "median"].map(String::from));
    cols.extend(percentiles.iter().map(|&p| percentile_label(p)));
    cols.push("sd".into());
    cols
}

fn summary_cells(s: &Summary) -> Vec<Cell> {
    let mut row = vec![Cell::from(s.runs), Cell::opt(s.mean), Cell::opt(s.median)];
    row.extend(s.percentiles.iter().map(|&v| Cell::opt(v)));
    row.push(Cell::opt(s.sd));
    row
}

fn summary_table(axis: &str, st: &StatTable) -> Table {
    let mut t = Table::new(summary_columns(axis, &st.percentiles));
    for r in &st.rows {
        let mut row = key_cells(&r.key);
        row.push(if axis == "budget" { Cell::Int(r.at as u64) } else { Cell::Num(r.at) });
        row.extend(summary_cells(&r.summary));
        t.push(row);
    }
    t
}

fn curve_table(curves: &[stats::Curve]) -> Table {
    let mut t = Table::new(KEY_COLUMNS.iter().copied().chain(["x", "y"]));
    for c in curves {
        for &(x, y) in &c.knots {
            let mut row = key_cells(&c.key);
            row.extend([Cell::Num(x), Cell::Num(y)]);
            t.push(row);
        }
    }
    t
}

/// Per-group samples used by histogram and pmf.
fn group_samples(ds: &RunDataset, r: &ResolvedParams) -> Vec<(crate::dataset::RunKey, Vec<f64>)> {
    ds.groups
        .iter()
        .map(|(k, g)| {
            let s = match r.kind {
                Kind::Target => stats::hitting_times(&g.runs, r.target, ds.direction)
                    .into_iter()
                    .flatten()
                    .map(|t| t as f64)
                    .collect(),
                Kind::Budget => g.runs.iter().map(|run| stats::best_value_at(run, r.budget)).collect(),
            };
            (k.clone(), s)
        })
        .collect()
}

fn label(k: &crate::dataset::RunKey) -> String {
    format!("{} f{} DIM{}", k.algorithm, k.function_id, k.dimension)
}

/// Runs `stat` on the subset of `ds` selected by the parameters.
pub fn run_query(ds: &RunDataset, stat: Statistic, params: &QueryParams) -> Result<QueryOutput, QueryError> {
    let ds = ds.filtered(params.algorithms.as_deref(), params.function, params.dimension);
    if ds.is_empty() {
        return Err(QueryError::NoMatch);
    }
    let r = resolve(&ds, params)?;
    let mut notes = Vec::new();
    let table = match stat {
        Statistic::FixedTargetSummary => {
            summary_table("target", &stats::fixed_target_table(&ds, &r.targets, &r.percentiles)?)
        }
        Statistic::FixedBudgetSummary => {
            summary_table("budget", &stats::fixed_budget_table(&ds, &r.budgets, &r.percentiles)?)
        }
        Statistic::RawSamples => {
            let (axis, rows) = match r.kind {
                Kind::Target => ("target", stats::raw_target_samples(&ds, &r.targets)),
                Kind::Budget => ("budget", stats::raw_budget_samples(&ds, &r.budgets)),
            };
            let at = |x: f64| if r.kind == Kind::Budget { Cell::Int(x as u64) } else { Cell::Num(x) };
            match r.orientation {
                Orientation::Wide => {
                    let width = rows.iter().map(|s| s.values.len()).max().unwrap_or(0);
                    let mut cols: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
                    cols.push(axis.into());
                    cols.extend((1..=width).map(|i| format!("run{i}")));
                    let mut t = Table::new(cols);
                    for s in rows {
                        let mut row = key_cells(&s.key);
                        row.push(at(s.at));
                        row.extend(s.values.iter().map(|&v| Cell::opt(v)));
                        row.resize(t.columns.len(), Cell::Null);
                        t.push(row);
                    }
                    t
                }
                Orientation::Long => {
                    let mut t = Table::new(KEY_COLUMNS.iter().copied().chain([axis, "rank", "value"]));
                    for s in rows {
                        for (i, &v) in s.values.iter().enumerate() {
                            let mut row = key_cells(&s.key);
                            row.extend([at(s.at), Cell::from(i + 1), Cell::opt(v)]);
                            t.push(row);
                        }
                    }
                    t
                }
            }
        }
        Statistic::EcdfTarget => curve_table(&stats::ecdf_fixed_target(&ds, &r.targets)),
        Statistic::EcdfBudget => curve_table(&stats::ecdf_fixed_budget(&ds, &r.budgets)),
        Statistic::Auc => {
            let mut t = Table::new(KEY_COLUMNS.iter().copied().chain(["target", "auc"]));
            let rows = match r.kind {
                Kind::Target => {
                    let mut all = stats::auc_normalized(&ds, &r.targets, r.max_budget)?;
                    all.extend(stats::auc_per_target(&ds, &r.targets, r.max_budget)?);
                    all.sort_by(|a, b| a.key.cmp(&b.key));
                    all
                }
                Kind::Budget => stats::auc_fixed_budget(&ds, &r.budgets, &r.targets),
            };
            for a in rows {
                let mut row = key_cells(&a.key);
                row.extend([Cell::opt(a.target), Cell::Num(a.auc)]);
                t.push(row);
            }
            t
        }
        Statistic::Histogram => {
            let mut t = Table::new(KEY_COLUMNS.iter().copied().chain(["lower", "upper", "count"]));
            for (k, s) in group_samples(&ds, &r) {
                match stats::fd_histogram(&s) {
                    Ok(h) => {
                        for b in h.bins {
                            let mut row = key_cells(&k);
                            row.extend([Cell::Num(b.lower), Cell::Num(b.upper), Cell::from(b.count)]);
                            t.push(row);
                        }
                    }
                    Err(e) => notes.push(format!("{}: {e}", label(&k))),
                }
            }
            t
        }
        Statistic::Pmf => {
            let mut t = Table::new(KEY_COLUMNS.iter().copied().chain(["x", "density"]));
            for (k, s) in group_samples(&ds, &r) {
                match stats::pmf_estimate(&s) {
                    Ok(curve) => {
                        for (x, d) in curve {
                            let mut row = key_cells(&k);
                            row.extend([Cell::Num(x), Cell::Num(d)]);
                            t.push(row);
                        }
                    }
                    Err(e) => notes.push(format!("{}: {e}", label(&k))),
                }
            }
            t
        }
        Statistic::ParameterTable => {
            let name = match &r.parameter {
                Some(p) => p.clone(),
                None => ds
                    .groups
                    .values()
                    .find_map(|g| g.parameter_names.first().cloned())
                    .ok_or_else(|| bad("parameter", "the data tracks no parameters"))?,
            };
            let rows = stats::parameter_table(&ds, &name, &r.targets, &r.percentiles)?;
            let mut cols = summary_columns("target", &r.percentiles);
            cols.insert(KEY_COLUMNS.len(), "parameter".into());
            let mut t = Table::new(cols);
            for pr in rows {
                let mut row = key_cells(&pr.key);
                row.push(pr.parameter.as_str().into());
                row.push(Cell::Num(pr.target));
                row.extend(summary_cells(&pr.summary));
                t.push(row);
            }
            let mut out = QueryOutput { statistic: stat, table: t, params: r, notes };
            out.params.parameter = Some(name);
            return Ok(out);
        }
    };
    Ok(QueryOutput { statistic: stat, table, params: r, notes })
}
