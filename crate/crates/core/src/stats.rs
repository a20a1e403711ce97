//! Fixed-target and fixed-budget statistics.
//!
//! Notation: `T(v)` is the first evaluation count at which a run's
//! best-so-far value reaches target `v`; `V(t)` is the best-so-far value
//! after `t` evaluations. Both are read from the `best-so-far f(x)` column.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Direction, Run, RunDataset, RunKey};

pub const DEFAULT_PERCENTILES: [f64; 9] = [2.0, 5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0, 98.0];

/// Number of abscissae of a probability-mass estimate.
pub const PMF_GRID_POINTS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("percentile {0} outside (0, 100]")]
    Percentile(f64),
    #[error("invalid target grid: {0}")]
    Grid(String),
    #[error("at least two samples with non-zero spread are required")]
    NoSpread,
    #[error("parameter '{0}' is not tracked")]
    UnknownParameter(String),
    #[error("budget must be at least 1")]
    ZeroBudget,
}

/// Evenly spaced targets `f_min, f_min + step, ...` up to `f_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TargetGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub step: f64,
}

impl TargetGrid {
    pub fn new(f_min: f64, f_max: f64, step: f64) -> Result<Self, StatsError> {
        if !(f_min.is_finite() && f_max.is_finite() && step.is_finite()) {
            return Err(StatsError::Grid("values must be finite".into()));
        }
        if f_min > f_max {
            return Err(StatsError::Grid(format!("f_min {f_min} exceeds f_max {f_max}")));
        }
        if step <= 0.0 {
            return Err(StatsError::Grid(format!("step {step} must be positive")));
        }
        if (f_max - f_min) / step > 1e6 {
            return Err(StatsError::Grid("more than a million targets".into()));
        }
        Ok(TargetGrid { f_min, f_max, step })
    }

    /// Single-target grid.
    pub fn single(v: f64) -> Self {
        TargetGrid { f_min: v, f_max: v, step: 1.0 }
    }

    /// Ascending target values; the last one is `f_max` when aligned.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.f_max - self.f_min) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.f_min + k as f64 * self.step).collect()
    }

    /// Values in the order rows are reported: ascending for maximization,
    /// descending for minimization.
    pub fn ordered(&self, direction: Direction) -> Vec<f64> {
        let mut v = self.values();
        if direction == Direction::Minimize {
            v.reverse();
        }
        v
    }
}

/// First evaluation count at which the run's best-so-far value reaches `v`.
pub fn first_hitting_time(run: &Run, v: f64, direction: Direction) -> Option<u64> {
    hitting_index(run, v, direction).map(|i| run.records[i].evaluations)
}

fn hitting_index(run: &Run, v: f64, direction: Direction) -> Option<usize> {
    // best-so-far is monotone, so the first qualifying record is found by bisection
    let recs = &run.records;
    let idx = recs.partition_point(|r| !direction.reaches(r.best_raw, v));
    (idx < recs.len()).then_some(idx)
}

/// Best-so-far value after `t` evaluations; before the first record, the
/// first record's value.
pub fn best_value_at(run: &Run, t: u64) -> f64 {
    let recs = &run.records;
    let idx = recs.partition_point(|r| r.evaluations <= t);
    if idx == 0 {
        recs.first().map_or(f64::NAN, |r| r.best_raw)
    } else {
        recs[idx - 1].best_raw
    }
}

/// Sample at 1-based index `max(1, floor(p r / 100))` of the sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(StatsError::Percentile(p));
    }
    let r = sorted.len();
    let idx = ((p * r as f64) / 100.0).floor() as usize;
    Ok(sorted[idx.clamp(1, r) - 1])
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n - 1 denominator); `None` below two samples.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

fn sort_samples(xs: &mut [f64]) {
    xs.sort_by(|a, b| a.total_cmp(b));
}

/// Summary statistics of one sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub percentiles: Vec<Option<f64>>,
    pub sd: Option<f64>,
}

impl Summary {
    pub fn of(samples: &[f64], percentiles: &[f64]) -> Result<Self, StatsError> {
        let mut sorted = samples.to_vec();
        sort_samples(&mut sorted);
        let pick = |p: f64| if sorted.is_empty() { Ok(None) } else { percentile(&sorted, p).map(Some) };
        Ok(Summary {
            runs: sorted.len(),
            mean: mean(&sorted),
            median: pick(50.0)?,
            percentiles: percentiles.iter().map(|&p| pick(p)).collect::<Result<_, _>>()?,
            sd: std_dev(&sorted),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatRow {
    pub key: RunKey,
    /// Target value, budget, depending on the table.
    pub at: f64,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatTable {
    pub percentiles: Vec<f64>,
    pub rows: Vec<StatRow>,
}

/// Hitting times of all runs of a group at `v`; `None` for unreached.
pub fn hitting_times(runs: &[Run], v: f64, direction: Direction) -> Vec<Option<u64>> {
    runs.iter().map(|r| first_hitting_time(r, v, direction)).collect()
}

/// Per `(group, target)`: statistics of `T(v)` over the runs reaching `v`.
pub fn fixed_target_table(ds: &RunDataset, targets: &[f64], percentiles: &[f64]) -> Result<StatTable, StatsError> {
    let mut rows = Vec::new();
    for (key, g) in &ds.groups {
        for &v in targets {
            let samples: Vec<f64> =
                hitting_times(&g.runs, v, ds.direction).into_iter().flatten().map(|t| t as f64).collect();
            rows.push(StatRow { key: key.clone(), at: v, summary: Summary::of(&samples, percentiles)? });
        }
    }
    Ok(StatTable { percentiles: percentiles.to_vec(), rows })
}

/// Per `(group, budget)`: statistics of `V(t)` over all runs.
pub fn fixed_budget_table(ds: &RunDataset, budgets: &[u64], percentiles: &[f64]) -> Result<StatTable, StatsError> {
    let mut rows = Vec::new();
    for (key, g) in &ds.groups {
        for &t in budgets {
            let samples: Vec<f64> = g.runs.iter().map(|r| best_value_at(r, t)).collect();
            rows.push(StatRow { key: key.clone(), at: t as f64, summary: Summary::of(&samples, percentiles)? });
        }
    }
    Ok(StatTable { percentiles: percentiles.to_vec(), rows })
}

/// Sorted per-run samples at one target or budget. Unreached targets sort last as `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub key: RunKey,
    pub at: f64,
    pub values: Vec<Option<f64>>,
}

pub fn raw_target_samples(ds: &RunDataset, targets: &[f64]) -> Vec<SampleRow> {
    let mut out = Vec::new();
    for (key, g) in &ds.groups {
        for &v in targets {
            let mut hits: Vec<f64> =
                hitting_times(&g.runs, v, ds.direction).into_iter().flatten().map(|t| t as f64).collect();
            sort_samples(&mut hits);
            let mut values: Vec<Option<f64>> = hits.into_iter().map(Some).collect();
            values.resize(g.runs.len(), None);
            out.push(SampleRow { key: key.clone(), at: v, values });
        }
    }
    out
}

pub fn raw_budget_samples(ds: &RunDataset, budgets: &[u64]) -> Vec<SampleRow> {
    let mut out = Vec::new();
    for (key, g) in &ds.groups {
        for &t in budgets {
            let mut vals: Vec<f64> = g.runs.iter().map(|r| best_value_at(r, t)).collect();
            sort_samples(&mut vals);
            out.push(SampleRow { key: key.clone(), at: t as f64, values: vals.into_iter().map(Some).collect() });
        }
    }
    out
}

/// Knots `(x, y)` of a step function, `x` ascending.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub key: RunKey,
    pub knots: Vec<(f64, f64)>,
}

/// Fixed-target ECDF: `F(t) = #{(i, j) : T(v_j, i) <= t} / (d r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetEcdf {
    /// Sorted hitting times of the reached `(run, target)` pairs.
    times: Vec<u64>,
    pairs: usize,
}

impl TargetEcdf {
    pub fn new(runs: &[Run], targets: &[f64], direction: Direction) -> Self {
        let mut times: Vec<u64> =
            targets.iter().flat_map(|&v| hitting_times(runs, v, direction)).flatten().collect();
        times.sort_unstable();
        TargetEcdf { times, pairs: runs.len() * targets.len() }
    }

    pub fn value_at(&self, t: u64) -> f64 {
        if self.pairs == 0 {
            return 0.0;
        }
        self.times.partition_point(|&x| x <= t) as f64 / self.pairs as f64
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            let y = (i + 1) as f64 / self.pairs as f64;
            match out.last_mut() {
                Some(last) if last.0 == t as f64 => last.1 = y,
                _ => out.push((t as f64, y)),
            }
        }
        out
    }

    /// `sum_{t=1}^{B} F(t) / B`, exact in integer arithmetic up to the final division.
    pub fn normalized_area(&self, max_budget: u64) -> f64 {
        if self.pairs == 0 || max_budget == 0 {
            return 0.0;
        }
        let covered: u128 =
            self.times.iter().filter(|&&t| t <= max_budget).map(|&t| (max_budget - t.max(1) + 1) as u128).sum();
        covered as f64 / (self.pairs as u128 * max_budget as u128) as f64
    }
}

pub fn ecdf_fixed_target(ds: &RunDataset, targets: &[f64]) -> Vec<Curve> {
    ds.groups
        .iter()
        .map(|(k, g)| Curve { key: k.clone(), knots: TargetEcdf::new(&g.runs, targets, ds.direction).knots() })
        .collect()
}

/// Fixed-budget ECDF over the target axis:
/// `F(v) = #{(i, j) : T(v, i) <= t_j} / (d r) = #{(i, j) : V(t_j, i) reaches v} / (d r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetEcdf {
    /// `V(t_j, i)` over all pairs, sorted ascending.
    values: Vec<f64>,
    direction: Direction,
}

impl BudgetEcdf {
    pub fn new(runs: &[Run], budgets: &[u64], direction: Direction) -> Self {
        let mut values: Vec<f64> =
            budgets.iter().flat_map(|&t| runs.iter().map(move |r| best_value_at(r, t))).collect();
        sort_samples(&mut values);
        BudgetEcdf { values, direction }
    }

    pub fn value_at(&self, v: f64) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return 0.0;
        }
        let count = match self.direction {
            Direction::Maximize => n - self.values.partition_point(|&x| x < v),
            Direction::Minimize => self.values.partition_point(|&x| x <= v),
        };
        count as f64 / n as f64
    }

    /// One knot per distinct pair value, `x` ascending.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        let mut xs = self.values.clone();
        xs.dedup();
        xs.into_iter().map(|x| (x, self.value_at(x))).collect()
    }
}

pub fn ecdf_fixed_budget(ds: &RunDataset, budgets: &[u64]) -> Vec<Curve> {
    ds.groups
        .iter()
        .map(|(k, g)| Curve { key: k.clone(), knots: BudgetEcdf::new(&g.runs, budgets, ds.direction).knots() })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AucRow {
    pub key: RunKey,
    /// `None` for the aggregate over the whole grid.
    pub target: Option<f64>,
    pub auc: f64,
}

/// Area under the fixed-target ECDF over budgets `1..=max_budget`, divided
/// by the area of an algorithm hitting every target at the first evaluation.
pub fn auc_normalized(ds: &RunDataset, targets: &[f64], max_budget: u64) -> Result<Vec<AucRow>, StatsError> {
    if max_budget == 0 {
        return Err(StatsError::ZeroBudget);
    }
    Ok(ds
        .groups
        .iter()
        .map(|(k, g)| AucRow {
            key: k.clone(),
            target: None,
            auc: TargetEcdf::new(&g.runs, targets, ds.direction).normalized_area(max_budget),
        })
        .collect())
}

/// Per-target normalized areas, one per `(group, target)`.
pub fn auc_per_target(ds: &RunDataset, targets: &[f64], max_budget: u64) -> Result<Vec<AucRow>, StatsError> {
    if max_budget == 0 {
        return Err(StatsError::ZeroBudget);
    }
    let mut out = Vec::new();
    for (k, g) in &ds.groups {
        for &v in targets {
            let e = TargetEcdf::new(&g.runs, &[v], ds.direction);
            out.push(AucRow { key: k.clone(), target: Some(v), auc: e.normalized_area(max_budget) });
        }
    }
    Ok(out)
}

/// Mean of the fixed-budget ECDF over the grid targets, per group.
pub fn auc_fixed_budget(ds: &RunDataset, budgets: &[u64], targets: &[f64]) -> Vec<AucRow> {
    ds.groups
        .iter()
        .map(|(k, g)| {
            let e = BudgetEcdf::new(&g.runs, budgets, ds.direction);
            let auc = if targets.is_empty() {
                0.0
            } else {
                targets.iter().map(|&v| e.value_at(v)).sum::<f64>() / targets.len() as f64
            };
            AucRow { key: k.clone(), target: None, auc }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub width: f64,
    pub bins: Vec<Bin>,
}

/// Freedman-Diaconis bin width `(Q75 - Q25) / r^(1/3)` with the percentile
/// estimator of [`percentile`].
pub fn fd_width(sorted: &[f64]) -> Result<f64, StatsError> {
    let q75 = percentile(sorted, 75.0)?;
    let q25 = percentile(sorted, 25.0)?;
    Ok((q75 - q25) / (sorted.len() as f64).cbrt())
}

/// Histogram with bins `[min + k w, min + (k + 1) w)`; a zero width gives one
/// bin `[min, max]` holding every sample.
pub fn fd_histogram(samples: &[f64]) -> Result<Histogram, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = samples.to_vec();
    sort_samples(&mut sorted);
    let width = fd_width(&sorted)?;
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if width <= 0.0 || !width.is_finite() {
        return Ok(Histogram { width: 0.0, bins: vec![Bin { lower: min, upper: max, count: sorted.len() }] });
    }
    let lower = |k: usize| min + k as f64 * width;
    let mut nbins = ((max - min) / width).floor() as usize + 1;
    while lower(nbins) <= max {
        nbins += 1;
    }
    let mut counts = vec![0usize; nbins];
    for &x in &sorted {
        let mut k = (((x - min) / width).floor() as usize).min(nbins - 1);
        while k > 0 && x < lower(k) {
            k -= 1;
        }
        while k + 1 < nbins && x >= lower(k + 1) {
            k += 1;
        }
        counts[k] += 1;
    }
    let bins = counts.into_iter().enumerate().map(|(k, count)| Bin { lower: lower(k), upper: lower(k + 1), count }).collect();
    Ok(Histogram { width, bins })
}

/// Silverman bandwidth `1.06 sd r^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Option<f64> {
    let sd = std_dev(samples)?;
    Some(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

/// Gaussian kernel estimate on [`PMF_GRID_POINTS`] points spanning the
/// samples, renormalized to unit trapezoid area. Repeated samples share one
/// weighted kernel.
pub fn pmf_estimate(samples: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::NoSpread);
    }
    let h = silverman_bandwidth(samples).ok_or(StatsError::NoSpread)?;
    if h <= 0.0 || !h.is_finite() {
        return Err(StatsError::NoSpread);
    }
    let mut sorted = samples.to_vec();
    sort_samples(&mut sorted);
    let mut weighted: Vec<(f64, f64)> = Vec::new();
    for &x in &sorted {
        match weighted.last_mut() {
            Some((v, w)) if *v == x => *w += 1.0,
            _ => weighted.push((x, 1.0)),
        }
    }
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let step = (max - min) / (PMF_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut curve: Vec<(f64, f64)> = (0..PMF_GRID_POINTS)
        .map(|i| {
            let x = if i == PMF_GRID_POINTS - 1 { max } else { min + i as f64 * step };
            let d: f64 = weighted.iter().map(|&(s, w)| w * (-0.5 * ((x - s) / h).powi(2)).exp()).sum();
            (x, d * norm)
        })
        .collect();
    let area = trapezoid(&curve);
    if area > 0.0 {
        for p in curve.iter_mut() {
            p.1 /= area;
        }
    }
    Ok(curve)
}

pub fn trapezoid(curve: &[(f64, f64)]) -> f64 {
    curve.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterRow {
    pub key: RunKey,
    pub parameter: String,
    pub target: f64,
    pub summary: Summary,
}

/// Statistics of a tracked parameter's value in the record where each run
/// first reaches the target.
pub fn parameter_table(
    ds: &RunDataset,
    parameter: &str,
    targets: &[f64],
    percentiles: &[f64],
) -> Result<Vec<ParameterRow>, StatsError> {
    let mut rows = Vec::new();
    let mut found = false;
    for (key, g) in &ds.groups {
        let Some(col) = g.parameter_names.iter().position(|p| p == parameter) else {
            continue;
        };
        found = true;
        for &v in targets {
            let samples: Vec<f64> = g
                .runs
                .iter()
                .filter_map(|r| hitting_index(r, v, ds.direction).map(|i| r.records[i].parameters[col]))
                .collect();
            rows.push(ParameterRow {
                key: key.clone(),
                parameter: parameter.to_string(),
                target: v,
                summary: Summary::of(&samples, percentiles)?,
            });
        }
    }
    if !found {
        return Err(StatsError::UnknownParameter(parameter.to_string()));
    }
    Ok(rows)
}
