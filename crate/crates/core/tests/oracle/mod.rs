//! Brute-force reference computations over complete per-evaluation
//! trajectories. Only [`compare_all`] touches `iohbench_core::stats`; the
//! reference functions re-derive everything from the raw values.

#![allow(dead_code)]

use std::collections::BTreeMap;

use iohbench_core::dataset::{Run, RunGroup, RunKey};
use iohbench_core::logger::LogRecord;
use iohbench_core::{RunDataset, SeededGenerator};

/// Every evaluation of one run: `raw[k]` and `params[k]` belong to evaluation `k + 1`.
#[derive(Clone, Debug)]
pub struct Traj {
    pub raw: Vec<f64>,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub groups: Vec<(String, Vec<Traj>)>,
    pub minimize: bool,
    pub integer_valued: bool,
}

pub const PARAMETER: &str = "p";

/// Dataset `seed` of a reproducible family: 1 to 3 algorithms, up to 20 runs
/// and up to 200 evaluations each, every third dataset minimizing.
pub fn generate(seed: u64) -> Synthetic {
    let mut g = SeededGenerator::new(seed);
    let minimize = seed.is_multiple_of(3);
    let integer_valued = seed.is_multiple_of(2);
    let algs = 1 + g.below(3);
    let mut groups = Vec::new();
    for a in 0..algs {
        let runs = 1 + g.below(20);
        let drift = 0.2 + g.uniform();
        let trajs = (0..runs)
            .map(|_| {
                let len = 1 + g.below(200);
                let mut raw = Vec::with_capacity(len);
                let mut params = Vec::with_capacity(len);
                for k in 0..len {
                    let base = drift * (k as f64).sqrt() + 10.0 * g.uniform();
                    let v = if integer_valued { base.floor() } else { base };
                    raw.push(if minimize { -v } else { v });
                    params.push((g.uniform() * 100.0).floor() / 4.0);
                }
                Traj { raw, params }
            })
            .collect();
        groups.push((format!("alg{a}"), trajs));
    }
    Synthetic { groups, minimize, integer_valued }
}

pub fn better(a: f64, b: f64, minimize: bool) -> bool {
    if minimize {
        a < b
    } else {
        a > b
    }
}

pub fn reaches(a: f64, v: f64, minimize: bool) -> bool {
    if minimize {
        a <= v
    } else {
        a >= v
    }
}

/// Records a `.dat` file would hold: the first evaluation, strict
/// improvements, and the last evaluation.
pub fn sparse_records(t: &Traj, minimize: bool) -> Vec<LogRecord> {
    let mut out: Vec<LogRecord> = Vec::new();
    let mut best = t.raw[0];
    for (k, &x) in t.raw.iter().enumerate() {
        let improved = k > 0 && better(x, best, minimize);
        if improved {
            best = x;
        }
        if k == 0 || improved || k + 1 == t.raw.len() {
            out.push(LogRecord {
                evaluations: k as u64 + 1,
                raw_value: x,
                best_raw: best,
                transformed_value: x,
                best_transformed: best,
                parameters: vec![t.params[k]],
            });
        }
    }
    out
}

pub fn key(alg: &str) -> RunKey {
    RunKey { algorithm: alg.to_string(), function_id: 1, dimension: 16 }
}

pub fn to_dataset(s: &Synthetic) -> RunDataset {
    let groups: BTreeMap<RunKey, RunGroup> = s
        .groups
        .iter()
        .map(|(alg, trajs)| {
            let runs = trajs
                .iter()
                .map(|t| Run { instance_id: 1, records: sparse_records(t, s.minimize), summary: None })
                .collect();
            (key(alg), RunGroup { parameter_names: vec![PARAMETER.into()], runs })
        })
        .collect();
    RunDataset::from_groups(groups).expect("synthetic data is monotone")
}

/// `T(v)` by scanning every evaluation.
pub fn hit(t: &Traj, v: f64, minimize: bool) -> Option<u64> {
    let mut best = t.raw[0];
    for (k, &x) in t.raw.iter().enumerate() {
        if better(x, best, minimize) {
            best = x;
        }
        if reaches(best, v, minimize) {
            return Some(k as u64 + 1);
        }
    }
    None
}

/// `V(t)`: best over evaluations `1..=t`, at least the first one.
pub fn value_at(t: &Traj, budget: u64, minimize: bool) -> f64 {
    let n = (budget as usize).clamp(1, t.raw.len());
    t.raw[..n].iter().copied().fold(t.raw[0], |b, x| if better(x, b, minimize) { x } else { b })
}

pub fn param_at_hit(t: &Traj, v: f64, minimize: bool) -> Option<f64> {
    hit(t, v, minimize).map(|e| t.params[e as usize - 1])
}

/// Element `max(1, floor(p r / 100))` (1-based) of the sorted samples.
pub fn pct(samples: &[f64], p: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut idx = 0usize;
    // largest i with 100 i <= p r, found by walking instead of dividing
    while (idx + 1) as f64 * 100.0 <= p * s.len() as f64 {
        idx += 1;
    }
    s[idx.max(1) - 1]
}

pub fn mean(xs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in xs {
        acc += x;
    }
    acc / xs.len() as f64
}

pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let mut acc = 0.0;
    for x in xs {
        acc += (x - m) * (x - m);
    }
    (acc / (xs.len() as f64 - 1.0)).sqrt()
}

/// `F(t)` over all (run, target) pairs by a double loop.
pub fn ecdf_target(trajs: &[Traj], targets: &[f64], budget: u64, minimize: bool) -> f64 {
    let mut hits = 0usize;
    for t in trajs {
        for &v in targets {
            if reaches(value_at(t, budget, minimize), v, minimize) {
                hits += 1;
            }
        }
    }
    hits as f64 / (trajs.len() * targets.len()) as f64
}

/// `F(v)` over all (run, budget) pairs by a double loop.
pub fn ecdf_budget(trajs: &[Traj], budgets: &[u64], v: f64, minimize: bool) -> f64 {
    let mut hits = 0usize;
    for t in trajs {
        for &b in budgets {
            if hit(t, v, minimize).is_some_and(|h| h <= b) {
                hits += 1;
            }
        }
    }
    hits as f64 / (trajs.len() * budgets.len()) as f64
}

/// Mean of `F(t)` over `t = 1..=max_budget`.
pub fn auc(trajs: &[Traj], targets: &[f64], max_budget: u64, minimize: bool) -> f64 {
    let mut area = 0.0;
    for t in 1..=max_budget {
        area += ecdf_target(trajs, targets, t, minimize);
    }
    area / max_budget as f64
}

/// Bin width and counts for bins `[min + k w, min + (k + 1) w)`.
pub fn fd_counts(samples: &[f64]) -> (f64, Vec<usize>) {
    let w = (pct(samples, 75.0) - pct(samples, 25.0)) / (samples.len() as f64).cbrt();
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if w == 0.0 {
        return (0.0, vec![samples.len()]);
    }
    let mut bins = 1;
    while min + bins as f64 * w <= max {
        bins += 1;
    }
    let counts = (0..bins)
        .map(|k| {
            let lo = min + k as f64 * w;
            let hi = min + (k + 1) as f64 * w;
            samples.iter().filter(|&&x| x >= lo && x < hi).count()
        })
        .collect();
    (w, counts)
}

/// Target grid spanning the data, ten steps.
pub fn targets_for(s: &Synthetic) -> Vec<f64> {
    let all: Vec<f64> = s.groups.iter().flat_map(|(_, ts)| ts.iter().flat_map(|t| t.raw.iter().copied())).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = if hi > lo { (hi - lo) / 10.0 } else { 1.0 };
    (0..=10).map(|k| lo + k as f64 * step).collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn check_opt(got: Option<f64>, want: Option<f64>, rel: f64, what: &str) -> Result<(), String> {
    let ok = match (got, want) {
        (Some(a), Some(b)) => close(a, b, rel),
        (None, None) => true,
        _ => false,
    };
    check(ok, || format!("{what}: got {got:?}, want {want:?}"))
}

pub const BUDGETS: [u64; 9] = [1, 2, 5, 10, 20, 50, 100, 200, 500];

/// Compares every statistic on synthetic dataset `seed` against the oracle.
/// Returns the number of individual comparisons made.
pub fn compare_all(seed: u64, rel: f64) -> Result<usize, String> {
    use iohbench_core::stats;

    let s = generate(seed);
    let ds = to_dataset(&s);
    let min = s.minimize;
    let targets = targets_for(&s);
    let ps = stats::DEFAULT_PERCENTILES;
    let mut n = 0usize;
    let expected_dir = if min { iohbench_core::Direction::Minimize } else { iohbench_core::Direction::Maximize };
    check(ds.direction == expected_dir, || format!("seed {seed}: direction {:?}", ds.direction))?;

    let ft = stats::fixed_target_table(&ds, &targets, &ps).map_err(|e| e.to_string())?;
    let fb = stats::fixed_budget_table(&ds, &BUDGETS, &ps).map_err(|e| e.to_string())?;
    let pt = stats::parameter_table(&ds, PARAMETER, &targets, &ps).map_err(|e| e.to_string())?;
    let auc_rows = stats::auc_normalized(&ds, &targets, 50).map_err(|e| e.to_string())?;

    for (alg, trajs) in &s.groups {
        let k = key(alg);
        let runs = &ds.groups[&k].runs;
        let summary_ok = |label: String, got: &stats::Summary, samples: &[f64], n: &mut usize| -> Result<(), String> {
            check(got.runs == samples.len(), || format!("{label}: runs {} vs {}", got.runs, samples.len()))?;
            *n += 1;
            if samples.is_empty() {
                check(got.mean.is_none() && got.median.is_none(), || format!("{label}: blanks expected"))?;
                return Ok(());
            }
            check_opt(got.mean, Some(mean(samples)), rel, &format!("{label} mean"))?;
            check_opt(got.median, Some(pct(samples, 50.0)), rel, &format!("{label} median"))?;
            for (i, &p) in ps.iter().enumerate() {
                check_opt(got.percentiles[i], Some(pct(samples, p)), rel, &format!("{label} {p}%"))?;
            }
            let want_sd = (samples.len() >= 2).then(|| sd(samples));
            check_opt(got.sd, want_sd, rel, &format!("{label} sd"))?;
            *n += ps.len() + 3;
            Ok(())
        };

        for &v in &targets {
            let row = ft.rows.iter().find(|r| r.key == k && r.at == v).ok_or("missing target row")?;
            let samples: Vec<f64> = trajs.iter().filter_map(|t| hit(t, v, min)).map(|h| h as f64).collect();
            summary_ok(format!("seed {seed} {alg} T({v})"), &row.summary, &samples, &mut n)?;

            let prow = pt.iter().find(|r| r.key == k && r.target == v).ok_or("missing parameter row")?;
            let psamples: Vec<f64> = trajs.iter().filter_map(|t| param_at_hit(t, v, min)).collect();
            summary_ok(format!("seed {seed} {alg} param({v})"), &prow.summary, &psamples, &mut n)?;
        }
        for &b in &BUDGETS {
            let row = fb.rows.iter().find(|r| r.key == k && r.at == b as f64).ok_or("missing budget row")?;
            let samples: Vec<f64> = trajs.iter().map(|t| value_at(t, b, min)).collect();
            summary_ok(format!("seed {seed} {alg} V({b})"), &row.summary, &samples, &mut n)?;
        }

        let te = stats::TargetEcdf::new(runs, &targets, ds.direction);
        let longest = trajs.iter().map(|t| t.raw.len()).max().unwrap_or(0) as u64;
        for t in 1..=longest + 3 {
            let (got, want) = (te.value_at(t), ecdf_target(trajs, &targets, t, min));
            check(close(got, want, rel), || format!("seed {seed} {alg} target ECDF at {t}: {got} vs {want}"))?;
            n += 1;
        }
        let be = stats::BudgetEcdf::new(runs, &BUDGETS, ds.direction);
        let mut probes = targets.clone();
        probes.extend(trajs.iter().flat_map(|t| t.raw.iter().copied()));
        for &v in &probes {
            let (got, want) = (be.value_at(v), ecdf_budget(trajs, &BUDGETS, v, min));
            check(close(got, want, rel), || format!("seed {seed} {alg} budget ECDF at {v}: {got} vs {want}"))?;
            n += 1;
        }

        let a = auc_rows.iter().find(|r| r.key == k).ok_or("missing auc row")?;
        let want = auc(trajs, &targets, 50, min);
        check(close(a.auc, want, rel), || format!("seed {seed} {alg} AUC {} vs {want}", a.auc))?;
        n += 1;

        let mid = targets[targets.len() / 2];
        let hist_samples: [Vec<f64>; 2] = [
            trajs.iter().filter_map(|t| hit(t, mid, min)).map(|h| h as f64).collect(),
            trajs.iter().map(|t| value_at(t, 50, min)).collect(),
        ];
        for samples in hist_samples.iter().filter(|s| !s.is_empty()) {
            let h = stats::fd_histogram(samples).map_err(|e| e.to_string())?;
            let (w, counts) = fd_counts(samples);
            check(close(h.width, w, rel), || format!("seed {seed} {alg} FD width {} vs {w}", h.width))?;
            let got: Vec<usize> = h.bins.iter().map(|b| b.count).collect();
            check(got == counts, || format!("seed {seed} {alg} FD counts {got:?} vs {counts:?}"))?;
            n += 1 + counts.len();
        }
    }
    Ok(n)
}
