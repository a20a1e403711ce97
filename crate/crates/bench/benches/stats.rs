use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use iohbench_bench::synthetic_dataset;
use iohbench_core::query::{run_query, QueryParams, Statistic};
use iohbench_core::stats::{self, DEFAULT_PERCENTILES};
use iohbench_core::trim_efficient;
use std::hint::black_box;

fn tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("tables");
    for evaluations in [1_000u64, 100_000] {
        let ds = synthetic_dataset(3, 25, evaluations, 1);
        let (lo, hi) = ds.value_range().unwrap();
        let targets: Vec<f64> = (0..=50).map(|k| lo + (hi - lo) * k as f64 / 50.0).collect();
        let budgets: Vec<u64> = (0..=20).map(|k| 1 + (evaluations - 1) * k / 20).collect();
        group.bench_with_input(BenchmarkId::new("fixed_target", evaluations), &ds, |b, ds| {
            b.iter(|| stats::fixed_target_table(black_box(ds), &targets, &DEFAULT_PERCENTILES).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fixed_budget", evaluations), &ds, |b, ds| {
            b.iter(|| stats::fixed_budget_table(black_box(ds), &budgets, &DEFAULT_PERCENTILES).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("auc", evaluations), &ds, |b, ds| {
            b.iter(|| stats::auc_normalized(black_box(ds), &targets, evaluations).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ecdf_target", evaluations), &ds, |b, ds| {
            b.iter(|| stats::ecdf_fixed_target(black_box(ds), &targets))
        });
    }
    group.finish();
}

fn trimming(c: &mut Criterion) {
    let ds = synthetic_dataset(3, 25, 100_000, 2);
    let mut group = c.benchmark_group("efficient");
    group.bench_function("trim_100", |b| b.iter(|| trim_efficient(black_box(&ds), 100)));
    let trimmed = trim_efficient(&ds, 100);
    let params = QueryParams::default();
    for (name, data) in [("query_full", &ds), ("query_trimmed", &trimmed)] {
        group.bench_function(name, |b| b.iter(|| run_query(black_box(data), Statistic::FixedTargetSummary, &params).unwrap()));
    }
    group.finish();
}

fn densities(c: &mut Criterion) {
    let samples: Vec<f64> = synthetic_dataset(1, 1_000, 200, 3).runs().filter_map(|r| r.final_best()).collect();
    c.bench_function("pmf_1000", |b| b.iter(|| stats::pmf_estimate(black_box(&samples)).unwrap()));
    c.bench_function("fd_histogram_1000", |b| b.iter(|| stats::fd_histogram(black_box(&samples)).unwrap()));
}

criterion_group!(benches, tables, trimming, densities);
criterion_main!(benches);
