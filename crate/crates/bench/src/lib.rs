//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use iohbench_core::dataset::{Run, RunGroup, RunKey};
use iohbench_core::logger::LogRecord;
use iohbench_core::{RunDataset, SeededGenerator};

/// A maximization dataset with `algorithms` groups of `runs` runs each.
///
/// Every run spans `evaluations` evaluations and improves by one unit with
/// probability `1 / sqrt(e)` at evaluation `e`, so improvements thin out
/// the way they do for real heuristics. One tracked parameter is recorded.
pub fn synthetic_dataset(algorithms: usize, runs: usize, evaluations: u64, seed: u64) -> RunDataset {
    let mut g = SeededGenerator::new(seed);
    let mut groups = BTreeMap::new();
    for a in 0..algorithms {
        let key = RunKey { algorithm: format!("A{a}"), function_id: 1, dimension: 100 };
        let runs = (0..runs)
            .map(|r| {
                let mut best = 0.0;
                let mut records = Vec::new();
                for e in 1..=evaluations {
                    let improved = g.uniform() < 1.0 / (e as f64).sqrt();
                    if improved {
                        best += 1.0;
                    }
                    if e == 1 || improved || e == evaluations {
                        records.push(LogRecord {
                            evaluations: e,
                            raw_value: best,
                            best_raw: best,
                            transformed_value: best,
                            best_transformed: best,
                            parameters: vec![g.uniform()],
                        });
                    }
                }
                Run { instance_id: r as u32 + 1, records, summary: None }
            })
            .collect();
        groups.insert(key, RunGroup { parameter_names: vec!["rate".into()], runs });
    }
    RunDataset::from_groups(groups).expect("synthetic dataset is well formed")
}
