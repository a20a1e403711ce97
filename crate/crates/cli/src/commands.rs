use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use iohbench_core::algorithms::{OnePlusLambdaEa, RandomSearch};
use iohbench_core::dataset::{load_folder, trim_efficient, LoadReport, RunDataset};
use iohbench_core::query::{run_query, QueryParams, Statistic};
use iohbench_core::runner::{run_experiment, Algorithm, ExperimentReport, RunOptions};
use iohbench_core::{parse_config, Suite};
use serde_json::{json, Value};

use crate::args::{AlgorithmName, AnalysisArgs, Cli, Command, ExportArgs, OutputFormat, ProcessArgs, RunArgs, ServeArgs};
use crate::service::{self, Registry, RouterOptions};

/// A failed command and its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(a) => cmd_run(&a).map(|rep| print_run_report(&rep)),
        Command::Process(a) => cmd_process(&a).map(|m| println!("wrote {} files to {}", m.files.len(), a.out.display())),
        Command::Export(a) => cmd_export(&a),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn print_run_report(rep: &ExperimentReport) {
    for g in &rep.groups {
        println!("f{} DIM{}: {} runs", g.function_id, g.dimension, g.runs);
    }
    println!("{} runs written to {}", rep.runs_executed, rep.result_folder.display());
}

pub fn cmd_run(a: &RunArgs) -> Result<ExperimentReport, Failure> {
    let text = fs::read_to_string(&a.config).map_err(|e| Failure {
        code: 2,
        error: anyhow!(e).context(format!("cannot read config {}", a.config.display())),
    })?;
    let cfg = parse_config(&text).with_context(|| format!("invalid config {}", a.config.display()))?;
    let algorithm: Box<dyn Algorithm> = match a.algorithm {
        AlgorithmName::RandomSearch => Box::new(RandomSearch),
        AlgorithmName::OnePlusLambdaEa => Box::new(OnePlusLambdaEa::new(a.lambda).map_err(|e| anyhow!("{e}"))?),
    };
    let options = RunOptions { seed: a.seed, jobs: a.jobs.unwrap_or(0) };
    Ok(run_experiment(&cfg, &Suite::pbo(), algorithm.as_ref(), &options).map_err(anyhow::Error::from)?)
}

/// Loads folders one by one, skipping failures; fails only if none load.
pub fn load_inputs(folders: &[PathBuf]) -> anyhow::Result<(RunDataset, LoadReport)> {
    let mut merged: Option<(RunDataset, LoadReport)> = None;
    let mut failures = Vec::new();
    for f in folders {
        match load_folder(f) {
            Ok((ds, rep)) => match &mut merged {
                None => merged = Some((ds, rep)),
                Some((all, report)) => {
                    all.merge(ds).with_context(|| format!("merging {}", f.display()))?;
                    report.warnings.extend(rep.warnings);
                    report.files.extend(rep.files);
                }
            },
            Err(e) => {
                eprintln!("error: {}: {e}", f.display());
                failures.push(format!("{}: {e}", f.display()));
            }
        }
    }
    let (ds, mut report) = merged.ok_or_else(|| anyhow!("no folder could be loaded: {}", failures.join("; ")))?;
    report.entries = ds.report();
    report.warnings.extend(failures);
    Ok((ds, report))
}

fn analysis_pairs(a: &AnalysisArgs) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    };
    push("fmin", a.fmin.map(|x| x.to_string()));
    push("fmax", a.fmax.map(|x| x.to_string()));
    push("step", a.step.map(|x| x.to_string()));
    push("budgets", a.budgets.clone());
    push("percentiles", a.percentiles.clone());
    pairs
}

fn prepare(folders: &[PathBuf], a: &AnalysisArgs) -> anyhow::Result<(RunDataset, LoadReport)> {
    let (ds, report) = load_inputs(folders)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let ds = match a.efficient {
        Some(cap) if cap < 2 => bail!("--efficient cap must be at least 2"),
        Some(cap) => trim_efficient(&ds, cap),
        None => ds,
    };
    Ok((ds, report))
}

/// Percent-encodes a query-string component.
pub fn encode_component(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-_.~,".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn query_string(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{}={}", encode_component(k), encode_component(v))).collect::<Vec<_>>().join("&")
}

/// One output of `process`: file name, statistic and extra parameters.
struct Output {
    file: String,
    statistic: Statistic,
    extra: Vec<(String, String)>,
}

fn outputs(ds: &RunDataset) -> Vec<Output> {
    let kind = |k: &str| vec![("kind".to_string(), k.to_string())];
    let mut v = vec![
        Output { file: "fixed-target-summary.csv".into(), statistic: Statistic::FixedTargetSummary, extra: vec![] },
        Output { file: "fixed-budget-summary.csv".into(), statistic: Statistic::FixedBudgetSummary, extra: vec![] },
        Output { file: "raw-samples-target.csv".into(), statistic: Statistic::RawSamples, extra: kind("target") },
        Output { file: "raw-samples-budget.csv".into(), statistic: Statistic::RawSamples, extra: kind("budget") },
        Output { file: "ecdf-target.csv".into(), statistic: Statistic::EcdfTarget, extra: vec![] },
        Output { file: "ecdf-budget.csv".into(), statistic: Statistic::EcdfBudget, extra: vec![] },
        Output { file: "auc.csv".into(), statistic: Statistic::Auc, extra: vec![] },
        Output { file: "histogram-target.csv".into(), statistic: Statistic::Histogram, extra: kind("target") },
        Output { file: "histogram-budget.csv".into(), statistic: Statistic::Histogram, extra: kind("budget") },
        Output { file: "pmf-target.csv".into(), statistic: Statistic::Pmf, extra: kind("target") },
        Output { file: "pmf-budget.csv".into(), statistic: Statistic::Pmf, extra: kind("budget") },
    ];
    let mut names: Vec<&String> = ds.groups.values().flat_map(|g| g.parameter_names.iter()).collect();
    names.sort();
    names.dedup();
    for name in names {
        let safe: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        v.push(Output {
            file: format!("parameter-table-{safe}.csv"),
            statistic: Statistic::ParameterTable,
            extra: vec![("parameter".into(), name.clone())],
        });
    }
    v
}

/// Contents of `manifest.json`.
#[derive(Debug)]
pub struct Manifest {
    pub files: Vec<Value>,
    pub json: Value,
}

pub fn cmd_process(a: &ProcessArgs) -> Result<Manifest, Failure> {
    let (ds, report) = prepare(&a.folders, &a.analysis)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let common = analysis_pairs(&a.analysis);
    let mut files = Vec::new();
    for o in outputs(&ds) {
        let mut pairs = common.clone();
        pairs.extend(o.extra.iter().cloned());
        let params = QueryParams::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(|e| anyhow!("{e}"))?;
        let out = run_query(&ds, o.statistic, &params).map_err(|e| anyhow!("{}: {e}", o.file))?;
        write_file(&a.out.join(&o.file), &out.to_csv())?;
        files.push(json!({
            "file": o.file,
            "statistic": o.statistic.name(),
            "query": query_string(&pairs),
            "rows": out.table.rows.len(),
            "notes": out.notes,
        }));
    }
    let json = json!({
        "generator": format!("iohbench {}", env!("CARGO_PKG_VERSION")),
        "folders": a.folders.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "efficient": a.analysis.efficient,
        "direction": ds.direction,
        "datasets": report.entries,
        "warnings": report.warnings,
        "files": files,
    });
    let text = serde_json::to_string_pretty(&json).map_err(|e| anyhow!(e))? + "\n";
    write_file(&a.out.join("manifest.json"), &text)?;
    Ok(Manifest { files, json })
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_export(a: &ExportArgs) -> Result<(), Failure> {
    let stat: Statistic = a.statistic.parse().map_err(|e| Failure { code: 2, error: anyhow!("{e}") })?;
    let (ds, _) = prepare(&a.folders, &a.analysis)?;
    let mut pairs = analysis_pairs(&a.analysis);
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Failure { code: 2, error: anyhow!("--param expects KEY=VALUE, got '{p}'") })?;
        pairs.push((k.to_string(), v.to_string()));
    }
    let params = QueryParams::from_pairs(pairs).map_err(|e| Failure { code: 2, error: anyhow!("{e}") })?;
    let out = run_query(&ds, stat, &params).map_err(|e| anyhow!("{e}"))?;
    let text = match a.format {
        OutputFormat::Csv => out.to_csv(),
        OutputFormat::Json => serde_json::to_string_pretty(&out.to_json()).map_err(|e| anyhow!(e))? + "\n",
    };
    for n in &out.notes {
        eprintln!("note: {n}");
    }
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn cmd_serve(a: ServeArgs) -> Result<(), Failure> {
    let registry = Arc::new(Registry::new());
    if !a.folders.is_empty() {
        let (ds, report) = load_inputs(&a.folders)?;
        for line in report.prompt_lines() {
            println!("{line}");
        }
        let source = a.folders.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ");
        let e = registry.insert(source, ds, report);
        println!("preloaded {} as {}", e.source, e.id);
    }
    let assets = a.assets.clone().or_else(|| Some(PathBuf::from("dashboard/dist")).filter(|p| p.is_dir()));
    let app = service::router(
        registry,
        RouterOptions { body_limit: a.max_upload_mb.saturating_mul(1024 * 1024), assets },
    );
    let addr: SocketAddr =
        format!("{}:{}", a.host, a.port).parse().with_context(|| format!("invalid address {}:{}", a.host, a.port))?;
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("server error")
    })?;
    Ok(())
}
