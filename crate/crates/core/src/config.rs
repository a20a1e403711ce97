//! `configuration.ini` parsing.
//!
//! Three sections are recognised: `[suite]`, `[observer]` and `[triggers]`.
//! Unknown sections or keys are errors. Comments start with `;` or `#`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logger::ObserverConfig;

pub const DEFAULT_BUDGET_MULTIPLIER: u64 = 50;
pub const DEFAULT_RESTARTS: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key '{key}' in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key '{key}' in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("line {line}: invalid value for '{key}': {message}")]
    InvalidValue { line: usize, key: String, message: String },
}

const SUITE_KEYS: &[&str] = &["suite_name", "functions_id", "instances_id", "dimensions"];
const SUITE_OPTIONAL: &[&str] = &["budget_multiplier", "independent_restarts", "stop_on_optimum"];
const OBSERVER_KEYS: &[&str] = &["observer_name", "result_folder", "algorithm_name", "algorithm_info", "parameters_name"];
const TRIGGER_KEYS: &[&str] =
    &["complete_triggers", "number_interval_triggers", "number_target_triggers", "base_evaluation_triggers"];

/// A fully validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub suite_name: String,
    pub function_ids: BTreeSet<u32>,
    pub instance_ids: BTreeSet<u32>,
    pub dimensions: BTreeSet<usize>,
    pub observer: ObserverConfig,
    pub budget_multiplier: u64,
    pub independent_restarts: u32,
    pub stop_on_optimum: bool,
}

impl ExperimentConfig {
    pub fn max_budget(&self, dimension: usize) -> u64 {
        self.budget_multiplier * dimension as u64
    }

    pub fn first_instance(&self) -> u32 {
        self.instance_ids.iter().next().copied().unwrap_or(1)
    }
}

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn allowed_keys(section: &str) -> Option<Vec<&'static str>> {
    match section {
        "suite" => Some(SUITE_KEYS.iter().chain(SUITE_OPTIONAL).copied().collect()),
        "observer" => Some(OBSERVER_KEYS.to_vec()),
        "triggers" => Some(TRIGGER_KEYS.to_vec()),
        _ => None,
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

fn read_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        // tolerate the LaTeX-style trailing `\\` of copied listings
        let trimmed = raw.trim().trim_end_matches('\\').trim();
        if trimmed.is_empty() || trimmed.starts_with(';') || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: "unterminated section header".into() })?
                .trim()
                .to_string();
            if allowed_keys(&name).is_none() {
                return Err(ConfigError::UnknownSection { line, section: name });
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected 'key = value', got '{trimmed}'") })?;
        let key = key.trim().to_string();
        let section = current
            .clone()
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("key '{key}' outside of a section") })?;
        if !allowed_keys(&section).unwrap_or_default().contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, section, key });
        }
        let map = sections.get_mut(&section).expect("section inserted");
        if map.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        map.insert(key, Entry { line, value: unquote(value).to_string() });
    }
    Ok(sections)
}

/// Expands `"1-25,75,80-100"` (hyphen or en-dash ranges) into a set.
pub fn parse_id_list(text: &str) -> Result<BTreeSet<u32>, String> {
    let mut out = BTreeSet::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err("empty list element".into());
        }
        let normalized = part.replace(['\u{2013}', '\u{2014}'], "-");
        let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("'{s}' is not a non-negative integer"));
        match normalized.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(format!("descending range '{part}'"));
                }
                out.extend(lo..=hi);
            }
            None => {
                out.insert(parse(&normalized)?);
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl Reader<'_> {
    fn entry(&self, section: &str, key: &str) -> Result<&Entry, ConfigError> {
        self.sections
            .get(section)
            .ok_or_else(|| ConfigError::MissingSection(section.into()))?
            .get(key)
            .ok_or_else(|| ConfigError::MissingKey { section: section.into(), key: key.into() })
    }

    fn optional(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn string(&self, section: &str, key: &str) -> Result<String, ConfigError> {
        Ok(self.entry(section, key)?.value.clone())
    }

    fn parsed<T, F>(&self, section: &str, key: &str, f: F) -> Result<T, ConfigError>
    where
        F: FnOnce(&str) -> Result<T, String>,
    {
        let e = self.entry(section, key)?;
        convert(e, key, f)
    }
}

fn convert<T, F>(e: &Entry, key: &str, f: F) -> Result<T, ConfigError>
where
    F: FnOnce(&str) -> Result<T, String>,
{
    f(&e.value).map_err(|message| ConfigError::InvalidValue { line: e.line, key: key.into(), message })
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("'{s}' is not 'true' or 'false'")),
    }
}

fn parse_positive<T: std::str::FromStr + PartialOrd + Default>(s: &str) -> Result<T, String> {
    match s.parse::<T>() {
        Ok(v) if v > T::default() => Ok(v),
        _ => Err(format!("'{s}' is not a positive integer")),
    }
}

fn parse_bases(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    if s.is_empty() || s == "0" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| parse_positive::<u64>(p.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map(|mut v| {
            v.sort_unstable();
            v.dedup();
            v
        })
}

fn parse_names(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

fn non_empty<T>(set: BTreeSet<T>) -> Result<BTreeSet<T>, String> {
    if set.is_empty() {
        Err("selection is empty".into())
    } else {
        Ok(set)
    }
}

/// Parses and validates a configuration file's contents.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let sections = read_sections(text)?;
    for s in ["suite", "observer", "triggers"] {
        if !sections.contains_key(s) {
            return Err(ConfigError::MissingSection(s.into()));
        }
    }
    let r = Reader { sections: &sections };

    let function_ids = r.parsed("suite", "functions_id", |s| non_empty(parse_id_list(s)?))?;
    let instance_ids = r.parsed("suite", "instances_id", |s| {
        let ids = non_empty(parse_id_list(s)?)?;
        if ids.contains(&0) {
            return Err("instance ids start at 1".into());
        }
        Ok(ids)
    })?;
    let dimensions = r.parsed("suite", "dimensions", |s| {
        let ids = non_empty(parse_id_list(s)?)?;
        if ids.contains(&0) {
            return Err("dimensions must be positive".into());
        }
        Ok(ids.into_iter().map(|d| d as usize).collect())
    })?;
    let budget_multiplier = match r.optional("suite", "budget_multiplier") {
        Some(e) => convert(e, "budget_multiplier", parse_positive::<u64>)?,
        None => DEFAULT_BUDGET_MULTIPLIER,
    };
    let independent_restarts = match r.optional("suite", "independent_restarts") {
        Some(e) => convert(e, "independent_restarts", parse_positive::<u32>)?,
        None => DEFAULT_RESTARTS,
    };
    let stop_on_optimum = match r.optional("suite", "stop_on_optimum") {
        Some(e) => convert(e, "stop_on_optimum", parse_bool)?,
        None => false,
    };

    let observer = ObserverConfig {
        observer_name: r.string("observer", "observer_name")?,
        result_folder: r.string("observer", "result_folder")?.into(),
        algorithm_name: r.string("observer", "algorithm_name")?,
        algorithm_info: r.string("observer", "algorithm_info")?,
        parameter_names: parse_names(&r.string("observer", "parameters_name")?),
        complete_triggers: r.parsed("triggers", "complete_triggers", parse_bool)?,
        interval_step: r.parsed("triggers", "number_interval_triggers", |s| {
            s.parse::<u64>().map_err(|_| format!("'{s}' is not a non-negative integer"))
        })?,
        target_triggers: r.parsed("triggers", "number_target_triggers", |s| {
            s.parse::<u32>().map_err(|_| format!("'{s}' is not a non-negative integer"))
        })?,
        base_evaluations: r.parsed("triggers", "base_evaluation_triggers", parse_bases)?,
    };

    Ok(ExperimentConfig {
        suite_name: r.string("suite", "suite_name")?,
        function_ids,
        instance_ids,
        dimensions,
        observer,
        budget_multiplier,
        independent_restarts,
        stop_on_optimum,
    })
}
