//! Experiment description and its text format.
//!
//! One `key = value` pair per line, `#` starts a comment. Simulation keys
//! use the dotted names of [`ebcnf_core::config::KEYS`]; a bare suffix such
//! as `node_count` is accepted when it names exactly one key. The
//! `experiment.*` keys describe the batch:
//!
//! | key | value |
//! |-----|-------|
//! | `experiment.seeds` | comma list, ranges like `1-10` allowed |
//! | `experiment.protocols` | comma list or `all` |
//! | `experiment.sweep` | simulation key to vary |
//! | `experiment.sweep_values` | comma list of values for it |
//! | `experiment.output` | output directory |
//!
//! Environment variables named `EBCNF_` plus the key in upper case with
//! `.` written as `__` (for example `EBCNF_SIM__NODE_COUNT`) override the
//! file.

use std::fs;
use std::path::{Path, PathBuf};

use ebcnf_core::config::KEYS;
use ebcnf_core::{Protocol, SimConfig};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "EBCNF_";

const EXPERIMENT_KEYS: &[&str] =
    &["experiment.seeds", "experiment.protocols", "experiment.sweep", "experiment.sweep_values", "experiment.output"];

/// One parameter varied over a list of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    pub protocols: Vec<Protocol>,
    pub output: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = SimConfig::default();
        Self {
            seeds: vec![base.seed],
            base,
            sweep: None,
            protocols: Protocol::ALL.to_vec(),
            output: PathBuf::from("results"),
        }
    }
}

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, Copy)]
enum Origin<'a> {
    Line(usize),
    Env(&'a str),
}

impl ExperimentSpec {
    /// Every violated invariant, including those of each sweep point.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.base.violations();
        if self.seeds.is_empty() {
            out.push("experiment.seeds must not be empty".into());
        }
        if self.protocols.is_empty() {
            out.push("experiment.protocols must not be empty".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                out.push("experiment.sweep_values must not be empty".into());
            }
            for value in &sweep.values {
                let mut c = self.base.clone();
                match c.set(&sweep.key, value) {
                    Err(e) => out.push(format!("experiment.sweep_values: {e}")),
                    Ok(()) => out.extend(c.violations().into_iter().map(|v| format!("{} = {value}: {v}", sweep.key))),
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(v))
        }
    }

    /// Number of simulation runs the spec expands to.
    pub fn run_count(&self) -> usize {
        self.seeds.len() * self.protocols.len() * self.sweep.as_ref().map_or(1, |s| s.values.len())
    }

    fn apply(&mut self, key: &str, value: &str, origin: Origin<'_>) -> Result<()> {
        let fail = |message: String| match origin {
            Origin::Line(line) => CliError::parse(line, message),
            Origin::Env(var) => CliError::Env { var: var.to_string(), message },
        };
        let key = resolve_key(key).map_err(fail)?;
        match key {
            "experiment.seeds" => self.seeds = parse_seeds(value).map_err(|m| fail(format!("{key}: {m}")))?,
            "experiment.protocols" => {
                self.protocols = parse_protocols(value).map_err(|m| fail(format!("{key}: {m}")))?
            }
            "experiment.sweep" => {
                let target = resolve_key(value).map_err(|m| fail(format!("{key}: {m}")))?;
                if target.starts_with("experiment.") {
                    return Err(fail(format!("{key}: cannot sweep '{target}'")));
                }
                let values = self.sweep.take().map(|s| s.values).unwrap_or_default();
                self.sweep = Some(Sweep { key: target.to_string(), values });
            }
            "experiment.sweep_values" => {
                let values = split_list(value);
                match &mut self.sweep {
                    Some(s) => s.values = values,
                    None => self.sweep = Some(Sweep { key: String::new(), values }),
                }
            }
            "experiment.output" => self.output = PathBuf::from(value.trim()),
            _ => {
                self.base.set(key, value).map_err(|e| fail(e.to_string()))?;
                if key == "sim.seed" {
                    self.seeds = vec![self.base.seed];
                }
            }
        }
        Ok(())
    }
}

fn all_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().chain(EXPERIMENT_KEYS).copied()
}

/// Maps a full or bare key onto its canonical dotted name.
fn resolve_key(key: &str) -> std::result::Result<&'static str, String> {
    let key = key.trim();
    if let Some(k) = all_keys().find(|k| *k == key) {
        return Ok(k);
    }
    let matches: Vec<&str> = all_keys().filter(|k| k.rsplit('.').next() == Some(key)).collect();
    match matches.as_slice() {
        [only] => Ok(only),
        [] => Err(format!("unknown key '{key}'")),
        many => Err(format!("ambiguous key '{key}', use one of {}", many.join(", "))),
    }
}

fn split_list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_seeds(value: &str) -> std::result::Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for item in split_list(value) {
        let parse = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad seed '{s}'"));
        match item.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(format!("empty seed range '{item}'"));
                }
                seeds.extend(lo..=hi);
            }
            None => seeds.push(parse(&item)?),
        }
    }
    Ok(seeds)
}

fn parse_protocols(value: &str) -> std::result::Result<Vec<Protocol>, String> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(Protocol::ALL.to_vec());
    }
    let mut out: Vec<Protocol> = Vec::new();
    for item in split_list(value) {
        let p: Protocol = item.parse().map_err(|e: ebcnf_core::Error| e.to_string())?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Environment variable name that overrides `key`.
pub fn env_var_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "__").to_ascii_uppercase())
}

/// Parses configuration text, then applies `env` overrides, then validates.
pub fn parse_spec<I, K, V>(text: &str, env: I) -> Result<ExperimentSpec>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut spec = ExperimentSpec::default();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::parse(line, format!("expected 'key = value', found '{content}'")));
        };
        spec.apply(key, value.trim(), Origin::Line(line))?;
    }
    let mut overrides: Vec<(String, String)> = env
        .into_iter()
        .filter_map(|(k, v)| {
            let k = k.as_ref();
            k.strip_prefix(ENV_PREFIX).map(|_| (k.to_string(), v.as_ref().to_string()))
        })
        .collect();
    overrides.sort();
    for (var, value) in &overrides {
        let key = var[ENV_PREFIX.len()..].to_ascii_lowercase().replace("__", ".");
        spec.apply(&key, value, Origin::Env(var))?;
    }
    if let Some(sweep) = &spec.sweep {
        if sweep.key.is_empty() {
            return Err(CliError::Invalid(vec!["experiment.sweep_values given without experiment.sweep".into()]));
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Reads and validates a configuration file, with process environment
/// overrides.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_spec(&text, std::env::vars()).map_err(|e| e.in_file(path))
}
