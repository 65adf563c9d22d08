//! Expands a spec into runs, executes them in parallel and writes CSVs.

use std::fs;
use std::path::{Path, PathBuf};

use ebcnf_core::{run_simulation, Protocol, RoundMetrics, SimConfig, Summary};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::spec::ExperimentSpec;

/// Column order of every per-round file.
pub const ROUND_COLUMNS: [&str; 8] = [
    "round",
    "dead_count",
    "avg_residual_fraction",
    "packets_generated",
    "packets_delivered",
    "delivered_bits",
    "control_bytes",
    "total_bytes",
];

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "protocol",
    "sweep_key",
    "sweep_value",
    "seed",
    "runs",
    "lifetime",
    "survivors",
    "success_rate",
    "throughput",
    "overhead_ratio",
];

pub const SUMMARY_FILE: &str = "summary.csv";

/// One point of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub protocol: Protocol,
    pub seed: u64,
    pub sweep_value: Option<String>,
}

impl RunKey {
    pub fn file_name(&self, sweep_key: Option<&str>) -> String {
        let mut name = format!("{}_seed{}", self.protocol, self.seed);
        if let (Some(key), Some(value)) = (sweep_key, &self.sweep_value) {
            name.push_str(&format!("_{key}={value}"));
        }
        name.push_str(".csv");
        name
    }
}

/// Grid in output order: sweep value, then protocol, then seed.
pub fn expand(spec: &ExperimentSpec) -> Vec<RunKey> {
    let values: Vec<Option<String>> = match &spec.sweep {
        Some(s) => s.values.iter().cloned().map(Some).collect(),
        None => vec![None],
    };
    let mut keys = Vec::with_capacity(spec.run_count());
    for value in &values {
        for &protocol in &spec.protocols {
            for &seed in &spec.seeds {
                keys.push(RunKey { protocol, seed, sweep_value: value.clone() });
            }
        }
    }
    keys
}

/// Configuration of one grid point.
pub fn run_config(spec: &ExperimentSpec, key: &RunKey) -> Result<SimConfig> {
    let mut config = SimConfig { protocol: key.protocol, seed: key.seed, ..spec.base.clone() };
    if let (Some(sweep), Some(value)) = (&spec.sweep, &key.sweep_value) {
        config.set(&sweep.key, value).map_err(|source| CliError::Simulation { context: sweep.key.clone(), source })?;
    }
    Ok(config)
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rounds: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Runs every grid point and writes one per-round CSV each plus the
/// summary. Fails if any run fails; successful runs are still written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    fs::create_dir_all(&spec.output).map_err(|source| CliError::Io { path: spec.output.clone(), source })?;
    let sweep_key = spec.sweep.as_ref().map(|s| s.key.as_str());
    let keys = expand(spec);
    let results: Vec<Result<(PathBuf, Summary)>> = keys
        .par_iter()
        .map(|key| {
            let config = run_config(spec, key)?;
            let trace = run_simulation(&config).map_err(|source| CliError::Simulation {
                context: format!("{} seed {}", key.protocol, key.seed),
                source,
            })?;
            let path = spec.output.join(key.file_name(sweep_key));
            write_rounds(&path, &trace.rounds)?;
            Ok((path, Summary::from_trace(&trace)))
        })
        .collect();

    let mut rounds = Vec::with_capacity(results.len());
    let mut rows = Vec::with_capacity(results.len());
    let mut first_error = None;
    for (key, result) in keys.iter().zip(results) {
        match result {
            Ok((path, summary)) => {
                rounds.push(path);
                rows.push((key.clone(), summary));
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let summary = spec.output.join(SUMMARY_FILE);
    write_summary(&summary, sweep_key, &rows)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(ExperimentOutput { rounds, summary }),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| CliError::Csv { path: path.to_path_buf(), source })
}

pub fn write_rounds(path: &Path, rounds: &[RoundMetrics]) -> Result<()> {
    let wrap = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record(ROUND_COLUMNS).map_err(wrap)?;
    for m in rounds {
        w.write_record([
            m.round.to_string(),
            m.dead_count.to_string(),
            m.avg_residual_fraction.to_string(),
            m.packets_generated.to_string(),
            m.packets_delivered.to_string(),
            m.delivered_bits.to_string(),
            m.control_bytes.to_string(),
            m.total_bytes.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Median lifetime. A run that never lost a node ranks above every finite
/// value; the result is `None` when the middle lands on such a run.
fn median_lifetime(values: &[Option<u64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by_key(|x| x.unwrap_or(u64::MAX));
    let n = v.len();
    let mid = |i: usize| v[i].map(|x| x as f64);
    if n % 2 == 1 {
        mid(n / 2)
    } else {
        Some(0.5 * (mid(n / 2 - 1)? + mid(n / 2)?))
    }
}

/// Median of a sample.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_summary(path: &Path, sweep_key: Option<&str>, rows: &[(RunKey, Summary)]) -> Result<()> {
    let wrap = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_COLUMNS).map_err(wrap)?;
    let key_col = sweep_key.unwrap_or("").to_string();
    for (key, s) in rows {
        w.write_record([
            key.protocol.to_string(),
            key_col.clone(),
            key.sweep_value.clone().unwrap_or_default(),
            key.seed.to_string(),
            "1".into(),
            opt(s.lifetime),
            s.survivors.to_string(),
            opt(s.success_rate),
            s.throughput.to_string(),
            opt(s.overhead_ratio),
        ])
        .map_err(wrap)?;
    }
    // Median rows, one per (sweep value, protocol) group in first-seen order.
    let mut groups: Vec<(&RunKey, Vec<&Summary>)> = Vec::new();
    for (key, s) in rows {
        match groups.iter_mut().find(|(k, _)| k.protocol == key.protocol && k.sweep_value == key.sweep_value) {
            Some((_, members)) => members.push(s),
            None => groups.push((key, vec![s])),
        }
    }
    for (key, members) in groups {
        let floats = |f: &dyn Fn(&Summary) -> Option<f64>| {
            let v: Vec<f64> = members.iter().filter_map(|s| f(s)).collect();
            median(&v)
        };
        let lifetimes: Vec<Option<u64>> = members.iter().map(|s| s.lifetime).collect();
        w.write_record([
            key.protocol.to_string(),
            key_col.clone(),
            key.sweep_value.clone().unwrap_or_default(),
            "median".into(),
            members.len().to_string(),
            opt(median_lifetime(&lifetimes)),
            opt(floats(&|s| Some(s.survivors as f64))),
            opt(floats(&|s| s.success_rate)),
            opt(floats(&|s| Some(s.throughput))),
            opt(floats(&|s| s.overhead_ratio)),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Summary of one run recomputed from its per-round CSV alone.
pub fn summary_from_rounds(path: &Path, config: &SimConfig) -> Result<Summary> {
    let wrap = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(path).map_err(wrap)?;
    let header: Vec<String> = reader.headers().map_err(wrap)?.iter().map(String::from).collect();
    if header != ROUND_COLUMNS {
        return Err(CliError::Usage(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut rounds = Vec::new();
    for record in reader.records() {
        let r = record.map_err(wrap)?;
        let field = |i: usize| -> Result<&str> {
            r.get(i).ok_or_else(|| CliError::Usage(format!("{}: short row", path.display())))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)?.parse().map_err(|_| CliError::Usage(format!("{}: bad integer in column {i}", path.display())))
        };
        rounds.push(RoundMetrics {
            round: int(0)?,
            dead_count: int(1)? as usize,
            avg_residual_fraction: field(2)?
                .parse()
                .map_err(|_| CliError::Usage(format!("{}: bad float", path.display())))?,
            packets_generated: int(3)?,
            packets_delivered: int(4)?,
            delivered_bits: int(5)?,
            control_bytes: int(6)?,
            total_bytes: int(7)?,
            heads: 0,
        });
    }
    let horizon = config.horizon(config.rounds.max(rounds.len() as u64));
    Ok(Summary {
        lifetime: ebcnf_core::metrics::network_lifetime(&rounds),
        survivors: rounds.last().map_or(config.node_count, |m| config.node_count - m.dead_count),
        success_rate: ebcnf_core::metrics::transmission_success_rate(&rounds),
        throughput: ebcnf_core::metrics::average_throughput(&rounds, horizon),
        overhead_ratio: ebcnf_core::metrics::control_overhead_ratio(&rounds),
    })
}
