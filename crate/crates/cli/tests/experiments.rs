use std::fs;
use std::path::{Path, PathBuf};

use ebcnf_cli::experiment::{median, summary_from_rounds, SUMMARY_FILE};
use ebcnf_cli::{parse_spec, run_experiment, ExperimentSpec, ROUND_COLUMNS, SUMMARY_COLUMNS};
use ebcnf_core::SimConfig;

const NO_ENV: [(&str, &str); 0] = [];

fn small_spec(extra: &str, out: &Path) -> ExperimentSpec {
    let text = format!("sim.node_count = 20\nsim.rounds = 60\nexperiment.output = {}\n{extra}", out.display());
    parse_spec(&text, NO_ENV).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn single_run_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec("experiment.protocols = ebacc", dir.path());
    let out = run_experiment(&spec).unwrap();
    assert_eq!(out.rounds.len(), 1);
    assert_eq!(files(dir.path()).len(), 2);
    let text = fs::read_to_string(&out.rounds[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), ROUND_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 61);
    assert!(text.ends_with('\n'));
    let summary = fs::read_to_string(&out.summary).unwrap();
    assert_eq!(summary.lines().next().unwrap(), SUMMARY_COLUMNS.join(","));
}

#[test]
fn full_grid_file_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_spec(
        &format!(
            "sim.node_count = 5\nsim.rounds = 5\nexperiment.seeds = 1-10\n\
             experiment.sweep = sim.packet_interval\nexperiment.sweep_values = 0.02, 0.04, 0.06, 0.08, 0.1\n\
             experiment.output = {}",
            dir.path().display()
        ),
        NO_ENV,
    )
    .unwrap();
    let out = run_experiment(&spec).unwrap();
    assert_eq!(out.rounds.len(), 200);
    assert_eq!(files(dir.path()).len(), 201);
    let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    // Header, 200 seed rows and 20 median rows.
    assert_eq!(summary.lines().count(), 1 + 200 + 20);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = "experiment.seeds = 1,2\nexperiment.protocols = leach, ps-ebcnf";
    run_experiment(&small_spec(extra, a.path())).unwrap();
    run_experiment(&small_spec(extra, b.path())).unwrap();
    let fa = files(a.path());
    let fb = files(b.path());
    assert_eq!(fa.len(), 5);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

fn parse_field(s: &str) -> Option<f64> {
    (!s.is_empty()).then(|| s.parse().unwrap())
}

#[test]
fn summary_round_trips_from_per_round_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_spec(
        &format!(
            "sim.node_count = 15\nsim.rounds = 150\nenergy.initial = 2e-6\nexperiment.seeds = 1-5\n\
             experiment.output = {}",
            dir.path().display()
        ),
        NO_ENV,
    )
    .unwrap();
    let out = run_experiment(&spec).unwrap();
    let mut reader = csv::Reader::from_path(&out.summary).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let mut checked = 0;
    for protocol in &spec.protocols {
        let name = protocol.to_string();
        let mut recomputed = Vec::new();
        for seed in &spec.seeds {
            let config = SimConfig { protocol: *protocol, seed: *seed, ..spec.base.clone() };
            let path = dir.path().join(format!("{name}_seed{seed}.csv"));
            let s = summary_from_rounds(&path, &config).unwrap();
            let row = rows.iter().find(|r| &r[0] == name.as_str() && r[3] == seed.to_string()).unwrap();
            assert_eq!(parse_field(&row[5]), s.lifetime.map(|x| x as f64));
            assert_eq!(row[6].parse::<usize>().unwrap(), s.survivors);
            assert_eq!(parse_field(&row[7]), s.success_rate);
            assert_eq!(row[8].parse::<f64>().unwrap(), s.throughput);
            assert_eq!(parse_field(&row[9]), s.overhead_ratio);
            recomputed.push(s);
        }
        let m = rows.iter().find(|r| &r[0] == name.as_str() && &r[3] == "median").unwrap();
        let survivors: Vec<f64> = recomputed.iter().map(|s| s.survivors as f64).collect();
        let success: Vec<f64> = recomputed.iter().filter_map(|s| s.success_rate).collect();
        let throughput: Vec<f64> = recomputed.iter().map(|s| s.throughput).collect();
        let overhead: Vec<f64> = recomputed.iter().filter_map(|s| s.overhead_ratio).collect();
        assert_eq!(parse_field(&m[6]), median(&survivors));
        assert_eq!(parse_field(&m[7]), median(&success));
        assert_eq!(parse_field(&m[8]), median(&throughput));
        assert_eq!(parse_field(&m[9]), median(&overhead));
        let mut lifetimes: Vec<f64> = recomputed.iter().filter_map(|s| s.lifetime.map(|x| x as f64)).collect();
        if lifetimes.len() == recomputed.len() {
            lifetimes.sort_by(f64::total_cmp);
            assert_eq!(parse_field(&m[5]), median(&lifetimes));
            checked += 1;
        }
    }
    // The short-lived batteries make every baseline run lose a node.
    assert!(checked >= 2);
}

#[test]
fn invalid_spec_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small_spec("", &dir.path().join("never"));
    spec.seeds.clear();
    assert!(run_experiment(&spec).is_err());
    assert!(!dir.path().join("never").exists());
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for path in files(&root) {
        if path.extension().is_some_and(|e| e == "conf") {
            let text = fs::read_to_string(&path).unwrap();
            parse_spec(&text, NO_ENV).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 1);
    let example = parse_spec(&fs::read_to_string(root.join("example.conf")).unwrap(), NO_ENV).unwrap();
    assert_eq!(example.base, SimConfig::default());
}
