use std::path::{Path, PathBuf};

use cdwhitney::cli::{config_hash, main_with, AlgebraConfig};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/jets").join(name).display().to_string()
}

fn run(dir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["cdwhitney".to_string(), "--out".into(), dir.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    main_with(full)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn meta<'a>(csv: &'a str, key: &str) -> &'a str {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key}=")))
        .unwrap_or_else(|| panic!("no {key} line"))
}

#[test]
fn csv_has_header_and_metadata_block() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["--r", "2", "algebra", "--trials", "50"]), 0);
    let csv = read(dir.path(), "algebra.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "identity,level,trials,worst,tolerance,expected,pass");
    let body: Vec<&str> = csv.lines().skip(1).take_while(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 8);
    assert!(csv.lines().skip(1 + body.len()).all(|l| l.starts_with('#')));
    assert_eq!(meta(&csv, "command"), "algebra");
    let cfg = AlgebraConfig { r: 2, trials: 50, seed: 0 };
    assert_eq!(meta(&csv, "config_sha256"), config_hash(&cfg));
    assert_eq!(meta(&csv, "cdwhitney"), env!("CARGO_PKG_VERSION"));
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: PathBuf = dir.path().join("run.toml");
    std::fs::write(&cfg, "r = 1\nseed = 9\n[algebra]\ntrials = 40\n[project]\ntrials = 7\n").unwrap();
    let out = dir.path().join("a");
    assert_eq!(run(&out, &["--config", cfg.to_str().unwrap(), "algebra"]), 0);
    let csv = read(&out, "algebra.csv");
    assert_eq!(meta(&csv, "config"), r#"{"r":1,"trials":40,"seed":9}"#);
    let out = dir.path().join("b");
    assert_eq!(run(&out, &["--config", cfg.to_str().unwrap(), "--seed", "2", "algebra", "--trials", "30"]), 0);
    assert_eq!(meta(&read(&out, "algebra.csv"), "config"), r#"{"r":1,"trials":30,"seed":2}"#);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["check-jet", &data("poly.json")]), 0);
    assert_eq!(run(dir.path(), &["check-jet", &data("abs.json")]), 1);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "check_jet.json")).unwrap();
    assert_eq!(report["result"]["passed"], false);
    assert_eq!(run(dir.path(), &["check-jet", "/nonexistent.json"]), 2);
    assert_eq!(run(dir.path(), &["--r", "9", "algebra"]), 2);
    assert_eq!(run(dir.path(), &["no-such-command"]), 2);
    assert_eq!(run(dir.path(), &["mollify", "--fn", "nope"]), 2);
}

#[test]
fn numbers_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["mollify", "--kappas", "2,4", "--grid", "2", "--nodes", "6"]), 0);
    let csv = read(dir.path(), "mollify.csv");
    let row = csv.lines().nth(1).unwrap();
    let err: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(format!("{err:?}"), row.split(',').nth(2).unwrap());
}

#[test]
fn extend_writes_rings_samples_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        &["extend", "--points", "5", "--stages", "2", "--ring-points", "2", "--samples", "8"],
    );
    assert_eq!(code, 0);
    let samples = read(dir.path(), "extend_samples.csv");
    assert!(samples.lines().nth(1).unwrap().contains("OnSet"));
    let diag: serde_json::Value = serde_json::from_str(&read(dir.path(), "extend_diagnostics.json")).unwrap();
    assert_eq!(diag["meta"]["command"], "extend");
    assert!(diag["result"]["partition_defect"].as_f64().unwrap() < 1e-10);
}
