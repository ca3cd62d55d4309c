use std::fs;
use std::path::Path;

use datapricing::ResolvedConfig;
use tempfile::TempDir;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["datapricing", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    datapricing::run(argv)
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(&ResolvedConfig::baseline().canonical_json()).unwrap();
    edit(&mut v);
    let path = dir.join("config.json");
    fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn validate_baseline_succeeds() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    assert_eq!(run(&out, &["validate"]), 0);
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("validation.json"))).unwrap();
    assert_eq!(report["passed"], true);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "validate");
    assert_eq!(manifest["config_hash"], ResolvedConfig::baseline().hash());
}

#[test]
fn concavity_violation_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), |v| v["kappa"] = 0.1.into());
    let out = tmp.path().join("o");
    assert_eq!(run(&out, &["--config", &cfg, "solve"]), 1);
    assert!(!out.join("riccati.csv").exists());
    assert_eq!(run(&out, &["--config", &cfg, "validate"]), 1);
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("validation.json"))).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn usage_and_config_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&out, &["frobnicate"]), 64);
    assert_eq!(run(&out, &["--paths", "lots", "simulate"]), 64);
    let missing = tmp.path().join("absent.json");
    assert_eq!(run(&out, &["--config", missing.to_str().unwrap(), "solve"]), 66);
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"alpha\": 0.1}").unwrap();
    assert_eq!(run(&out, &["--config", bad.to_str().unwrap(), "solve"]), 66);
    assert_eq!(run(&out, &["--paths", "0", "simulate"]), 1);
}

#[test]
fn solve_writes_tables() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(run(&out, &["--steps", "50", "solve"]), 0);
    let table = read(&out.join("riccati.csv"));
    let mut lines = table.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,xi,vartheta,phi,f_11"));
    assert!(header.ends_with("det_f,det_g"));
    assert_eq!(lines.count(), 51);
    let solv: serde_json::Value = serde_json::from_str(&read(&out.join("solvability.json"))).unwrap();
    assert!(solv["min_det_f"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "--steps",
        "100",
        "--paths",
        "6",
        "--seed",
        "9",
        "simulate",
        "--population",
        "--sellers",
        "2",
    ];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&a, &args), 0);
    assert_eq!(run(&b, &args), 0);
    for name in [
        "means.csv",
        "summary.csv",
        "mean_path_seed9_path0005.csv",
        "population_seed9_path0000.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let c = tmp.path().join("c");
    assert_eq!(
        run(&c, &["--steps", "100", "--paths", "6", "--seed", "10", "simulate"]),
        0
    );
    assert_ne!(read(&a.join("summary.csv")), read(&c.join("summary.csv")));
}

#[test]
fn singleton_sweep_matches_simulate() {
    let tmp = TempDir::new().unwrap();
    let common = ["--steps", "100", "--paths", "5"];
    let sim = tmp.path().join("sim");
    let sweep = tmp.path().join("sweep");
    let mut args = common.to_vec();
    args.push("simulate");
    assert_eq!(run(&sim, &args), 0);
    let mut args = common.to_vec();
    args.extend_from_slice(&["sweep", "--param", "rho", "--values", "0.25"]);
    assert_eq!(run(&sweep, &args), 0);
    let summary = read(&sim.join("summary.csv"));
    let sim_row = summary.lines().nth(1).unwrap();
    let sweep_summary = read(&sweep.join("sweep_summary.csv"));
    let sweep_row = sweep_summary.lines().nth(1).unwrap();
    let rest = sweep_row.splitn(3, ',').nth(2).unwrap();
    assert_eq!(rest, sim_row);
    assert_eq!(read(&sim.join("means.csv")), read(&sweep.join("sweep_rho_0_means.csv")));
}

#[test]
fn sweep_rejects_invalid_point() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let args = [
        "--steps", "50", "--paths", "2", "sweep", "--param", "rho", "--values", "0.25,0.2",
    ];
    assert_eq!(run(&out, &args), 1);
    assert!(!out.join("sweep_summary.csv").exists());
    let args = [
        "--steps", "50", "--paths", "2", "sweep", "--param", "gamma", "--values", "1",
    ];
    assert_eq!(run(&out, &args), 64);
}

#[test]
fn verify_subcommands_write_reports() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let args = [
        "--steps",
        "100",
        "--paths",
        "8",
        "verify",
        "consistency",
        "--n-values",
        "4,8,16",
    ];
    assert_eq!(run(&out, &args), 0);
    let r: serde_json::Value = serde_json::from_str(&read(&out.join("consistency.json"))).unwrap();
    assert_eq!(r["n_values"].as_array().unwrap().len(), 3);

    let out = tmp.path().join("n");
    let args = [
        "--steps",
        "100",
        "--paths",
        "8",
        "verify",
        "nash",
        "--n-values",
        "4,8,16",
    ];
    assert_eq!(run(&out, &args), 0);
    assert!(out.join("nash_cells.csv").exists());

    let out = tmp.path().join("s");
    let args = [
        "--steps",
        "100",
        "--paths",
        "8",
        "verify",
        "stationarity",
        "--role",
        "broker",
        "--directions",
        "1",
    ];
    assert_eq!(run(&out, &args), 0);
    let r: serde_json::Value = serde_json::from_str(&read(&out.join("stationarity.json"))).unwrap();
    assert_eq!(r["reports"].as_array().unwrap().len(), 1);

    let args = ["verify", "consistency", "--n-values", "30,10,100"];
    assert_ne!(run(&out, &args), 0);
}
