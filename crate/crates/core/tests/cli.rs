use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lsfts::io::read_series;

fn lsfts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsfts"))
        .args(args)
        .env("LSFTS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate_to(dir: &Path, name: &str, t: usize, n: usize, seed: u64) -> std::path::PathBuf {
    let out = dir.join(name);
    let status = lsfts(&[
        "simulate",
        "--T",
        &t.to_string(),
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&out),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    out
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_to(dir.path(), "a.csv", 100, 51, 7);
    let b = simulate_to(dir.path(), "b.csv", 100, 51, 7);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let series = read_series(&a).unwrap();
    assert_eq!((series.len(), series.grid().len()), (100, 51));

    let c = simulate_to(dir.path(), "c.csv", 100, 51, 8);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn simulate_reads_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    fs::write(
        &cfg,
        r#"{"components": [{"a": {"kind": "constant", "value": 0.0}, "sigma": {"kind": "constant", "value": 0.0}}],
            "mean": [{"basis": 1, "coefficient": {"kind": "constant", "value": 2.5}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("x.csv");
    let o = lsfts(&["simulate", "--config", path_str(&cfg), "--T", "5", "--n", "3", "--out", path_str(&out)]);
    assert!(o.status.success());
    let x = read_series(&out).unwrap();
    assert!(x.values().iter().all(|&v| v == 2.5));

    fs::write(&cfg, "{ not json").unwrap();
    let o = lsfts(&["simulate", "--config", path_str(&cfg), "--T", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fpca_writes_q_eigenpairs() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_to(dir.path(), "x.csv", 300, 21, 3);
    let prefix = dir.path().join("pc");
    let o = lsfts(&["fpca", "--input", path_str(&input), "--u", "0.5", "--h", "0.1", "--q", "3", "--out", path_str(&prefix)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let values = fs::read_to_string(format!("{}_eigenvalues.csv", prefix.display())).unwrap();
    let functions = fs::read_to_string(format!("{}_eigenfunctions.csv", prefix.display())).unwrap();
    assert_eq!(values.lines().count(), 4);
    assert_eq!(values.lines().next().unwrap(), "j,eigenvalue");
    assert_eq!(functions.lines().count(), 22);
    assert_eq!(functions.lines().next().unwrap(), "s,v1,v2,v3");
    // 17 significant digits
    let cell = values.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn estimate_mean_longrun_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_to(dir.path(), "x.csv", 400, 11, 4);

    let o = lsfts(&["estimate-mean", "--input", path_str(&input), "--u", "0.25,0.5,0.75", "--weights", "normalized"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("u,"));

    let o = lsfts(&["longrun", "--input", path_str(&input), "--u", "0.5", "--k2", "parzen"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 12);

    let out = dir.path().join("pred.csv");
    let o = lsfts(&["predict", "--input", path_str(&input), "--t1", "300", "--k", "2", "--q", "2", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pred = read_series(&out);
    // one forecast curve is not a valid series (T >= 2), so read the raw rows
    assert!(pred.is_err());
    let rows = fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().count(), 2);
}

#[test]
fn two_sample_json() {
    let dir = tempfile::tempdir().unwrap();
    let x = simulate_to(dir.path(), "x.csv", 500, 15, 5);
    let y = simulate_to(dir.path(), "y.csv", 400, 15, 6);
    let o = lsfts(&["two-sample", "--x", path_str(&x), "--y", path_str(&y), "--u", "0.5", "--q", "2", "--mc-draws", "2000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["statistic_U", "statistic_Ubar", "statistic_Utilde", "p_value", "q_used", "theta_hat"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["q_used"], 2);
    assert!((v["theta_hat"].as_f64().unwrap() - 5.0 / 9.0).abs() < 1e-15);
    let p = v["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn bench_reproduces_a_manifest_table() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    fs::write(
        &manifest,
        r#"{"version": 1, "experiments": [{
            "experiment": "eigen-rate",
            "model": {"components": [{"a": {"kind": "constant", "value": 0.3}, "sigma": {"kind": "constant", "value": 1.0}}], "seed": 9},
            "u": 0.5, "t_ladder": [100, 200, 400], "replicates": 8, "grid_points": 9, "h": "estimation"}]}"#,
    )
    .unwrap();
    let run = || lsfts(&["bench", "--experiment", "eigen-rate", "--manifest", path_str(&manifest)]);
    let a = run();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run();
    assert_eq!(a.stdout, b.stdout);
    let table = String::from_utf8(a.stdout).unwrap();
    assert_eq!(table.lines().next().unwrap(), "experiment,T,h,median_abs_error,mean_abs_error");
    assert_eq!(table.lines().count(), 4);

    let o = lsfts(&["bench", "--experiment", "no-such", "--manifest", path_str(&manifest)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "0,0.5,1\n1,2,3\n1,2\n").unwrap();
    let o = lsfts(&["fpca", "--input", path_str(&ragged), "--u", "0.5", "--q", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    assert_eq!(lsfts(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lsfts(&["simulate"]).status.code(), Some(1));

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_lsfts"))
        .args(["simulate", "--T", "10", "--n", "3"])
        .env("LSFTS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));
}
