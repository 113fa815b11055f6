use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tabvae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabvae"))
        .args(args)
        .current_dir(dir)
        .env_remove("TABVAE_OUT_DIR")
        .output()
        .expect("spawn tabvae")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn synth(dir: &Path, rows: usize) {
    ok(&tabvae(dir, &["synth", "--rows", &rows.to_string(), "--seed", "5", "--out", "data.csv"]));
}

const FAST: [&str; 8] = ["--vae-epochs", "5", "--dnn-epochs", "5", "--input", "data.csv", "--schema", "data.schema.json"];

#[test]
fn synth_is_byte_identical_per_seed() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), 120);
    let first = read(tmp.path().join("data.csv"));
    synth(tmp.path(), 120);
    assert_eq!(read(tmp.path().join("data.csv")), first);
    assert_eq!(first.lines().count(), 121);
    assert_eq!(first.lines().next().unwrap(), "x1,x2,x3,x4,gas,metal,y");
    assert!(read(tmp.path().join("data.schema.json")).contains("\"categorical\""));
}

#[test]
fn default_protocol_writes_105_runs_and_is_repeatable() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), 60);
    let mut args = vec!["experiment", "--out-dir", "a"];
    args.extend(FAST);
    ok(&tabvae(tmp.path(), &args));
    args[2] = "b";
    ok(&tabvae(tmp.path(), &args));

    let metrics = read(tmp.path().join("a/metrics.csv"));
    assert_eq!(metrics.lines().next().unwrap(), "method,scale,repeat,seed,mae,pearson_r");
    assert_eq!(metrics.lines().count(), 106);
    assert_eq!(metrics.lines().filter(|l| l.starts_with("pure,")).count(), 5);
    for name in ["metrics.csv", "aggregate.csv", "summary.txt", "projection.csv", "projection.svg"] {
        assert_eq!(read(tmp.path().join("a").join(name)), read(tmp.path().join("b").join(name)), "{name}");
    }
    let aggregate = read(tmp.path().join("a/aggregate.csv"));
    assert_eq!(
        aggregate.lines().next().unwrap(),
        "method,scale,mae_mean,mae_min,mae_max,pearson_mean,improvement_pct"
    );
    assert_eq!(aggregate.lines().count(), 22);
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), 40);
    let cfg = r#"{"input": "data.csv", "schema": "data.schema.json", "scales": [2], "repeats": 1,
                  "methods": ["noise"], "vae": {"epochs": 3}, "dnn": {"epochs": 3}}"#;
    std::fs::write(tmp.path().join("run.json"), cfg).unwrap();
    ok(&tabvae(
        tmp.path(),
        &["experiment", "--config", "run.json", "--out-dir", "out", "--noise-labels", "knn", "--seed", "9"],
    ));
    let metrics = read(tmp.path().join("out/metrics.csv"));
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("noise,2,0,"));
    let written = read(tmp.path().join("out/config.json"));
    assert!(written.contains("\"noise_labels\": \"knn\""));
    assert!(written.contains("\"seed\": 9"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tabvae"))
        .args(["synth", "--rows", "20"])
        .current_dir(tmp.path())
        .env("TABVAE_OUT_DIR", "from-env")
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("from-env/synthetic.csv").is_file());
    assert!(tmp.path().join("from-env/synthetic.schema.json").is_file());
}

#[test]
fn missing_schema_exits_with_code_2() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), 30);
    let out = tabvae(tmp.path(), &["experiment", "--input", "data.csv", "--schema", "missing.schema.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.schema.json"));

    let out = tabvae(tmp.path(), &["augment", "--input", "absent.csv", "--schema", "data.schema.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn bad_config_is_a_plain_failure() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), 30);
    std::fs::write(tmp.path().join("run.json"), r#"{"repeats": 0}"#).unwrap();
    let mut args = vec!["experiment", "--config", "run.json"];
    args.extend(FAST);
    let out = tabvae(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repeats"));
}

#[test]
fn augment_writes_real_plus_scaled_rows() {
    let tmp = TempDir::new().unwrap();
    // 60 rows give 40 training rows
    synth(tmp.path(), 60);
    let mut args = vec!["augment", "--scale", "3", "--out", "pool.csv"];
    args.extend(FAST);
    ok(&tabvae(tmp.path(), &args));
    let pool = read(tmp.path().join("pool.csv"));
    let mut lines = pool.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "origin");
    assert_eq!(*header.last().unwrap(), "label");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 160);
    assert_eq!(rows.iter().filter(|r| r[0] == "real").count(), 40);
    assert!(rows.iter().all(|r| r[0] == "real" || r[0] == "vae"));
    assert!(rows.iter().all(|r| r.last().unwrap().parse::<f64>().unwrap().is_finite()));

    ok(&tabvae(tmp.path(), &["project", "--pool", "pool.csv", "--out-dir", "proj"]));
    let proj = read(tmp.path().join("proj/projection.csv"));
    assert_eq!(proj.lines().next().unwrap(), "x,y,origin");
    assert_eq!(proj.lines().count(), 161);
    assert!(read(tmp.path().join("proj/projection.svg")).starts_with("<svg"));
}
