use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paqreg::chem::{read_fingerprints, write_fingerprints_to, Fingerprint, FingerprintSet};
use paqreg::ingest::read_dataset;
use paqreg::models::Checkpoint;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_paqreg"));
    c.env_remove("PAQREG_SEED");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn paqreg")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "paqreg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SIX_RECORDS: &str = "\
id,smiles,group_key,pa,f1,f2
a,CCO,g1,190.5,1.0,2.0
b,CC[Fe]C,g2,200.0,2.0,3.0
c,C[C@H](N)O,g3,210.0,3.0,4.0
d,C[C@@H](N)O,g3,210.4,5.0,6.0
e,c1ccccc1N,g4,215.0,4.0,1.0
f,CN(C)C,g5,225.0,0.5,0.5
";

#[test]
fn params_reproduces_known_count() {
    let d = TempDir::new().unwrap();
    let o = ok(d.path(), &["params", "--qubits", "8", "--sub-encoders", "4", "--params-per-qc", "60"]);
    assert_eq!(stdout(&o).trim(), "913");
    assert!(stderr(&o).contains("params config:"));
}

#[test]
fn gradcheck_passes_and_reports() {
    let d = TempDir::new().unwrap();
    let o = ok(d.path(), &["gradcheck", "--qubits", "4", "--params", "12", "--seed", "7", "--out", "g.json"]);
    assert!(stdout(&o).contains("max deviation"));
    let v = json(d.path().join("g.json"));
    assert!(v["result"]["max_deviation"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["result"]["passed"], Value::Bool(true));
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn gradcheck_failure_is_a_numeric_exit() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("c.json"), r#"{"fd_tolerance": 1e-30}"#).unwrap();
    let o = run(d.path(), &["gradcheck", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn curate_six_record_fixture() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("in.csv"), SIX_RECORDS).unwrap();
    ok(d.path(), &["curate", "--input", "in.csv", "--out", "out.csv", "--report", "r.json"]);
    let data = read_dataset(d.path().join("out.csv")).unwrap();
    let ids: Vec<&str> = data.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["a", "c", "e", "f"]);
    assert!((data.records[1].pa - 210.2).abs() < 1e-12);
    // merged rows carry the mean feature row
    assert_eq!(data.features.values().row(1).to_vec(), vec![4.0, 5.0]);
    let r = json(d.path().join("r.json"));
    assert_eq!(r["report"]["counts"]["removed_elements"], 1);
    assert_eq!(r["report"]["counts"]["merged_groups"], 1);
    assert_eq!(r["config"]["input"], "in.csv");
}

#[test]
fn curate_empty_input_warns_and_succeeds() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("in.csv"), "").unwrap();
    let o = ok(d.path(), &["curate", "--input", "in.csv", "--out", "out.csv"]);
    assert!(stderr(&o).contains("warning"));
    let data = read_dataset(d.path().join("out.csv")).unwrap();
    assert!(data.is_empty());
}

#[test]
fn curate_malformed_header_exits_2_with_line() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("in.csv"), "id,smiles,pa\na,CCO,200\n").unwrap();
    let o = run(d.path(), &["curate", "--input", "in.csv", "--out", "out.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn missing_input_file_exits_2() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["curate", "--input", "nope.csv", "--out", "out.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_fps(path: &Path, width: usize, bits: &[&[usize]]) {
    let set = FingerprintSet {
        width,
        ids: (0..bits.len()).map(|i| format!("m{i}")).collect(),
        fingerprints: bits
            .iter()
            .map(|b| Fingerprint::from_bits(width, b.iter().copied()).unwrap())
            .collect(),
    };
    write_fingerprints_to(fs::File::create(path).unwrap(), &set).unwrap();
}

#[test]
fn cluster_three_fingerprints() {
    let d = TempDir::new().unwrap();
    write_fps(
        &d.path().join("fp.csv"),
        32,
        &[
            &[0, 1, 2, 3, 4, 5, 6, 7, 8],
            &[0, 1, 2, 3, 4, 5, 6, 7, 9],
            &[0, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29],
        ],
    );
    ok(d.path(), &["cluster", "--fingerprints", "fp.csv", "--out", "cl.json"]);
    let v = json(d.path().join("cl.json"));
    assert_eq!(v["clusters"], serde_json::json!([["m0", "m1"], ["m2"]]));
    assert_eq!(v["summary"]["n_clusters"], 1);
    assert_eq!(v["summary"]["n_singletons"], 1);
    assert_eq!(v["config"]["threshold"], 0.7);
}

#[test]
fn cluster_threshold_one_all_singletons_and_summary_consistent() {
    let d = TempDir::new().unwrap();
    write_fps(&d.path().join("fp.csv"), 64, &[&[0, 1], &[2, 3], &[4, 5], &[0, 2, 4, 6]]);
    ok(d.path(), &["cluster", "--fingerprints", "fp.csv", "--threshold", "1.0", "--out", "cl.json"]);
    let v = json(d.path().join("cl.json"));
    let clusters = v["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 4);
    let singles = clusters.iter().filter(|c| c.as_array().unwrap().len() == 1).count();
    let multi = clusters.len() - singles;
    assert_eq!(v["summary"]["n_singletons"], singles);
    assert_eq!(v["summary"]["n_clusters"], multi);
    let items: usize = clusters.iter().map(|c| c.as_array().unwrap().len()).sum();
    assert_eq!(v["summary"]["n_items"], items);
}

#[test]
fn bad_threshold_exits_2() {
    let d = TempDir::new().unwrap();
    write_fps(&d.path().join("fp.csv"), 8, &[&[0], &[1]]);
    let o = run(d.path(), &["cluster", "--fingerprints", "fp.csv", "--threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

/// Small synthetic dataset plus the names of its top informative columns.
fn small_dataset(dir: &Path, rows: usize) -> Vec<String> {
    ok(
        dir,
        &[
            "gen-data", "--out", "d.csv", "--fingerprints", "fp.csv", "--manifest", "m.json", "--rows",
            &rows.to_string(), "--seed", "3",
        ],
    );
    let m = json(dir.join("m.json"));
    m["informative"]
        .as_array()
        .unwrap()
        .iter()
        .take(8)
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn gen_data_outputs_read_back() {
    let d = TempDir::new().unwrap();
    small_dataset(d.path(), 120);
    let data = read_dataset(d.path().join("d.csv")).unwrap();
    assert_eq!((data.len(), data.features.n_cols()), (120, 186));
    let fps = read_fingerprints(d.path().join("fp.csv")).unwrap();
    assert_eq!(fps.ids.len(), 120);
}

#[test]
fn cv_defaults_to_one_hundred_evaluations() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 150).join(",");
    fs::write(d.path().join("c.json"), r#"{"model": {"kind": "gbdt", "n_trees": 30}}"#).unwrap();
    ok(
        d.path(),
        &["cv", "--config", "c.json", "--input", "d.csv", "--columns", &cols, "--out", "cv.json", "--table", "cv.csv"],
    );
    let v = json(d.path().join("cv.json"));
    assert_eq!(v["summary"]["n_evaluations"], 100);
    assert_eq!(v["summary"]["evaluations"].as_array().unwrap().len(), 100);
    assert_eq!(v["config"]["model"]["n_trees"], 30);
    let table = fs::read_to_string(d.path().join("cv.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "model,r2_mean,r2_std,mae_mean,mae_std,rmse_mean,rmse_std");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "gbdt");
    let r2: f64 = row[1].parse().unwrap();
    assert_eq!(r2, v["summary"]["r2"]["mean"].as_f64().unwrap());
}

#[test]
fn cv_grid_writes_one_row_per_point() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 120).join(",");
    fs::write(d.path().join("grid.json"), r#"{"n_trees": [5, 20]}"#).unwrap();
    ok(
        d.path(),
        &[
            "cv", "--input", "d.csv", "--columns", &cols, "--iterations", "1", "--grid", "grid.json", "--out",
            "cv.json", "--table", "cv.csv",
        ],
    );
    let v = json(d.path().join("cv.json"));
    assert_eq!(v["grid"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(fs::read_to_string(d.path().join("cv.csv")).unwrap().lines().count(), 3);
}

#[test]
fn columns_with_missing_values_are_rejected() {
    let d = TempDir::new().unwrap();
    small_dataset(d.path(), 60);
    // the unfiltered synthetic set contains columns with gaps
    let o = run(d.path(), &["train", "--input", "d.csv", "--out", "ck.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn train_then_predict_applies_stored_normalizer() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 100).join(",");
    ok(d.path(), &["train", "--input", "d.csv", "--columns", &cols, "--out", "ck.json"]);
    let text = fs::read_to_string(d.path().join("ck.json")).unwrap();
    let ck = Checkpoint::from_json(&text).unwrap();
    assert!(ck.normalizer.is_some());
    assert_eq!(ck.feature_names.len(), 8);

    ok(d.path(), &["predict", "--input", "d.csv", "--checkpoint", "ck.json", "--out", "p.csv"]);
    let data = read_dataset(d.path().join("d.csv")).unwrap();
    let x = data.features.select_named(&ck.feature_names).unwrap();
    let expected = ck.predict_raw(x.values()).unwrap();
    let got: Vec<f64> = fs::read_to_string(d.path().join("p.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn predict_rejects_other_format_version() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 60).join(",");
    ok(d.path(), &["train", "--input", "d.csv", "--columns", &cols, "--out", "ck.json"]);
    let mut v = json(d.path().join("ck.json"));
    v["format"] = Value::from(99);
    fs::write(d.path().join("bad.json"), v.to_string()).unwrap();
    let o = run(d.path(), &["predict", "--input", "d.csv", "--checkpoint", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("format version"));
}

#[test]
fn hybrid_train_and_predict_round_trip() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 40).join(",");
    fs::write(
        d.path().join("h.json"),
        r#"{"model": {"kind": "hybrid",
            "hybrid": {"n_qubits": 2, "n_sub_encoders": 2, "features_per_qc": 4, "params_per_qc": 4},
            "train": {"epochs": 3, "batch_size": 8, "learning_rate": 0.01}}}"#,
    )
    .unwrap();
    ok(d.path(), &["train", "--config", "h.json", "--input", "d.csv", "--columns", &cols, "--out", "ck.json"]);
    let ck = Checkpoint::from_json(&fs::read_to_string(d.path().join("ck.json")).unwrap()).unwrap();
    assert_eq!(ck.kind, "hybrid");
    ok(d.path(), &["predict", "--input", "d.csv", "--checkpoint", "ck.json", "--out", "p.csv"]);
}

#[test]
fn seed_precedence_flag_env_file() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("c.json"), r#"{"seed": 11}"#).unwrap();
    let seed_of = |o: &Output| -> u64 {
        let line = stderr(o);
        let cfg = line.lines().find(|l| l.starts_with("gradcheck config:")).unwrap();
        let v: Value = serde_json::from_str(cfg.trim_start_matches("gradcheck config:").trim()).unwrap();
        v["seed"].as_u64().unwrap()
    };
    let file_only = ok(d.path(), &["gradcheck", "--config", "c.json"]);
    assert_eq!(seed_of(&file_only), 11);
    let env = bin()
        .current_dir(d.path())
        .env("PAQREG_SEED", "22")
        .args(["gradcheck", "--config", "c.json"])
        .output()
        .unwrap();
    assert_eq!(seed_of(&env), 22);
    let flag = bin()
        .current_dir(d.path())
        .env("PAQREG_SEED", "22")
        .args(["gradcheck", "--config", "c.json", "--seed", "33"])
        .output()
        .unwrap();
    assert_eq!(seed_of(&flag), 33);
    let bad = bin()
        .current_dir(d.path())
        .env("PAQREG_SEED", "x")
        .args(["gradcheck"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn echoed_config_reproduces_outputs_bitwise() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 80).join(",");
    ok(
        d.path(),
        &["cv", "--input", "d.csv", "--columns", &cols, "--model", "random-forest", "--iterations", "2", "--out", "a.json"],
    );
    // re-run from the output document alone, writing elsewhere
    let mut v = json(d.path().join("a.json"));
    v["config"]["out"] = Value::from("b.json");
    fs::write(d.path().join("echo.json"), v.to_string()).unwrap();
    ok(d.path(), &["cv", "--config", "echo.json"]);
    let mut a = json(d.path().join("a.json"));
    let mut b = json(d.path().join("b.json"));
    a["config"]["out"] = Value::Null;
    b["config"]["out"] = Value::Null;
    assert_eq!(a, b);
    let ra = fs::read_to_string(d.path().join("a.json")).unwrap().replace("\"a.json\"", "\"b.json\"");
    assert_eq!(ra, fs::read_to_string(d.path().join("b.json")).unwrap());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let d = TempDir::new().unwrap();
    let cols = small_dataset(d.path(), 80).join(",");
    for (t, name) in [("1", "t1.json"), ("3", "t3.json")] {
        ok(
            d.path(),
            &[
                "--threads", t, "train", "--input", "d.csv", "--columns", &cols, "--model", "random-forest", "--out",
                name,
            ],
        );
    }
    let strip = |p: &str| {
        let mut v = json(d.path().join(p));
        v["config"]["out"] = Value::Null;
        v.to_string()
    };
    assert_eq!(strip("t1.json"), strip("t3.json"));
}
