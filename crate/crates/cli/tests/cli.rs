use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn mctsi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mctsi"))
        .args(args)
        .env_remove("MCTSI_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&o.stdout));
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const EXAMPLE2: &str = r#"{"m":3,"cards":[2,2,2],"edges":[[1,2],[1,3]],"root":1,"root_pmf":[0.5,0.5],
  "kernels":{"2":[[0.9,0.1],[0.1,0.9]],"3":[[0.8,0.2],[0.2,0.8]]}}"#;

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", EXAMPLE2);
    assert_eq!(code(&mctsi(&["validate", &ok])), 0);

    let bad_row = EXAMPLE2.replace("[[0.8,0.2]", "[[0.7,0.2]");
    let p = write(dir.path(), "row.json", &bad_row);
    let o = mctsi(&["--json", "validate", &p]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["path"], "/kernels/3/0");
    let o = mctsi(&["validate", &p]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/kernels/3/0"));

    let cycle = r#"{"m":3,"cards":[2,2,2],"edges":[[1,2],[2,3],[3,1]],"root":1,"root_pmf":[0.5,0.5],"kernels":{}}"#;
    let p = write(dir.path(), "cycle.json", cycle);
    let o = mctsi(&["validate", &p]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a tree"));

    let p = write(dir.path(), "broken.json", "{\"m\": 3,");
    assert_eq!(code(&mctsi(&["validate", &p])), 2);
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&mctsi(&["validate", missing.to_str().unwrap()])), 5);
}

#[test]
fn json_model_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["example2-l3", "chain3", "lemma4"] {
        let a = mctsi(&["--json", "validate", name]);
        assert_eq!(code(&a), 0);
        let p = write(dir.path(), "m.json", std::str::from_utf8(&a.stdout).unwrap());
        let b = mctsi(&["--json", "validate", &p]);
        assert_eq!(code(&b), 0);
        assert_eq!(a.stdout, b.stdout, "{name}");
    }
}

#[test]
fn si_methods_agree() {
    let o = mctsi(&["--json", "si", "example2-l2", "--method", "both"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let expected = 1.0 - h2(0.2);
    assert!((v["exact"]["value_bits"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!((v["brute"]["value_bits"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!(v["delta"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["exact"]["argmin_edge"], serde_json::json!([1, 3]));
    assert!(format!("{:.7}", expected) == "0.2780719");
}

#[test]
fn si_product_model_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let product = r#"{"m":3,"cards":[2,3,2],"edges":[[1,2],[2,3]],"root":1,"root_pmf":[0.3,0.7],
      "kernels":{"2":[[0.2,0.3,0.5],[0.2,0.3,0.5]],"3":[[0.6,0.4],[0.6,0.4],[0.6,0.4]]}}"#;
    let p = write(dir.path(), "prod.json", product);
    let v = stdout_json(&mctsi(&["--json", "si", &p]));
    assert!(v["exact"]["value_bits"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["brute"]["value_bits"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn si_brute_guard() {
    let dir = tempfile::tempdir().unwrap();
    let m = 13;
    let edges: Vec<String> = (1..m).map(|i| format!("[{i},{}]", i + 1)).collect();
    let kernels: Vec<String> = (2..=m).map(|j| format!("\"{j}\":[[0.9,0.1],[0.2,0.8]]")).collect();
    let text = format!(
        r#"{{"m":{m},"cards":[{}],"edges":[{}],"root":1,"root_pmf":[0.5,0.5],"kernels":{{{}}}}}"#,
        vec!["2"; m].join(","),
        edges.join(","),
        kernels.join(",")
    );
    let p = write(dir.path(), "m13.json", &text);
    assert_eq!(code(&mctsi(&["si", &p, "--method", "exact"])), 0);
    let o = mctsi(&["si", &p, "--method", "brute"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("guard"));
}

#[test]
fn verify_mct_passes_all_suites() {
    let o = mctsi(&["--json", "verify", "example2-l3", "--suite", "all"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["suites"].as_array().unwrap().len(), 5);
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_lemma4_global_fails() {
    let o = mctsi(&["--json", "verify", "lemma4", "--suite", "global"]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o);
    let worst = v["suites"][0]["worst_triple"]["cmi"].as_f64().unwrap();
    // 0.75 h(1/3) - 0.5, see the ledger for the 0.6887 discrepancy
    assert!((worst - (0.75 * h2(1.0 / 3.0) - 0.5)).abs() < 1e-9);
    assert_eq!(code(&mctsi(&["verify", "lemma4", "--suite", "local"])), 0);
}

#[test]
fn tol_loosens_thresholds() {
    assert_eq!(code(&mctsi(&["verify", "lemma4", "--suite", "global", "--tol", "0.2"])), 0);
    assert_eq!(code(&mctsi(&["verify", "lemma4", "--suite", "global", "--tol", "0.1"])), 1);
}

#[test]
fn bounds_families() {
    let o = mctsi(&["--json", "bounds", "--family", "concentration", "--n", "10000", "--eps", "0.05"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["rows"][0]["bound"].as_f64().unwrap() - 0.9921646201842035).abs() < 1e-12);
    assert_eq!(v["rows"][0]["vacuous"], false);

    let v = stdout_json(&mctsi(&["--json", "bounds", "--family", "bias", "--card", "2"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        assert!(w[1]["width"].as_f64().unwrap() < w[0]["width"].as_f64().unwrap());
        assert!(w[1]["lower"].as_f64().unwrap() > w[0]["lower"].as_f64().unwrap());
    }

    let o = mctsi(&["bounds", "--family", "complexity", "--eps", "0.6", "--gap", "0.3", "--edges", "2"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
    let o = mctsi(&["--json", "bounds", "--family", "complexity", "--eps", "0.1", "--delta", "0.1", "--gap", "0.3", "--edges", "2"]);
    let v = stdout_json(&o);
    assert_eq!(v["rows"][0]["samples"], 30437.0);
    assert!(v["caveat"].as_str().unwrap().contains("order"));

    let o = mctsi(&["bounds", "--family", "proposition", "--model", "example2-l2", "--budget", "1000000000", "--csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().next().unwrap().contains("vacuous"));
    assert!(text.lines().nth(1).unwrap().contains(",false,true,"));
    assert_eq!(code(&mctsi(&["bounds", "--family", "ordering", "--gap", "0.3", "--n", "10"])), 4);
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

fn small_spec(dir: &Path, trials: usize) -> String {
    let spec = format!(
        r#"{{"model": "example2-l2", "budgets": [64, 512], "trials": {trials}, "seed": 7}}"#
    );
    write(dir, "spec.json", &spec)
}

#[test]
fn estimate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), 40);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&mctsi(&["estimate", &spec, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&mctsi(&["--threads", "3", "estimate", &spec, "--out", b.to_str().unwrap()])), 0);
    for f in ["trials.csv", "summary.csv"] {
        assert_eq!(sha(&a.join(f)), sha(&b.join(f)), "{f}");
    }
    let ma: Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let mb: Value = serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["master_seed"], 7);
    assert_eq!(ma["outputs"][0]["sha256"].as_str().unwrap(), sha(&a.join("trials.csv")));

    // key order does not change the config hash; the seed flag does
    let reordered = write(
        dir.path(),
        "spec2.json",
        r#"{"seed": 7, "trials": 40, "budgets": [64, 512], "model": "example2-l2"}"#,
    );
    let c = dir.path().join("c");
    mctsi(&["estimate", &reordered, "--out", c.to_str().unwrap()]);
    let mc: Value = serde_json::from_slice(&std::fs::read(c.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["config_hash"], mc["config_hash"]);
    let d = dir.path().join("d");
    mctsi(&["--seed", "8", "estimate", &spec, "--out", d.to_str().unwrap()]);
    let md: Value = serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap();
    assert_ne!(ma["config_hash"], md["config_hash"]);
    assert_ne!(sha(&a.join("trials.csv")), sha(&d.join("trials.csv")));
}

#[test]
fn estimate_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), 0);
    let out = dir.path().join("out");
    assert_eq!(code(&mctsi(&["estimate", &spec, "--out", out.to_str().unwrap()])), 0);
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials, "N,n,trial,chosen_i,chosen_j,si_estimate,correct,emi_1_2,emi_1_3\n");
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(1).unwrap().starts_with("64,32,0,0,NaN"));
}

#[test]
fn estimate_unwritable_dir() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), 1);
    let blocker = write(dir.path(), "file", "x");
    let out = format!("{blocker}/sub");
    assert_eq!(code(&mctsi(&["estimate", &spec, "--out", &out])), 5);
}

#[test]
fn demo_spec_trend() {
    let dir = tempfile::tempdir().unwrap();
    let spec = concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo_experiment.json");
    let o = mctsi(&["--json", "estimate", spec, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let rows = v["budgets"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let rising = b["rate"].as_f64().unwrap() > a["rate"].as_f64().unwrap();
        let overlap = b["wilson_lo"].as_f64().unwrap() <= a["wilson_hi"].as_f64().unwrap();
        assert!(!rising || overlap, "{a} -> {b}");
    }
}

#[test]
fn sample_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(code(&mctsi(&["--seed", "5", "sample", "chain3", "--n", "20", "--out", out.to_str().unwrap()])), 0);
    let text = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3");
    let stdout = mctsi(&["--seed", "5", "sample", "chain3", "--n", "20"]);
    assert_eq!(stdout.stdout, text.as_bytes());
    assert!(out.join("manifest.json").exists());
    assert_eq!(code(&mctsi(&["sample", "lemma4", "--n", "5"])), 4);
}
