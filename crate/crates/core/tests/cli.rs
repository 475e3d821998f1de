use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qudit_bell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qudit-bell"))
        .args(args)
        .env_remove("QUDIT_BELL_BUDGET")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = qudit_bell(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let mut rows = vec![header];
    rows.extend(reader.records().map(|r| r.unwrap().iter().map(String::from).collect()));
    rows
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn bound_three_qutrits() {
    let v = json_ok(&["bound", "--n", "3", "--d", "3", "--model", "hlnhv", "--partition", "1,2/3"]);
    assert_eq!(v["bound"]["exact"], "4");
    assert_eq!(num(&v["bound"]["value"]), 4.0);
    assert_eq!(v["partition"], serde_json::json!([[1, 2], [3]]));
    assert_eq!(v["strategies_enumerated"], 729);
    assert_eq!(v["witness"]["block_a"].as_object().unwrap().len(), 4);
    assert_eq!(v["witness"]["block_b"].as_object().unwrap().len(), 2);
}

#[test]
fn bound_local_model() {
    let v = json_ok(&["bound", "--n", "2", "--d", "4", "--model", "lhv"]);
    assert_eq!(v["bound"]["exact"], "2");
    assert_eq!(v["strategies_enumerated"], 256);
    assert!(v["partition"].is_null());
}

#[test]
fn bound_budget_exceeded() {
    let out =
        qudit_bell(&["bound", "--n", "6", "--d", "5", "--model", "hlnhv", "--partition", "1,2,3,4,5/6"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    // 5^32 * 5^2
    assert!(err.contains("582076609134674072265625"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn budget_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qudit-bell"))
        .args(["bound", "--n", "3", "--d", "3", "--partition", "1,2/3"])
        .env("QUDIT_BELL_BUDGET", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("729"));
}

#[test]
fn bound_bad_partition() {
    for partition in ["1,2/2", "1,2", "0/1,2", "1/2/3", "a/2,3"] {
        let out = qudit_bell(&["bound", "--n", "3", "--d", "2", "--partition", partition]);
        assert_eq!(out.status.code(), Some(1), "{partition}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qudit_bell(&["bound", "--n", "3"]).status.code(), Some(1));
    assert_eq!(qudit_bell(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qudit_bell(&["bound", "--n", "1", "--d", "2"]).status.code(), Some(1));
    assert_eq!(qudit_bell(&["--help"]).status.code(), Some(0));
}

#[test]
fn violation_values() {
    let v = json_ok(&["violation", "--n", "2", "--d", "2", "--angles", "prescribed"]);
    assert!((num(&v["bell_value"]) - 2.8284271).abs() < 1e-6);
    assert_eq!(v["evaluation"], "dense");
    let v = json_ok(&["violation", "--n", "3", "--d", "3", "--angles", "paper"]);
    let expected = 2.0 * (12.0 + 8.0 * 3f64.sqrt()) / 9.0;
    assert!((num(&v["bell_value"]) - expected).abs() < 1e-6);
    assert!(num(&v["difference"]).abs() < 1e-9);
    assert_eq!(v["witness_fired"], true);
}

#[test]
fn violation_zero_angles_matches_library() {
    use qudit_bell::quantum::{ghz_state, joint_probabilities, PhaseConfiguration};
    use qudit_bell::scenario::bell_value;
    let v = json_ok(&["violation", "--n", "2", "--d", "2", "--angles", "zero"]);
    let s = qudit_bell::BellScenario::new(2, 2).unwrap();
    let dense =
        bell_value(&joint_probabilities(&ghz_state(s).unwrap(), &PhaseConfiguration::zeros(s)).unwrap());
    assert_eq!(num(&v["bell_value"]), dense);
}

#[test]
fn violation_large_uses_closed_form() {
    let v = json_ok(&["violation", "--n", "5", "--d", "6"]);
    assert_eq!(v["evaluation"], "closed-form");
    assert!(num(&v["difference"]).abs() < 1e-9);
}

#[test]
fn emit_table_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.json");
    let t = table.to_str().unwrap();
    let v = json_ok(&["violation", "--n", "3", "--d", "2", "--angles", "paper", "--emit-table", t]);
    let e = json_ok(&["eval", t]);
    assert!((num(&e["bell_value"]) - num(&v["bell_value"])).abs() < 1e-9);
    assert!((num(&e["bell_value"]) - 5.657).abs() < 1e-3);
    assert_eq!(e["witness_fired"], true);
    assert_eq!(e["correlations"].as_object().unwrap().len(), 8);

    // noisy state on the closed-form path round-trips too
    let v = json_ok(&["violation", "--n", "2", "--d", "3", "--visibility", "0.5", "--emit-table", t]);
    let e = json_ok(&["eval", t]);
    assert!((num(&e["bell_value"]) - num(&v["bell_value"])).abs() < 1e-9);
    assert_eq!(e["witness_fired"], false);
}

#[test]
fn phases_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phases.json");
    let s = qudit_bell::BellScenario::new(2, 3).unwrap();
    let config = qudit_bell::optimize::prescribed_angles(&s);
    std::fs::write(&path, config.to_json().unwrap()).unwrap();
    let p = path.to_str().unwrap();
    let v = json_ok(&["violation", "--n", "2", "--d", "3", "--phases-file", p]);
    assert_eq!(v["angles_mode"], "file");
    assert!(num(&v["difference"]).abs() < 1e-9);
    let out = qudit_bell(&["violation", "--n", "3", "--d", "3", "--phases-file", p]);
    assert_eq!(out.status.code(), Some(1));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn eval_uniform_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = write(
        dir.path(),
        "u.json",
        r#"{"n":2,"d":2,"tables":{"11":[0.25,0.25,0.25,0.25],"12":[0.25,0.25,0.25,0.25],
            "21":[0.25,0.25,0.25,0.25],"22":[0.25,0.25,0.25,0.25]}}"#,
    );
    let e = json_ok(&["eval", &uniform]);
    assert!(num(&e["bell_value"]).abs() < 1e-15);
    assert_eq!(e["witness_fired"], false);

    let half = write(
        dir.path(),
        "h.json",
        r#"{"n":2,"d":2,"tables":{"11":[0.25,0.25,0,0],"12":[0.25,0.25,0.25,0.25],
            "21":[0.25,0.25,0.25,0.25],"22":[0.25,0.25,0.25,0.25]}}"#,
    );
    let out = qudit_bell(&["eval", &half]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("11"));

    let broken = write(dir.path(), "b.json", "{\"n\": 2,\n \"d\": 2,\n \"tables\": {\"11\": [1, 0,");
    let out = qudit_bell(&["eval", &broken]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = write(dir.path(), "m.json", r#"{"n":2,"d":2,"tables":{"11":[1,0,0,0]}}"#);
    let out = qudit_bell(&["eval", &missing]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing setting"));

    let out = qudit_bell(&["eval", "/nonexistent/table.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scan_rows() {
    let out = qudit_bell(&["scan", "--n", "2", "--d", "2..3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["n", "d", "hlnhv_bound", "max_violation", "ratio", "v_cr"]);
    assert_eq!(rows[1][5], "0.7071067812");
    assert_eq!(rows[2][5], "0.6961524227");

    let v = json_ok(&["scan", "--n", "2..4", "--d", "2"]);
    let maxima: Vec<f64> = v.as_array().unwrap().iter().map(|r| num(&r["max_violation"])).collect();
    let r2 = 2f64.sqrt();
    for (got, want) in maxima.iter().zip([2.0 * r2, 4.0 * r2, 8.0 * r2]) {
        assert!((got - want).abs() < 1e-12);
    }

    let v = json_ok(&["scan", "--n", "3..2"]);
    assert_eq!(v, serde_json::json!([]));
    let out = qudit_bell(&["scan", "--n", "3..2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&out).len(), 1);
}

#[test]
fn scan_v_cr_decreases_in_d() {
    let v = json_ok(&["scan", "--n", "3", "--d", "2..10"]);
    let vcr: Vec<f64> = v.as_array().unwrap().iter().map(|r| num(&r["v_cr"])).collect();
    assert!(vcr.windows(2).all(|w| w[1] < w[0]), "{vcr:?}");
}

#[test]
fn scan_certify_and_budget() {
    let v = json_ok(&["scan", "--n", "3", "--d", "2..3", "--certify"]);
    for row in v.as_array().unwrap() {
        assert_eq!(row["certified_bound"], "4");
    }
    let out = qudit_bell(&["scan", "--n", "6", "--d", "5", "--certify", "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(qudit_bell(&["scan", "--n", "x..3"]).status.code(), Some(1));
}

#[test]
fn visibility_report() {
    let v = json_ok(&["visibility", "--n", "3", "--d", "3"]);
    assert!((num(&v["critical_visibility"]) - 0.696).abs() < 1e-3);
    assert_eq!(v["more_noise_resistant_than_svetlichny"], true);
    let v = json_ok(&["visibility", "--n", "2", "--d", "2"]);
    assert_eq!(v["more_noise_resistant_than_svetlichny"], false);
    let v = json_ok(&["visibility", "--n", "2", "--d", "3", "--angles", "optimized-free", "--restarts", "4"]);
    assert!((num(&v["critical_visibility"]) - 0.6961524227).abs() < 1e-6);
}

#[test]
fn out_file_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = qudit_bell(&[
        "--threads",
        "2",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
        "bound",
        "--n",
        "3",
        "--d",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("n,d,model,partition,bound"));
    assert!(text.contains("\"1/2,3\""), "{text}");
    // no stray temporaries left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert_eq!(qudit_bell(&["--threads", "0", "scan"]).status.code(), Some(1));
}

#[test]
fn in_process_run() {
    assert_eq!(qudit_bell::cli::run(["qudit-bell", "scan", "--n", "3..2"]), 0);
    assert_eq!(qudit_bell::cli::run(["qudit-bell", "bound", "--n", "2", "--d", "2", "--budget", "1"]), 2);
}
