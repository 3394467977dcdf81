// SPDX-License-Identifier: Apache-2.0

use std::process::{Command, Output};

fn andor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_andor")).args(args).env_remove("ANDOR_THREADS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sample_smoke() {
    let out = andor(&["sample", "--model", "catalan", "--leaves", "3", "--k", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let trees = v["trees"].as_array().unwrap();
    assert_eq!(trees.len(), 1);
    let t = andor_core::exprtree::parse(trees[0].as_str().unwrap()).unwrap();
    assert_eq!(t.size(), 3);
}

#[test]
fn split_histogram_tracks_the_alpha_law() {
    let out = andor(&["sample", "--model", "alpha:0.5", "--n", "10", "--stats", "split", "--trials", "20000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["tv"].as_f64().unwrap() < 0.03);
}

#[test]
fn trim_reports() {
    let v = json(&andor(&["trim", "(x1|~x1|x2)"]));
    assert_eq!(v["trim_size"], 0);
    assert_eq!(v["function"], "True");
    let v = json(&andor(&["trim", "(x1&x2)"]));
    assert_eq!(v["trim_size"], 2);
    assert_eq!(v["trimmed"], "(x1&x2)");
    assert_eq!(v["function"], "2:8");
}

#[test]
fn malformed_expression_is_a_usage_error() {
    let out = andor(&["trim", "(x1)"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unary group"));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_flags_and_presets_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    for args in [
        vec!["dist", "--model", "nope", "--k", "2", "--trials", "10", "--seed", "1", "--out", p],
        vec!["dist", "--model", "catalan", "--nodes", "4", "--k", "2", "--trials", "10", "--seed", "1", "--out", p],
        vec!["dist", "--model", "spine:catalan", "--k", "0", "--trials", "10", "--seed", "1", "--out", p],
        vec!["dist", "--model", "spine:catalan", "--k", "2", "--trials", "10", "--out", p],
        vec!["scaling", "--model", "catalan", "--fn", "1:2", "--ks", "2", "--trials", "10", "--seed", "1", "--out", p],
        vec!["scaling", "--model", "spine:catalan", "--fn", "2:8", "--ks", "1,2", "--trials", "10", "--seed", "1", "--out", p],
        vec!["sample", "--model", "spine:catalan", "--seed", "1", "--out", p],
        vec!["checks", "--suite", "acceptance", "--seed", "1", "--only", "99", "--out", p],
    ] {
        let out = andor(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!path.exists(), "{args:?} wrote output");
    }
}

#[test]
fn dist_json_and_csv() {
    let out = andor(&["dist", "--model", "spine:catalan", "--k", "2", "--trials", "20000", "--seed", "5"]);
    let v = json(&out);
    assert_eq!(v["trials"], 20000);
    assert_eq!(v["unclassified"], 0);
    let total: u64 = v["entries"].as_array().unwrap().iter().map(|e| e["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 20000);
    let out = andor(&["dist", "--model", "bst", "--leaves", "20", "--k", "2", "--trials", "1000", "--seed", "5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("fn,count,p,stderr\n"));
    assert!(text.lines().last().unwrap().starts_with("unclassified,0,"));
}

#[test]
fn wide_dist_falls_back_to_targets() {
    let v = json(&andor(&["dist", "--model", "spine:catalan", "--k", "10", "--trials", "2000", "--seed", "5"]));
    assert_eq!(v["entries"].as_array().unwrap().len(), 22);
    assert!(v["other"].as_u64().is_some());
}

#[test]
fn scaling_csv_has_a_fit_footer() {
    let out = andor(&[
        "scaling", "--model", "spine:catalan", "--fn", "1:2", "--ks", "2,4,8", "--trials", "20000", "--seed", "9", "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,p_hat,stderr,log_k,log_p");
    assert_eq!(lines.len(), 6);
    assert!(lines[4].starts_with("slope,intercept,r2"));
    let slope: f64 = lines[5].split(',').next().unwrap().parse().unwrap();
    assert!((-2.6..=-1.4).contains(&slope), "slope {slope}");
}

#[test]
fn complexity_csv() {
    let out = andor(&["complexity", "--k", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "fn,L,Ess,read_once,witness");
    assert_eq!(text.lines().count(), 17);
    assert!(text.contains("\n2:6,4,2,false,"));
}

#[test]
fn output_is_identical_across_thread_counts() {
    for cmd in andor_cli::checks::determinism_commands(123) {
        let args: Vec<&str> = cmd[1..].iter().map(String::as_str).collect();
        let one = Command::new(env!("CARGO_BIN_EXE_andor")).args(&args).env("ANDOR_THREADS", "1").output().unwrap();
        let many = Command::new(env!("CARGO_BIN_EXE_andor")).args(&args).args(["--threads", "4"]).output().unwrap();
        assert_eq!(one.status.code(), Some(0), "{args:?}");
        assert_eq!(one.stdout, many.stdout, "{args:?}");
    }
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let args = ["dist", "--model", "spine:catalan", "--k", "2", "--trials", "3000", "--seed", "4"];
    let out = andor(&args);
    let status = Command::new(env!("CARGO_BIN_EXE_andor")).args(args).arg("--out").arg(&path).status().unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
}

#[test]
fn checks_exit_codes() {
    let out = andor(&["checks", "--suite", "acceptance", "--seed", "42", "--only", "5,11,12"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);
    let out = andor(&["checks", "--suite", "acceptance", "--seed", "42", "--only", "7a"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["results"][0]["pass"], false);
}

#[test]
fn suite_file_supplies_seed_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("suite.json");
    std::fs::write(&path, r#"{"suite": "acceptance", "seed": 42, "only": ["5", "12"]}"#).unwrap();
    let out = andor(&["checks", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    let out = andor(&["checks", "--suite", "acceptance"]);
    assert_eq!(out.status.code(), Some(2));
}
