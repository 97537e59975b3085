use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn barycut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barycut"))
        .args(args)
        .env_remove("BARYCUT_THREADS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(barycut(&["--help"]).status.code(), Some(0));
    assert_eq!(barycut(&["--version"]).status.code(), Some(0));
    assert_eq!(barycut(&["depth", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(barycut(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(barycut(&["depth", "--point", "0,zero,0"]).status.code(), Some(3));
    assert_eq!(barycut(&["depth", "--point", "5,0,0"]).status.code(), Some(3));
    assert_eq!(barycut(&["depth", "--body", "dodecahedron"]).status.code(), Some(3));
    assert_eq!(barycut(&["depth", "--csv"]).status.code(), Some(3));
    assert_eq!(barycut(&["depth", "--seeds", "1"]).status.code(), Some(3));
}

#[test]
fn malformed_and_missing_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim": 3, "vertices": [[0, 0, 0], [1, 0"#).unwrap();
    assert_eq!(barycut(&["depth", "--input", bad.to_str().unwrap()]).status.code(), Some(3));
    let flat = dir.path().join("flat.json");
    std::fs::write(&flat, r#"{"dim": 3, "vertices": [[0,0,0],[1,0,0],[0,1,0],[1,1,0]]}"#).unwrap();
    assert_eq!(barycut(&["depth", "--input", flat.to_str().unwrap()]).status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(barycut(&["depth", "--input", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn body_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = barycut(&["body", "--body", "prism", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let file = dir.path().join("prism.json");
    let body: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(body["dim"], 3);
    assert_eq!(body["vertices"].as_array().unwrap().len(), 6);

    let run = barycut(&["depth", "--input", file.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let r = report(&run);
    assert_eq!(r["status"], "ok");
    assert!((r["result"]["depth"].as_f64().unwrap() - 4.0 / 9.0).abs() < 1e-6);
}

#[test]
fn depth_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = barycut(&["depth", "--body", "triangle", "--seeds", "300", "--csv", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["tool"], "barycut");
    assert_eq!(r["config"]["command"], "depth");
    assert!(r["failures"].as_array().unwrap().is_empty());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(d).join("depth.json")).unwrap()).unwrap();
    assert_eq!(saved, r);

    let mut rows = csv::Reader::from_path(Path::new(d).join("depth.csv")).unwrap();
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>(), ["v1", "v2", "value", "grad_norm", "residual_norm"]);
    let values: Vec<f64> = rows.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(values.len(), 300);
    assert!(values.iter().all(|v| *v >= 4.0 / 9.0 - 1e-12 && *v <= 5.0 / 9.0 + 1e-12));
}

fn without_threads(mut v: Value) -> Value {
    v["config"].as_object_mut().unwrap().remove("threads");
    v
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for args in [
        &["synthetic-verify", "--seeds", "2000"][..],
        &["depth", "--body", "random", "--seed", "3"][..],
    ] {
        // the barycenter of a random body is not its median, so that run may
        // report failed expectations; either way both runs must agree
        let runs: Vec<(Option<i32>, Value)> = ["1", "4"]
            .iter()
            .map(|t| {
                let mut a = args.to_vec();
                a.extend(["--threads", t]);
                let out = barycut(&a);
                (out.status.code(), without_threads(report(&out)))
            })
            .collect();
        assert!(matches!(runs[0].0, Some(0 | 2)));
        assert_eq!(runs[0], runs[1], "{args:?}");
    }
}

#[test]
fn prism_check_passes() {
    let out = barycut(&["prism-check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["status"], "ok");
    let names: Vec<&str> = r["expectations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert!(names.len() >= 5);
}

#[test]
fn failed_expectations_exit_with_two() {
    // a shifted base point is not a median, so its argmin does not surround the origin
    let out = barycut(&["depth", "--body", "prism", "--point", "0.1,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["status"], "recipe_failed");
    assert!(!r["failures"].as_array().unwrap().is_empty());
}

#[test]
fn synthetic_mountain_pass() {
    let out = barycut(&["mountain-pass", "--nodes", "48"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["result"]["s"].as_f64().unwrap() - 0.1).abs() < 1e-3);
}
