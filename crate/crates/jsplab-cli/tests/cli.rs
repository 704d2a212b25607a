//! End-to-end tests of the binary: generate, enumerate, experiment.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jsplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsplab")).args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn generate(dir: &Path, n: &str, m: &str, wf: &str, count: &str, seed: &str) {
    assert_success(&jsplab(&[
        "generate", "--n", n, "--m", m, "--wf", wf, "--count", count, "--seed", seed, "--out",
        dir.to_str().unwrap(),
    ]));
}

fn enumerate(dir: &Path) {
    assert_success(&jsplab(&["enumerate", "--instances", dir.to_str().unwrap()]));
}

#[test]
fn generate_is_deterministic_and_indexed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    generate(&a, "3", "3", "1", "3", "42");
    generate(&b, "3", "3", "1", "3", "42");
    for name in ["j3x3w1_0000.json", "j3x3w1_0001.json", "j3x3w1_0002.json", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["seed"], 42);

    let bad = jsplab(&[
        "generate", "--n", "4", "--m", "4", "--wf", "3", "--count", "1", "--seed", "1", "--out",
        tmp.path().join("c").to_str().unwrap(),
    ]);
    assert!(!bad.status.success(), "wf=3 does not partition 4 machines");
}

#[test]
fn enumerate_solves_then_skips() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("set");
    generate(&dir, "3", "3", "1", "3", "7");
    enumerate(&dir);
    for k in 0..3 {
        assert!(dir.join(format!("j3x3w1_{k:04}.opt.json")).exists());
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("enumerate_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["solved"].as_array().unwrap().len(), 3);
    assert_eq!(report["skipped"].as_array().unwrap().len(), 0);

    enumerate(&dir);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("enumerate_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["solved"].as_array().unwrap().len(), 0);
    assert_eq!(report["skipped"].as_array().unwrap().len(), 3);
}

#[test]
fn enumerate_flags_budget_exhaustion_without_dying() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("set");
    generate(&dir, "5", "5", "1", "1", "9");
    let out = jsplab(&[
        "enumerate", "--instances", dir.to_str().unwrap(), "--budget", "3",
    ]);
    assert!(!out.status.success(), "budget exhaustion is a nonzero exit");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("enumerate_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["exceeded"].as_array().unwrap().len(), 1);
    assert!(!dir.join("j5x5w1_0000.opt.json").exists());
}

#[test]
fn experiment_descent_replays_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("set");
    generate(&dir, "4", "3", "1", "2", "11");
    enumerate(&dir);
    let run = |out: &Path| {
        assert_success(&jsplab(&[
            "experiment", "--suite", "descent", "--instances", dir.to_str().unwrap(), "--series",
            "400", "--seed", "5", "--out", out.to_str().unwrap(),
        ]));
    };
    let (o1, o2) = (tmp.path().join("o1"), tmp.path().join("o2"));
    run(&o1);
    run(&o2);
    let csv = fs::read_to_string(o1.join("descent.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(o2.join("descent.csv")).unwrap());
    assert_eq!(
        fs::read(o1.join("descent.json")).unwrap(),
        fs::read(o2.join("descent.json")).unwrap()
    );
    assert!(csv.starts_with("id,c_star,length,median,mean,stddev,max,random_mean\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn experiment_cost_model_emits_regression_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("set");
    generate(&dir, "4", "3", "1", "2", "11");
    enumerate(&dir);
    let out = tmp.path().join("out");
    assert_success(&jsplab(&[
        "experiment", "--suite", "cost-model", "--instances", dir.to_str().unwrap(), "--trials",
        "30", "--sims", "200", "--lopt-samples", "200", "--s-min", "5", "--s-max", "20",
        "--sample-interval", "5", "--seed", "3", "--out", out.to_str().unwrap(),
    ]));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("cost-model.json")).unwrap()).unwrap();
    assert!(summary["r2"].is_number());
    assert_eq!(summary["meta"]["config"]["trials"], 30);
    assert_eq!(fs::read_to_string(out.join("cost-model.csv")).unwrap().lines().count(), 3);
}

#[test]
fn experiment_without_sidecars_aborts_with_guidance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("set");
    generate(&dir, "3", "3", "1", "1", "13");
    let out = jsplab(&[
        "experiment", "--suite", "descent", "--instances", dir.to_str().unwrap(), "--series",
        "100", "--seed", "1", "--out", tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing optimal-set sidecar"), "stderr was: {stderr}");
}

#[test]
fn structure_suite_reads_class_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("set");
    for (class, wf) in [("random", "1"), ("workflow", "2"), ("flowshop", "4")] {
        let sub = root.join(class);
        generate(&sub, "3", "4", wf, "1", "17");
        enumerate(&sub);
    }
    let out = tmp.path().join("out");
    assert_success(&jsplab(&[
        "experiment", "--suite", "structure", "--instances", root.to_str().unwrap(), "--trials",
        "20", "--lopt-samples", "100", "--s-min", "5", "--s-max", "20", "--sample-interval",
        "20", "--seed", "2", "--out", out.to_str().unwrap(),
    ]));
    let csv = fs::read_to_string(out.join("structure.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "three classes, one instance each, plus header");
    assert!(csv.starts_with("class,id,"));

    let partial = tmp.path().join("partial");
    fs::create_dir_all(&partial).unwrap();
    let out2 = jsplab(&[
        "experiment", "--suite", "structure", "--instances", partial.to_str().unwrap(),
        "--trials", "5", "--seed", "1", "--out", tmp.path().join("out2").to_str().unwrap(),
    ]);
    assert!(!out2.status.success());
    assert!(String::from_utf8_lossy(&out2.stderr).contains("missing random/"));
}
