//! End-to-end runs of the `fractree` binary.

use std::path::Path;
use std::process::{Command, Output};

use fractree::io::{read_json, read_points_csv, RunManifest};

fn fractree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fractree"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn hard_model_dataset_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = fractree(
        dir.path(),
        &[
            "generate", "--model", "hard", "--dim", "2", "--alpha", "1.5", "--theta", "1", "--n",
            "1000", "--seed", "7", "--out", "pts.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = read_points_csv(&dir.path().join("pts.csv")).unwrap();
    assert_eq!(rec.len(), 1001);
    assert!(rec.birth_time.iter().all(Option::is_none));

    let manifest: RunManifest = read_json(&dir.path().join("pts.csv.manifest.json")).unwrap();
    assert_eq!(manifest.generation.seed, 7);
    assert!(manifest.verify_outputs(dir.path()).unwrap().is_empty());

    let out = fractree(
        dir.path(),
        &["estimate-dim", "--input", "pts.csv", "--method", "boxcount"],
    );
    assert_eq!(code(&out), 0);
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(fit["slope"].as_f64().unwrap().is_finite());
    assert_eq!(fit["format_version"], 1);

    let out = fractree(
        dir.path(),
        &[
            "plot",
            "--input",
            "pts.csv",
            "--svg-out",
            "pts.svg",
            "--edges",
        ],
    );
    assert_eq!(code(&out), 0);
    let svg = std::fs::read_to_string(dir.path().join("pts.svg")).unwrap();
    assert_eq!(svg.matches("<line").count(), 1000);
}

#[test]
fn continuous_dataset_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = fractree(
        dir.path(),
        &[
            "generate",
            "--model",
            "ct",
            "--dim",
            "2",
            "--alpha",
            "1.1111",
            "--profile",
            "gaussian",
            "--n",
            "10000",
            "--seed",
            "1",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = read_points_csv(&dir.path().join("points.csv")).unwrap();
    assert_eq!(rec.len(), 10_000);
    assert_eq!(rec.birth_time[0], Some(1.0));

    let out = fractree(
        dir.path(),
        &[
            "generate",
            "--from-manifest",
            "points.csv.manifest.json",
            "--out",
            "again.csv",
            "-q",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read(dir.path().join("points.csv")).unwrap(),
        std::fs::read(dir.path().join("again.csv")).unwrap()
    );

    let out = fractree(
        dir.path(),
        &[
            "estimate-dim",
            "--input",
            "points.csv",
            "--method",
            "corrsum",
            "--json-out",
            "fit.json",
            "--svg-out",
            "fit.svg",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("fit.svg").exists());
    let fit: serde_json::Value = read_json(&dir.path().join("fit.json")).unwrap();
    assert_eq!(fit["method"], "corrsum");
}

#[test]
fn alpha_ratio_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = fractree(
        dir.path(),
        &[
            "generate",
            "--model",
            "smooth",
            "--alpha-ratio",
            "10/9",
            "--n",
            "50",
            "--out",
            "s.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let m: RunManifest = read_json(&dir.path().join("s.csv.manifest.json")).unwrap();
    assert_eq!(m.generation.alpha, 10.0 / 9.0);
}

#[test]
fn diagnose_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = fractree(
        dir.path(),
        &[
            "diagnose",
            "--identity",
            "martingale",
            "--replicas",
            "200",
            "--levels",
            "2",
            "--json-out",
            "m.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = read_json(&dir.path().join("m.json")).unwrap();
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["records"].as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fractree(dir.path(), &["generate", "--model", "ct", "--frobnicate"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = fractree(
        dir.path(),
        &[
            "generate", "--model", "hard", "--alpha", "3", "--out", "x.csv",
        ],
    );
    assert_eq!(code(&out), 1);

    std::fs::write(
        dir.path().join("bad.csv"),
        "id,parent_id,birth_time,is_seed,x1,x2\n0,-1,,0,0\n",
    )
    .unwrap();
    let out = fractree(
        dir.path(),
        &["plot", "--input", "bad.csv", "--svg-out", "x.svg"],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:2:"));

    let out = fractree(
        dir.path(),
        &[
            "generate", "--model", "ct", "--dim", "3", "--rho", "0.5", "--n", "20", "--out",
            "d3.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let out = fractree(
        dir.path(),
        &["plot", "--input", "d3.csv", "--svg-out", "x.svg"],
    );
    assert_eq!(code(&out), 1);

    let out = fractree(dir.path(), &["estimate-dim", "--input", "missing.csv"]);
    assert_eq!(code(&out), 2);

    let out = fractree(dir.path(), &["--help"]);
    assert_eq!(code(&out), 0);
}
