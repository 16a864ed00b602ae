use std::path::Path;
use std::process::{Command, Output};

fn condense(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_condense"));
    cmd.args(args).env_remove("CONDENSE_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("CONDENSE_OUT_DIR", dir);
    }
    cmd.output().expect("spawn condense")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL: &[&str] = &["--m", "50", "--max-time", "0.5"];

#[test]
fn version() {
    let out = condense(&["version"], None);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("rng stream version 1"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&condense(&["train", "--alpha", "0.4"], None)), 1);
    assert_eq!(code(&condense(&["train", "--step-size", "0.5"], None)), 1);
    assert_eq!(code(&condense(&["train", "--no-such-flag"], None)), 1);
    assert_eq!(code(&condense(&["frobnicate"], None)), 1);
    assert_eq!(code(&condense(&["predict", "--alpha", "0.5", "--m", "100"], None)), 1);
}

#[test]
fn train_writes_artifacts_for_every_target() {
    let tmp = tempfile::tempdir().unwrap();
    for target in ["f1", "f2", "f3"] {
        let dir = tmp.path().join(target);
        let mut args = vec!["train", "--target", target, "--out", dir.to_str().unwrap()];
        args.extend_from_slice(SMALL);
        let out = condense(&args, None);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("# schema=1\n"));
        assert_eq!(csv.lines().count(), 2 + 51);
        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["schema"], 1);
        assert_eq!(summary["config"]["data"]["target"], target);
        assert!(dir.join("milestones.json").exists());
    }
}

#[test]
fn reruns_are_byte_identical_and_env_sets_the_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let (first, second) = (tmp.path().join("a"), tmp.path().join("b"));
    let mut args = vec!["train", "--seed", "7"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&condense(&args, Some(&first))), 0);
    assert_eq!(code(&condense(&args, Some(&second))), 0);
    for file in ["trajectory.csv", "milestones.json", "summary.json"] {
        assert_eq!(std::fs::read(first.join(file)).unwrap(), std::fs::read(second.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn monotone_violation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = condense(
        &[
            "train", "--m", "20", "--alpha", "0.55", "--normalize", "false", "--step-size", "0.1", "--max-time",
            "50", "--out", tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn predict_and_check_data() {
    let out = condense(&["predict", "--alpha", "1", "--m", "5000"], None);
    assert_eq!(code(&out), 0);
    let p: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let expect = 0.5 * 5000f64.ln();
    assert!((p["t_d"].as_f64().unwrap() - expect).abs() < 1e-9);

    let raw: serde_json::Value = serde_json::from_str(&stdout(&condense(&["check-data"], None))).unwrap();
    assert!(raw["dev1"].as_f64().unwrap() > 70.0);
    let norm: serde_json::Value =
        serde_json::from_str(&stdout(&condense(&["check-data", "--normalize"], None))).unwrap();
    assert!(norm["dev1"].as_f64().unwrap() <= 1e-10);
    assert!(norm["dev2"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn sweep_then_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = condense(&["sweep", "--ms", "200,400,800", "--seeds", "0,1", "--threads", "2", "--out", dir], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert!(table.starts_with("# schema=1\nm,alpha,target,seed,T_d_emp"));
    assert_eq!(table.lines().count(), 2 + 6);
    assert!(tmp.path().join("cells/m400_a1_f1_s1/trajectory.csv").exists());

    let sweep = tmp.path().join("sweep.csv");
    let fit = condense(&["fit", "--sweep", sweep.to_str().unwrap()], None);
    assert_eq!(code(&fit), 0, "{}", String::from_utf8_lossy(&fit.stderr));
    let fits: serde_json::Value = serde_json::from_str(&stdout(&fit)).unwrap();
    let fits = fits.as_array().unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[0]["mode"], "cell_mean");
    assert_eq!(fits[1]["mode"], "pooled");
    assert!(fits[0]["slope"].as_f64().unwrap() > 0.0);
}
