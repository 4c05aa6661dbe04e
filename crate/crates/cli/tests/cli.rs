use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn saa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = saa(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth(dir: &Path, sigma: &str) {
    ok(&[
        "synth", "--m", "12", "--n", "8", "--k", "2", "--sigma-z", sigma, "--seed", "4", "--out",
        dir.to_str().unwrap(),
    ]);
}

fn fit(input: &Path, out: &Path, ell: &str) -> Output {
    saa(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k",
        "2",
        "--ell",
        ell,
        "--lambda",
        "log:10:1:3",
        "--max-iter",
        "2000",
        "--max-rounds",
        "4",
        "--max-swaps",
        "20",
    ])
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    synth(&a, "0.1");
    synth(&b, "0.1");
    for f in ["X.csv", "X0.csv", "H0.csv", "W0.csv", "Z.csv", "labels.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["m"], 12);
    assert!(manifest["nnz_h0"].as_u64().unwrap() <= 13);
}

#[test]
fn noiseless_synth_writes_x_equal_to_x0() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "0");
    assert_eq!(
        fs::read(dir.path().join("X.csv")).unwrap(),
        fs::read(dir.path().join("X0.csv")).unwrap()
    );
}

#[test]
fn fit_and_report_produce_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth");
    synth(&truth, "0.1");
    let out = dir.path().join("fit");
    let res = fit(&truth.join("X.csv"), &out, "9");
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["H.csv", "W.csv", "Wt.csv", "trace.csv", "swaps.csv", "cuts.json", "summary.json", "timings.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let summary = json(&out.join("summary.json"));
    assert!(summary["nnz"].as_u64().unwrap() <= 9);
    assert!(summary["psi"].as_f64().unwrap() <= summary["psi_before_search"].as_f64().unwrap());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().contains("lambda"));

    // rerunning gives the same summary
    let again = dir.path().join("fit2");
    assert!(fit(&truth.join("X.csv"), &again, "9").status.success());
    assert_eq!(
        fs::read(out.join("summary.json")).unwrap(),
        fs::read(again.join("summary.json")).unwrap()
    );
    assert_eq!(fs::read(out.join("H.csv")).unwrap(), fs::read(again.join("H.csv")).unwrap());

    let report = dir.path().join("report.json");
    ok(&[
        "eval",
        "report",
        "--truth",
        truth.to_str().unwrap(),
        "--fit",
        out.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    let r = json(&report);
    assert!(r["robustness"]["weak"].as_f64().unwrap() >= 0.0);
    let purity = r["clustering"]["purity"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&purity));
}

#[test]
fn sweep_writes_rows_and_means() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "eval", "sweep", "--m", "10", "--n", "6", "--k", "2", "--sigmas", "0.05,0.2", "--ell-fracs",
        "0.5", "--seeds", "0..2", "--lambda", "log:10:1:2", "--max-iter", "1000", "--max-rounds", "3",
        "--ls", "off", "--out", dir.path().to_str().unwrap(),
    ]);
    let rows = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    assert_eq!(json(&dir.path().join("means.json"))["means"].as_array().unwrap().len(), 2);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth");
    synth(&truth, "0.1");
    let x = truth.join("X.csv");
    let zero_budget = fit(&x, &dir.path().join("a"), "0");
    assert_eq!(zero_budget.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&zero_budget.stderr).is_empty());
    let missing = fit(&dir.path().join("nope.csv"), &dir.path().join("b"), "4");
    assert_eq!(missing.status.code(), Some(3));
    let bad_lambda = saa(&[
        "fit", "--input", x.to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap(),
        "--k", "2", "--ell", "4", "--lambda", "log:1:5:3",
    ]);
    assert_eq!(bad_lambda.status.code(), Some(2));
}
