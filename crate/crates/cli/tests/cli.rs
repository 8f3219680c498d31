//! End-to-end checks of the binary: exit codes, output files, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polefree"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polefree-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_univariate_csv(path: &Path, n: usize, f: impl Fn(f64) -> f64) {
    let mut text = String::from("x,y\n");
    for i in 0..=n {
        let x = i as f64 / n as f64;
        text.push_str(&format!("{x:.17},{:.17}\n", f(x)));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_exact_rational_exits_zero_with_small_rmse() {
    let dir = temp_dir("fit-exact");
    let input = dir.join("d.csv");
    write_univariate_csv(&input, 400, |x| 1.0 / (1.0 + x));
    let model_path = dir.join("m.json");
    let status = bin()
        .args([
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--num-degree",
            "0",
            "--den-degree",
            "1",
            "--loss",
            "nonlinear",
            "--smoothing",
            "0",
            "--seed",
            "1",
            "--output",
            model_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model_path).unwrap()).unwrap();
    assert!(model.get("basis").is_some());
    assert!(model.get("numerator").is_some());
    assert!(model.get("denominator_weights").is_some());
    assert_eq!(model["domain"], serde_json::json!([0.0, 1.0]));
    let w = model["denominator_weights"].as_array().unwrap();
    assert!((w[0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("m.report.json")).unwrap()).unwrap();
    assert!(report["rmse"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["pole_audit"]["has_pole_in_interval"], serde_json::json!(false));
}

#[test]
fn fit_missing_input_exits_one() {
    let dir = temp_dir("fit-missing");
    let status = bin()
        .args([
            "fit",
            "--input",
            dir.join("nope.csv").to_str().unwrap(),
            "--num-degree",
            "2",
            "--den-degree",
            "2",
            "--output",
            dir.join("m.json").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(!dir.join("m.json").exists());
}

#[test]
fn fit_cv_smoothing_grid_runs() {
    let dir = temp_dir("fit-cv");
    let input = dir.join("d.csv");
    write_univariate_csv(&input, 150, |x| (3.0 * x).sin());
    let status = bin()
        .args([
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--num-degree",
            "4",
            "--den-degree",
            "2",
            "--smoothing",
            "cv:0,1e-6,1e-3",
            "--cv-folds",
            "3",
            "--max-iters",
            "60",
            "--output",
            dir.join("m.json").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn fit_bivariate_input_writes_shape_fields() {
    let dir = temp_dir("fit-biv");
    let input = dir.join("d.csv");
    let mut text = String::from("x,z,y\n");
    for j in 0..=16 {
        for k in 0..=16 {
            let x = j as f64 / 16.0;
            let z = k as f64 / 16.0;
            text.push_str(&format!("{x},{z},{}\n", 1.0 / ((1.0 + x) * (1.0 + z))));
        }
    }
    fs::write(&input, text).unwrap();
    let status = bin()
        .args([
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--num-degree",
            "1",
            "--den-degree",
            "1",
            "--max-iters",
            "200",
            "--output",
            dir.join("m.json").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["shape_numerator"], serde_json::json!([2, 2]));
    assert_eq!(model["shape_denominator"], serde_json::json!([2, 2]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("m.report.json")).unwrap()).unwrap();
    assert!(report["rmse"].as_f64().unwrap() < 1e-4);
}

#[test]
fn fit_without_convergence_exits_two_but_writes_model() {
    let dir = temp_dir("fit-nonconv");
    let input = dir.join("d.csv");
    write_univariate_csv(&input, 300, |x| (50.0 * (x - 0.5)).atan());
    let model_path = dir.join("m.json");
    let status = bin()
        .args([
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--num-degree",
            "6",
            "--den-degree",
            "6",
            "--hot-start",
            "off",
            "--max-iters",
            "1",
            "--rel-tol",
            "1e-14",
            "--output",
            model_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(model_path.exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("m.report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::json!(false));
}

#[test]
fn benchmark_unknown_suite_exits_one() {
    let dir = temp_dir("bench-bad");
    let status = bin()
        .args([
            "benchmark",
            "--suite",
            "nope",
            "--n",
            "2..3",
            "--seeds",
            "1..1",
            "--output",
            dir.join("r.csv").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn benchmark_rows_and_determinism() {
    let dir = temp_dir("bench-det");
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "benchmark",
                "--suite",
                "nonconstant_noise",
                "--n",
                "2..3",
                "--seeds",
                "1..2",
                "--threads",
                "0",
                "--output",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("function,method,n,seed,rmse,has_pole,error"));
    // 3 functions x 2 methods x 2 degrees x 2 seeds + header.
    assert_eq!(text.lines().count(), 1 + 24);
}

#[test]
fn benchmark_honors_threads_env_var() {
    let dir = temp_dir("bench-env");
    let out = dir.join("r.csv");
    let status = bin()
        .env("POLEFREE_THREADS", "0")
        .args([
            "benchmark",
            "--suite",
            "nonconstant_noise",
            "--n",
            "2..2",
            "--seeds",
            "1..1",
            "--output",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 6);
}

#[test]
fn spectral_invalid_range_exits_one() {
    let dir = temp_dir("spec-bad");
    let status = bin()
        .args([
            "spectral",
            "--case",
            "single",
            "--coefs",
            "bogus",
            "--output",
            dir.join("t.csv").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(!dir.join("t.csv").exists());
}

#[test]
fn spectral_small_run_emits_rows_for_both_modes() {
    let dir = temp_dir("spec-small");
    let out = dir.join("t.csv");
    let status = bin()
        .args([
            "spectral",
            "--case",
            "multiple",
            "--coefs",
            "4..5",
            "--points",
            "96",
            "--output",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("num_coefs,mode,eig_error,approx_error"));
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text.contains("polynomial"));
    assert!(text.contains("rational"));
}
