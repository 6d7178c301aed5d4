use std::fs;
use std::process::Command;

use ogr_core::cli::{run, run_with_functions, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
use ogr_core::testfuns::{catalog, NAMES};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["ogr-bench"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn files(dir: &std::path::Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn bench_flag_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = invoke(&[
        "bench", "--function", "sphere", "--optimizers", "ogr,bfgs", "--line-search", "both", "--starts", "20",
        "--steps", "500", "--seed", "42", "--out", out,
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        files(dir.path()),
        [
            "runs_sphere_bfgs_ls.csv",
            "runs_sphere_bfgs_nols.csv",
            "runs_sphere_ogr_ls.csv",
            "runs_sphere_ogr_nols.csv",
            "summary.csv",
            "summary.json",
        ]
    );
    // header plus four summary rows
    assert_eq!(stdout.lines().count(), 5);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 4);
    for f in files(dir.path()).iter().filter(|f| f.starts_with("runs_")) {
        assert_eq!(fs::read_to_string(dir.path().join(f)).unwrap().lines().count(), 21);
    }
}

#[test]
fn unknown_function_is_usage_error() {
    let (code, _, err) = invoke(&["bench", "--function", "nope"]);
    assert_eq!(code, EXIT_USAGE);
    for n in NAMES {
        assert!(err.contains(n), "{err}");
    }
}

#[test]
fn invalid_flag_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["bench", "--function", "sphere", "--starts", "abc"],
        vec!["bench", "--function", "sphere", "--starts", "0", "--out", out],
        vec!["bench", "--function", "sphere", "--beta", "1.5", "--out", out],
        vec!["bench", "--function", "sphere", "--optimizers", "adam", "--out", out],
        vec!["bench", "--function", "beale", "--line-search", "maybe"],
        vec!["frobnicate"],
    ] {
        assert_eq!(invoke(&args).0, EXIT_USAGE, "{args:?}");
    }
}

#[test]
fn help_lists_paper_defaults() {
    let (code, bench_help, _) = invoke(&["bench", "--help"]);
    assert_eq!(code, EXIT_OK);
    for needle in ["[default: 42]", "[default: 2000]", "[default: 200]", "[default: 0.2]", "[default: 0.000000000001]", "[default: 0.5]", "[default: 50]", "0.6 for rastrigin"] {
        assert!(bench_help.contains(needle), "missing {needle}\n{bench_help}");
    }
    for sub in ["trajectory", "check-grad", "estimate-hessian"] {
        let (code, text, _) = invoke(&[sub, "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(text.contains("[default:"), "{sub}");
    }
}

#[test]
fn trajectory_writes_one_csv_per_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = invoke(&["trajectory", "--function", "beale", "--optimizers", "ogr,bfgs", "--out", out]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(files(dir.path()), ["trajectory_beale_bfgs.csv", "trajectory_beale_ogr.csv"]);
    for f in files(dir.path()) {
        let rows = fs::read_to_string(dir.path().join(f)).unwrap().lines().count() - 1;
        assert!((1..=2001).contains(&rows));
    }
}

#[test]
fn trajectory_single_restart_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (code, _, _) = invoke(&["trajectory", "--function", "griewank", "--restarts", "1", "--steps", "300", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
    }
    for f in files(a.path()) {
        let text = fs::read_to_string(a.path().join(&f)).unwrap();
        assert_eq!(text, fs::read_to_string(b.path().join(&f)).unwrap());
        assert!(text.lines().count() - 1 <= 301);
    }
}

#[test]
fn trajectory_rejects_non_2d() {
    let (code, _, err) = invoke(&["trajectory", "--function", "sphere", "--dim", "3"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("two-dimensional"));
}

#[test]
fn check_grad_passes_on_catalog() {
    let (code, out, _) = invoke(&["check-grad"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 10);
    let (code, _, _) = invoke(&["check-grad", "--points", "1000"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn check_grad_catches_tampered_gradient() {
    let mut fns = catalog();
    fns[1].grad = |x| {
        let mut g = ogr_core::testfuns::ROSENBROCK.gradient(x).unwrap().into_vec();
        g[0] *= 1.0 + 1e-4;
        g
    };
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with_functions(["ogr-bench", "check-grad"], &fns, &mut out, &mut err);
    assert_eq!(code, EXIT_CHECK_FAILED);
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("rosenbrock") && l.ends_with("NO")));
}

#[test]
fn estimate_hessian_examples() {
    let (code, out, _) = invoke(&["estimate-hessian", "--dim", "3", "--samples", "10", "--beta", "1"]);
    assert_eq!(code, EXIT_OK);
    for line in out.lines().skip(1) {
        let err: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!(err <= 1e-8, "{line}");
    }
    let (code, out, _) = invoke(&["estimate-hessian", "--dim", "2", "--samples", "2"]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("rank-deficient"));
}

#[test]
fn estimate_hessian_estimators_agree() {
    for seed in ["1", "2", "3"] {
        let (code, out, _) = invoke(&["estimate-hessian", "--dim", "4", "--samples", "12", "--seed", seed]);
        assert_eq!(code, EXIT_OK);
        let errs: Vec<f64> = out.lines().skip(1).map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap()).collect();
        assert!((errs[0] - errs[1]).abs() <= 1e-8);
    }
}

#[test]
fn binary_exit_codes_and_env_out_dir() {
    let bin = env!("CARGO_BIN_EXE_ogr-bench");
    let status = Command::new(bin).args(["bench", "--function", "nope"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&status.stderr).contains("himmelblau"));

    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(bin)
        .args(["bench", "--function", "himmelblau", "--optimizers", "ogr", "--line-search", "off", "--starts", "3", "--steps", "10"])
        .env("OGR_BENCH_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert!(dir.path().join("runs_himmelblau_ogr_nols.csv").exists());

    let status = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
}

#[test]
fn bench_is_byte_deterministic_across_jobs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &tempfile::TempDir, jobs: &'static str| {
        vec![
            "bench".to_string(), "--function".into(), "rosenbrock,ackley".into(), "--starts".into(), "15".into(),
            "--steps".into(), "300".into(), "--jobs".into(), jobs.into(), "--out".into(), d.path().to_str().unwrap().into(),
        ]
    };
    let mut o = Vec::new();
    let mut e = Vec::new();
    assert_eq!(run(std::iter::once("x".to_string()).chain(args(&a, "1")), &mut o, &mut e), EXIT_OK);
    assert_eq!(run(std::iter::once("x".to_string()).chain(args(&b, "3")), &mut o, &mut e), EXIT_OK);
    let fa = files(a.path());
    assert_eq!(fa, files(b.path()));
    assert_eq!(fa.len(), 10);
    for f in fa {
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{f}");
    }
}
