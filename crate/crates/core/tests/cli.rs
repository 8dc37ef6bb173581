use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use monofix::cli::{run, Exit, RunConfig};
use serde_json::Value;

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn config(mode: &str, problem: impl Into<PathBuf>, out: &Path) -> RunConfig {
    RunConfig {
        mode: mode.into(),
        problem: problem.into(),
        out: out.to_path_buf(),
        seed: None,
        eps_level: None,
        max_iter: None,
        override_certificate: false,
        horizon: None,
    }
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn write_problem(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("problem.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn fredholm_constant_kernel_solution_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config(
        "fredholm",
        problems().join("fredholm_constant.toml"),
        dir.path(),
    ));
    assert_eq!(out.exit, Exit::Success);
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let values: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 64);
    assert!(values.iter().all(|v| (v - 2.0).abs() < 1e-8));
    let s = summary(dir.path());
    assert_eq!(s["status"], "converged");
    assert_eq!(s["certificate_routes"]["verdict"], "certified");
    assert_eq!(s["multi_start"]["agree"], true);
}

#[test]
fn refuted_matrix_exits_two_and_override_runs() {
    let dir = tempfile::tempdir().unwrap();
    let problem = problems().join("refuted_matrix.toml");
    let out = run(&config("solve", &problem, dir.path()));
    assert_eq!(out.exit.code(), 2);
    let s = summary(dir.path());
    assert_eq!(s["status"], "certificate-refused");
    assert!(dir.path().join("trace.json").exists());

    let dir = tempfile::tempdir().unwrap();
    let mut c = config("solve", &problem, dir.path());
    c.override_certificate = true;
    let out = run(&c);
    // the map expands, so the overridden run diverges
    assert_eq!(out.exit.code(), 3);
    assert_eq!(summary(dir.path())["certificate"]["overridden"], true);
}

#[test]
fn verify_reals_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_problem(
        tmp.path(),
        "schema_version = 1\n[verify]\ninstances = [\"reals\"]\nsamples = 200\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run(&config("verify-axioms", p, &out_dir));
    assert_eq!(out.exit, Exit::Success);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], true);
}

#[test]
fn non_metric_distance_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_problem(
        tmp.path(),
        "schema_version = 1\n[verify]\ninstances = [\"reals\"]\nsamples = 100\ndistance = \"squared\"\n",
    );
    let out_dir = tmp.path().join("out");
    // the squared distance fails the triangle inequality, which is only
    // informational for its class
    assert_eq!(
        run(&config("verify-axioms", p, &out_dir)).exit,
        Exit::Success
    );
    let report = fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(report.contains("not-required"));
}

#[test]
fn input_errors_still_write_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_problem(
        tmp.path(),
        "schema_version = 1\n[solve]\na = [[0.5], oops]\nb = [1.0]\n",
    );
    let out_dir = tmp.path().join("out");
    assert_eq!(run(&config("solve", &p, &out_dir)).exit.code(), 1);
    let s = summary(&out_dir);
    assert_eq!(s["status"], "input-error");
    assert!(s["error"].as_str().unwrap().contains("line 3"), "{s}");

    let p = write_problem(
        tmp.path(),
        "schema_version = 1\n[verify]\ninstances = [\"hilbert\"]\n",
    );
    assert_eq!(run(&config("verify-axioms", &p, &out_dir)).exit.code(), 1);
    assert!(summary(&out_dir)["error"]
        .as_str()
        .unwrap()
        .contains("unknown instance `hilbert`"));

    assert_eq!(run(&config("optimize", &p, &out_dir)).exit.code(), 1);
    assert!(summary(&out_dir)["error"]
        .as_str()
        .unwrap()
        .contains("invalid mode"));

    assert_eq!(
        run(&config("solve", tmp.path().join("missing.toml"), &out_dir))
            .exit
            .code(),
        1
    );
}

#[test]
fn divergence_and_budget_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_problem(
        tmp.path(),
        "schema_version = 1\n[solve]\na = [[1.0]]\nb = [1.0]\nx0 = [0.0]\nlambda = { kind = \"scalar\", q = 0.5 }\n",
    );
    let out_dir = tmp.path().join("out");
    assert_eq!(run(&config("solve", &p, &out_dir)).exit.code(), 3);
    assert_eq!(summary(&out_dir)["status"], "divergence-detected");

    let p = write_problem(
        tmp.path(),
        "schema_version = 1\nmax_iter = 5\n[solve]\na = [[0.5]]\nb = [1.0]\nx0 = [0.0]\n",
    );
    assert_eq!(run(&config("solve", &p, &out_dir)).exit.code(), 3);
    assert_eq!(summary(&out_dir)["status"], "max-iter-exhausted");
}

#[test]
fn monotone_start_above_image_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_problem(
        tmp.path(),
        "schema_version = 1\n[solve]\na = [[0.25]]\nb = [0.75]\nx0 = [5.0]\n",
    );
    let out_dir = tmp.path().join("out");
    assert_eq!(run(&config("solve-monotone", &p, &out_dir)).exit.code(), 3);
    assert_eq!(summary(&out_dir)["status"], "not-monotone-start");
    assert_eq!(
        run(&config(
            "solve-monotone",
            problems().join("monotone_sqrt.toml"),
            &out_dir
        ))
        .exit,
        Exit::Success
    );
}

#[test]
fn coupled_problem_and_probes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&config(
        "solve-multiple",
        problems().join("coupled.toml"),
        tmp.path(),
    ));
    assert_eq!(out.exit, Exit::Success);
    let csv = fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }
    assert_eq!(summary(tmp.path())["multi_start"]["agree"], true);

    let out = run(&config(
        "fw-probe",
        problems().join("probe_squared.toml"),
        tmp.path(),
    ));
    assert_eq!(out.exit, Exit::Success);
    assert_eq!(summary(tmp.path())["witness_found"], true);
}

#[test]
fn identical_config_and_seed_give_identical_files() {
    for (mode, file) in [
        ("solve", "affine_plane.toml"),
        ("fredholm", "fredholm_separable.toml"),
        ("solve-multiple", "coupled.toml"),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut ca = config(mode, problems().join(file), a.path());
        ca.seed = Some(7);
        let mut cb = ca.clone();
        cb.out = b.path().to_path_buf();
        run(&ca);
        run(&cb);
        for name in ["trace.json", "summary.json", "solution.csv"] {
            let x = fs::read(a.path().join(name)).unwrap();
            let y = fs::read(b.path().join(name)).unwrap();
            assert!(x == y, "{mode}: {name} differs");
        }
    }
}

#[test]
fn numbers_use_seventeen_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    run(&config(
        "solve",
        problems().join("contraction.toml"),
        tmp.path(),
    ));
    let csv = fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    let value = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = value.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{value}");
}

#[test]
fn binary_reports_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_monofix");
    let status = Command::new(bin)
        .args(["--mode", "solve", "--problem"])
        .arg(problems().join("contraction.toml"))
        .arg("--out")
        .arg(tmp.path())
        .args(["--seed", "3", "--eps-level", "30", "--max-iter", "100"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(bin)
        .args(["--mode", "solve", "--problem"])
        .arg(problems().join("refuted_matrix.toml"))
        .arg("--out")
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin)
        .args(["--problem", "x.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
