//! Behavioral tests against the compiled binary: flag validation, error
//! reporting with file positions, warning paths, and run-to-run determinism.

mod common;

use common::{run_cli, run_cli_env};
use std::fs;
use tempfile::TempDir;

#[test]
fn rerun_into_same_directory_is_bit_identical() {
    let dir = TempDir::new().unwrap();
    let args = [
        "simulate",
        "--seed",
        "21",
        "--frames",
        "8",
        "--out",
        "bundle",
    ];
    let first = run_cli(dir.path(), &args);
    assert_eq!(first.status, 0, "stderr:\n{}", first.stderr);
    let manifest = fs::read(dir.path().join("bundle/manifest.csv")).unwrap();
    let raw0 = fs::read(dir.path().join("bundle/frames/raw_0000.f64")).unwrap();

    let second = run_cli(dir.path(), &args);
    assert_eq!(second.status, 0);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(
        manifest,
        fs::read(dir.path().join("bundle/manifest.csv")).unwrap()
    );
    assert_eq!(
        raw0,
        fs::read(dir.path().join("bundle/frames/raw_0000.f64")).unwrap()
    );
}

#[test]
fn equal_exposures_warn_ill_conditioned_but_exit_zero() {
    let dir = TempDir::new().unwrap();
    let sim = run_cli(
        dir.path(),
        &[
            "simulate",
            "--seed",
            "5",
            "--frames",
            "8",
            "--exposures-ms",
            "10",
            "--out",
            "bundle",
        ],
    );
    assert_eq!(sim.status, 0, "stderr:\n{}", sim.stderr);

    let est = run_cli(dir.path(), &["estimate", "--in", "bundle"]);
    assert_eq!(est.status, 0, "stderr:\n{}", est.stderr);
    assert!(
        est.stderr.contains("ill-conditioned"),
        "expected degeneracy warning, got:\n{}",
        est.stderr
    );
    let condition: f64 = est.report_value("normal_condition").parse().unwrap();
    assert!(condition > 1e6);
}

#[test]
fn malformed_correspondences_report_path_and_line() {
    let dir = TempDir::new().unwrap();
    let sim = run_cli(
        dir.path(),
        &["simulate", "--seed", "2", "--frames", "6", "--out", "bundle"],
    );
    assert_eq!(sim.status, 0, "stderr:\n{}", sim.stderr);

    let path = dir.path().join("bundle/correspondences.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 3);
    lines[2] = "2,oops,0,3,4,4";
    fs::write(&path, lines.join("\n")).unwrap();

    let est = run_cli(dir.path(), &["estimate", "--in", "bundle"]);
    assert_eq!(est.status, 1);
    assert!(
        est.stderr.contains("correspondences.csv:3:"),
        "expected file and line in:\n{}",
        est.stderr
    );
}

#[test]
fn correct_requires_exactly_one_tau_source() {
    let dir = TempDir::new().unwrap();
    let sim = run_cli(
        dir.path(),
        &["simulate", "--seed", "2", "--frames", "6", "--out", "bundle"],
    );
    assert_eq!(sim.status, 0);

    let neither = run_cli(dir.path(), &["correct", "--in", "bundle", "--out", "fixed"]);
    assert_eq!(neither.status, 2, "stderr:\n{}", neither.stderr);

    let both = run_cli(
        dir.path(),
        &[
            "correct",
            "--in",
            "bundle",
            "--out",
            "fixed",
            "--taus-ms",
            "12,14",
            "--from-truth",
        ],
    );
    assert_eq!(both.status, 2, "stderr:\n{}", both.stderr);
}

#[test]
fn clamp_writes_pgm_views_next_to_planes() {
    let dir = TempDir::new().unwrap();
    let sim = run_cli(
        dir.path(),
        &["simulate", "--seed", "9", "--frames", "4", "--out", "bundle"],
    );
    assert_eq!(sim.status, 0);

    let fix = run_cli(
        dir.path(),
        &[
            "correct",
            "--in",
            "bundle",
            "--out",
            "fixed",
            "--from-truth",
            "--clamp",
        ],
    );
    assert_eq!(fix.status, 0, "stderr:\n{}", fix.stderr);
    for k in 0..4 {
        let pgm = dir
            .path()
            .join(format!("fixed/frames/corrected_{k:04}.pgm"));
        let bytes = fs::read(&pgm).unwrap();
        assert!(bytes.starts_with(b"P5"), "{} is not binary PGM", pgm.display());
    }
}

#[test]
fn frechet_of_identical_files_is_zero() {
    let dir = TempDir::new().unwrap();
    let csv = "t,x,y,z\n0.0,1.0,2.0,3.0\n0.1,2.0,2.5,3.0\n0.2,4.0,1.0,2.0\n";
    fs::write(dir.path().join("a.csv"), csv).unwrap();
    fs::write(dir.path().join("b.csv"), csv).unwrap();

    let out = run_cli(dir.path(), &["evaluate", "frechet", "--a", "a.csv", "--b", "b.csv"]);
    assert_eq!(out.status, 0, "stderr:\n{}", out.stderr);
    assert_eq!(out.report_value("frechet"), "0");
}

#[test]
fn missing_manifest_is_reported_with_path() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    let est = run_cli(dir.path(), &["estimate", "--in", "empty"]);
    assert_eq!(est.status, 1);
    assert!(
        est.stderr.contains("manifest.csv"),
        "expected the missing file to be named:\n{}",
        est.stderr
    );
}

#[test]
fn stability_region_must_have_four_coordinates() {
    let dir = TempDir::new().unwrap();
    let sim = run_cli(
        dir.path(),
        &["simulate", "--seed", "3", "--frames", "4", "--out", "bundle"],
    );
    assert_eq!(sim.status, 0);

    let out = run_cli(
        dir.path(),
        &[
            "evaluate",
            "stability",
            "--video",
            "bundle",
            "--prefix",
            "raw",
            "--region",
            "1,2,3",
        ],
    );
    assert_eq!(out.status, 1);
    assert!(out.stderr.contains("region"), "stderr:\n{}", out.stderr);
}

#[test]
fn thread_pinning_does_not_change_outputs() {
    let dir = TempDir::new().unwrap();
    let pinned = run_cli_env(
        dir.path(),
        &["simulate", "--seed", "33", "--frames", "8", "--out", "one"],
        &[("BOLOCOR_THREADS", "1")],
    );
    let free = run_cli(
        dir.path(),
        &["simulate", "--seed", "33", "--frames", "8", "--out", "two"],
    );
    assert_eq!(pinned.status, 0, "stderr:\n{}", pinned.stderr);
    assert_eq!(free.status, 0);
    assert_eq!(pinned.report_value("digest"), free.report_value("digest"));

    let est_pinned = run_cli_env(
        dir.path(),
        &["estimate", "--in", "one"],
        &[("BOLOCOR_THREADS", "1")],
    );
    let est_free = run_cli(dir.path(), &["estimate", "--in", "two"]);
    assert_eq!(est_pinned.status, 0, "stderr:\n{}", est_pinned.stderr);
    assert_eq!(
        est_pinned.report_value("tau_h"),
        est_free.report_value("tau_h")
    );
    assert_eq!(
        est_pinned.report_value("tau_c"),
        est_free.report_value("tau_c")
    );
}

#[test]
fn physical_mode_flag_selects_the_relaxing_model() {
    let dir = TempDir::new().unwrap();
    let closed = run_cli(
        dir.path(),
        &["simulate", "--seed", "4", "--frames", "4", "--out", "cf"],
    );
    let physical = run_cli(
        dir.path(),
        &[
            "simulate",
            "--seed",
            "4",
            "--frames",
            "4",
            "--mode",
            "physical",
            "--out",
            "ode",
        ],
    );
    assert_eq!(closed.status, 0);
    assert_eq!(physical.status, 0, "stderr:\n{}", physical.stderr);
    assert_eq!(closed.report_value("mode"), "closed-form");
    assert_eq!(physical.report_value("mode"), "physical");
    assert_ne!(closed.report_value("digest"), physical.report_value("digest"));
}
