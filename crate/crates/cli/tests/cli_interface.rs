//! End-to-end checks of the command-line surface: exit codes, output
//! formats and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bseries"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str], paths: &[(usize, PathBuf)]) -> Output {
    let mut cmd = bin();
    let mut idx = 0;
    for (i, arg) in args.iter().enumerate() {
        if let Some((_, p)) = paths.iter().find(|(pos, _)| *pos == i) {
            cmd.arg(p);
            idx += 1;
        } else {
            cmd.arg(arg);
        }
    }
    let _ = idx;
    cmd.output().expect("spawn CLI")
}

#[test]
fn unknown_flags_are_rejected_with_usage() {
    let out = bin().args(["trees", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage") || err.contains("--help"), "{err}");
}

#[test]
fn order_check_exit_codes() {
    let ok = run(
        &["rk-order", "-i", "<euler>", "-N", "4", "--expect", "1"],
        &[(2, fixture("euler.json"))],
    );
    assert_eq!(ok.status.code(), Some(0));

    let fail = run(
        &["rk-order", "-i", "<euler>", "-N", "4", "--expect", "2"],
        &[(2, fixture("euler.json"))],
    );
    assert_eq!(fail.status.code(), Some(1));

    let missing = run(
        &["rk-order", "-i", "<nope>", "-N", "4"],
        &[(2, fixture("no_such_file.json"))],
    );
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn symplectic_exit_codes() {
    let mid = run(
        &["rk-symplectic", "-i", "<t>"],
        &[(2, fixture("midpoint.json"))],
    );
    assert_eq!(mid.status.code(), Some(0));
    let eul = run(
        &["rk-symplectic", "-i", "<t>"],
        &[(2, fixture("euler.json"))],
    );
    assert_eq!(eul.status.code(), Some(1));
    let text = String::from_utf8_lossy(&eul.stdout);
    assert!(text.contains("violated"), "{text}");
}

#[test]
fn compose_emits_rational_map_json() {
    let out = run(
        &["compose", "--outer", "<a>", "--inner", "<b>", "-N", "3"],
        &[(2, fixture("euler.json")), (4, fixture("midpoint.json"))],
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[""], serde_json::json!("1"));
    // composing euler after midpoint matches the library composition
    let expect = bseries_core::butcher::elementary_weights(
        &bseries_core::butcher::tableaux::euler(),
        3,
    )
    .compose(&bseries_core::butcher::elementary_weights(
        &bseries_core::butcher::tableaux::implicit_midpoint(),
        3,
    ))
    .unwrap();
    let parsed = bseries_core::butcher::BMap::from_json(&v, 3).unwrap();
    assert_eq!(parsed, expect);
}

#[test]
fn modified_equation_output_values() {
    let out = run(
        &["modified-equation", "-i", "<t>", "-N", "3"],
        &[(2, fixture("euler.json"))],
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["1"], serde_json::json!("1"));
    assert_eq!(v["1,2"], serde_json::json!("-1/2"));
    assert_eq!(v["1,2,3"], serde_json::json!("1/3"));
    assert_eq!(v["1,2,2"], serde_json::json!("1/6"));
}

#[test]
fn words_exact_mode_is_rational() {
    let out = bin()
        .args([
            "words",
            "--letters",
            "a,b",
            "--t",
            "1/2",
            "-N",
            "3",
            "--mode",
            "exact",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["coeffs"][""], serde_json::json!("1"));
    assert_eq!(v["coeffs"]["a"], serde_json::json!("1/2"));
    assert_eq!(v["coeffs"]["a.b"], serde_json::json!("1/8"));
    // exact mode with a problem is a config error
    let bad = run(
        &["words", "--problem", "<p>", "--mode", "exact"],
        &[(2, fixture("perturbed_oscillator.json"))],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn splitting_report_shape_and_determinism() {
    let args = &[
        "splitting-analyze",
        "-i",
        "<s>",
        "--omega",
        "1",
        "--h",
        "0.3",
        "-N",
        "3",
    ];
    let paths = &[(2usize, fixture("strang.json"))];
    let first = run(args, paths);
    assert_eq!(first.status.code(), Some(0));
    let second = run(args, paths);
    assert_eq!(first.stdout, second.stdout, "report must be byte-deterministic");

    let v: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(v["resonances"], serde_json::json!([]));
    assert_eq!(v["group_check"], serde_json::json!(true));
    assert!(v["composition_defect"].as_f64().unwrap() < 1e-12);
    assert!(v["modified_system"]["roundtrip_error"].as_f64().unwrap() < 1e-10);
    assert!(v["coefficients"].as_object().unwrap().len() > 1);

    // resonant step size: the report carries the obstruction
    let resonant = run(
        &[
            "splitting-analyze",
            "-i",
            "<s>",
            "--omega",
            "1",
            "--h",
            "6.283185307179586",
            "-N",
            "2",
            "--modes",
            "-1;1",
        ],
        &[(2, fixture("lie_trotter.json"))],
    );
    assert_eq!(resonant.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&resonant.stdout).unwrap();
    assert!(!v["resonances"].as_array().unwrap().is_empty());
    assert_eq!(v["modified_system"]["error"]["kind"], serde_json::json!("resonance"));
}

#[test]
fn verify_battery_passes_and_runs_experiment() {
    let out = bin().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));

    let csv_path = std::env::temp_dir().join("bseries_verify_experiment.csv");
    let out = bin()
        .arg("verify")
        .arg("--experiment")
        .arg(fixture("experiment_rk4_exp.json"))
        .arg("-o")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("h,error,rate\n"));
    let last_rate: f64 = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((last_rate - 4.0).abs() < 0.2, "rk4 empirical rate {last_rate}");
}

#[test]
fn words_from_problem_matches_flow_coefficients() {
    let out = run(
        &["words", "--problem", "<p>", "--t", "0.4", "-N", "3"],
        &[(2, fixture("perturbed_oscillator.json"))],
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // the single-letter zero-mode coefficient is exactly t
    let zero_mode = v["coeffs"]["0"].as_array().unwrap();
    assert!((zero_mode[0].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert!(zero_mode[1].as_f64().unwrap().abs() < 1e-12);
}
