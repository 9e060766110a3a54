use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kpp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpp-shift"))
        .args(args)
        .env("KPP_SHIFT_OUT", dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Parse a CSV written by the CLI, checking the header.
fn read_csv(path: &Path, header: &str) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header));
    let width = header.split(',').count();
    lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let row: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(row.len(), width, "{l}");
            row
        })
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn speeds_reports_regimes() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(
        tmp.path(),
        &["speeds", "--set", "parameters.case=CaseII", "--set", "parameters.c_het=3"],
    ));
    assert!((v["c_star"].as_f64().unwrap() - 1.4449788).abs() < 1e-6);
    assert_eq!(v["regime"], "anomalous");
    assert_eq!(read_json(&tmp.path().join("speeds.json")), v);

    let v = stdout_json(&kpp(tmp.path(), &["speeds"]));
    assert_eq!(v["c_star"].as_f64(), Some(1.5));
    assert_eq!(v["regime"], "locked");
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ \"parameters\": { \"alpha\": 1, }").unwrap();
    let out = kpp(tmp.path(), &["speeds", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));

    let out = kpp(tmp.path(), &["speeds", "--set", "parameters.gamma=1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = kpp(tmp.path(), &["speeds", "--set", "parameters.d_minus=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d_minus"));

    let out = kpp(tmp.path(), &["simulate", "--set", "time.t_end=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_end"));
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("run.json");
    fs::write(&path, r#"{"parameters": {"case": "CaseII", "c_het": 8}, "output": {"emit_svg": false}}"#)
        .unwrap();
    let v = stdout_json(&kpp(
        tmp.path(),
        &["config", "--config", path.to_str().unwrap(), "--set", "parameters.alpha=2"],
    ));
    assert_eq!(v["parameters"]["case"], "CaseII");
    assert_eq!(v["parameters"]["c_het"], 8.0);
    assert_eq!(v["parameters"]["alpha"], 2.0);
    assert_eq!(v["output"]["emit_svg"], false);
    assert_eq!(v["grid"]["nx"], 5501);
}

#[test]
fn simulate_matches_theory_and_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let v = stdout_json(&kpp(a.path(), &["simulate"]));
    assert!(v["rel_err"].as_f64().unwrap() < 0.05, "{v}");
    assert_eq!(v["exhausted"], false);
    let rows = read_csv(&a.path().join("front.csv"), "t,x_front_theta0.5,x_front_theta0.01");
    assert!(rows.len() > 500);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(read_json(&a.path().join("summary.json")), v);

    stdout_json(&kpp(b.path(), &["simulate", "--jobs", "2"]));
    assert_eq!(
        fs::read(a.path().join("front.csv")).unwrap(),
        fs::read(b.path().join("front.csv")).unwrap()
    );
}

#[test]
fn small_domain_sets_exhaustion_flag() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(
        tmp.path(),
        &["simulate", "--set", "grid.x_max=60", "--set", "grid.nx=1601", "--set", "time.t_end=60"],
    ));
    assert_eq!(v["exhausted"], true);
    assert!(v["t_final"].as_f64().unwrap() < 60.0);
}

#[test]
fn increasing_sweep_follows_piecewise_theory() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(tmp.path(), &["sweep", "--set", "parameters.case=CaseII"]));
    assert_eq!(v["rows"], 18);
    assert_eq!(v["failed"], 0);
    let rows = read_csv(&tmp.path().join("sweep.csv"), "c_het,c_theory,c_estimated,rel_err");
    assert_eq!(rows.len(), 18);
    let c_int = 4.0 + 2.0 * 3f64.sqrt();
    for r in &rows {
        let (c_het, theory) = (r[0], r[1]);
        if c_het <= 2.0 {
            assert_eq!(theory, 2.0);
        } else if c_het >= c_int {
            assert_eq!(theory, 1.0);
        } else {
            assert!(theory > 1.0 && theory < 2.0, "{r:?}");
        }
        // Pulled fronts near the branch points converge slowly.
        assert!(r[3] < 0.08, "{r:?}");
    }
    let anomalous: Vec<f64> = rows.iter().filter(|r| r[0] > 2.0 && r[0] < c_int).map(|r| r[1]).collect();
    assert!(anomalous.windows(2).all(|w| w[1] < w[0]));
    let svg = fs::read_to_string(tmp.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<circle").count() == 18);
    let full = read_json(&tmp.path().join("sweep.json"));
    assert_eq!(full.as_array().unwrap().len(), 18);
}

#[test]
fn single_value_sweep_has_one_row() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(
        tmp.path(),
        &["sweep", "--set", "sweep.chet_values=[3]", "--set", "output.emit_svg=false"],
    ));
    assert_eq!(v["rows"], 1);
    let rows = read_csv(&tmp.path().join("sweep.csv"), "c_het,c_theory,c_estimated,rel_err");
    assert_eq!(rows.len(), 1);
    assert!(rows[0][3] < 0.05);
    assert!(!tmp.path().join("sweep.svg").exists());
}

#[test]
fn wave_decay_rate() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(tmp.path(), &["wave"]));
    let lambda = v["lambda_fit"].as_f64().unwrap();
    assert!((lambda - 5.2360680).abs() / 5.2360680 < 0.05, "{v}");
    assert_eq!(v["monotone"], true);
    let rows = read_csv(&tmp.path().join("wave.csv"), "x,U");
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1])));
    let meta = read_json(&tmp.path().join("wave_meta.json"));
    for key in ["residual", "lambda_fit", "window", "monotone"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
}

#[test]
fn wave_for_increasing_profile_writes_phi() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(
        tmp.path(),
        &["wave", "--set", "parameters.case=CaseII", "--set", "parameters.c_het=3"],
    ));
    let x_eps = v["x_eps"].as_f64().unwrap();
    let rows = read_csv(&tmp.path().join("phi.csv"), "x,phi");
    assert!((rows.last().unwrap()[0] - x_eps).abs() < 1e-6);
    assert!(rows.iter().all(|r| r[1] >= -1e-9));
    assert_eq!(read_json(&tmp.path().join("phi_meta.json"))["x_eps"], v["x_eps"]);
}

#[test]
fn wave_outside_regime_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let out = kpp(tmp.path(), &["wave", "--set", "parameters.c_het=3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eigen_scan_is_decreasing_and_negative() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(tmp.path(), &["eigen"]));
    assert_eq!(v["sign_check"]["verdict"], "Negative");
    let path = tmp.path().join("eigen.csv");
    let rows = read_csv(&path, "r,mu_d");
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    let text = fs::read_to_string(&path).unwrap();
    let last = text.lines().last().unwrap();
    let mu: f64 = last.strip_prefix("#mu_star_estimate,").unwrap().parse().unwrap();
    assert!(mu < 0.0);
}

#[test]
fn verify_passes_for_anomalous_regime() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&kpp(
        tmp.path(),
        &["verify", "--set", "parameters.case=CaseII", "--set", "parameters.c_het=3"],
    ));
    assert_eq!(v["all_pass"], true);
    let report = read_json(&tmp.path().join("verify.json"));
    let names: Vec<&str> =
        report["builders"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap()).collect();
    for want in ["general_super", "general_sub", "case2_super_anomalous", "case2_sub_pull", "case2_sub_full"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    assert!(report["skipped"].as_array().unwrap().is_empty());
    for b in report["builders"].as_array().unwrap() {
        assert!(b["report"]["jump_checks"].is_array());
        assert!(b["thresholds"].is_object());
        assert!(b["report"]["worst_residual_value"].is_number());
    }
}

#[test]
fn failing_verdict_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let out = kpp(
        tmp.path(),
        &[
            "verify",
            "--set",
            "verify.check.tolerance=-1",
            "--set",
            "verify.mutations=false",
            "--set",
            "verify.check.n_times=5",
            "--set",
            "verify.check.n_positions=50",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&tmp.path().join("verify.json"))["all_pass"], false);
}
