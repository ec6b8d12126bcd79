use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_extremal-lab"));
    cmd.env_remove("EXTREMAL_OUT_DIR");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    lab().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV file as floats, header dropped.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn linsolve_borderline_gives_inverse_radius() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["linsolve", "--dim", "10", "--potential", "borderline"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let header = std::fs::read_to_string(dir.path().join("omega.csv")).unwrap();
    assert!(header.starts_with("t,r,omega,omega_t,u\n"));
    for row in rows(&dir.path().join("omega.csv")) {
        let (t, r, omega) = (row[0], row[1], row[2]);
        assert!((r / t.exp() - 1.0).abs() < 1e-15);
        assert!((omega * r - 1.0).abs() < 1e-8, "t={t}");
    }
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "linsolve");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn linsolve_window_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"dim": 10, "potential": "window:0.25,0.5", "density": 40}"#,
    )
    .unwrap();
    let out = lab()
        .args(["linsolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let exact = radial_extremal::linear_ode::WindowSolution::new(0.25, 0.5, 10).unwrap();
    let data = rows(&dir.path().join("o/omega.csv"));
    for row in &data {
        assert!((row[2] / exact.value_t(row[0]) - 1.0).abs() < 1e-6);
    }
    assert!((exact.value_t(0.75f64.ln()) - 0.753_023).abs() < 1e-6);
    let m = json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["config"]["density"], 40.0);
}

#[test]
fn flags_override_config_and_env_sets_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"dim": 12, "potential": "zero"}"#).unwrap();
    let out = lab()
        .args(["linsolve", "--potential", "hardy", "--config"])
        .arg(&cfg)
        .env("EXTREMAL_OUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = json(&dir.path().join("env/manifest.json"));
    assert_eq!(m["config"]["potential"], "hardy");
    assert_eq!(m["config"]["dim"], 12);
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"t": [-5.0, -1.0], "c": [20.0, 17.0]}"#).unwrap();
    let arg = format!("table:{}", bad.display());
    for args in [
        vec!["linsolve", "--dim", "10", "--potential", arg.as_str()],
        vec!["linsolve", "--dim", "10", "--potential", "nonsense"],
        vec!["linsolve", "--potential", "zero"],
        vec!["linsolve", "--dim", "9", "--potential", "window:0.25,0.5"],
        vec![
            "construct",
            "--mode",
            "liminf",
            "--dim",
            "10",
            "--stages",
            "3",
        ],
        vec![
            "construct",
            "--mode",
            "oscillate",
            "--dim",
            "10",
            "--c1",
            "8",
        ],
        vec!["verify", "--case", "nope"],
        vec![
            "linsolve",
            "--dim",
            "10",
            "--potential",
            "zero",
            "--density",
            "-1",
        ],
    ] {
        let out = run(&args, &dir.path().join("o"));
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn liminf_schedule_radii() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "construct",
            "--mode",
            "liminf",
            "--dim",
            "10",
            "--phi",
            "inv_r2",
            "--stages",
            "2",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = json(&dir.path().join("schedule.json"));
    let y1 = s["stages"][0]["ty"].as_f64().unwrap().exp();
    assert!((y1 / 0.032_515_9 - 1.0).abs() < 2e-5, "{y1}");
    let a = json(&dir.path().join("audit.json"));
    assert_eq!(a["passed"], true);
    for st in a["stages"].as_array().unwrap() {
        assert_eq!(st["c_at_x"], 16.0);
    }
    for name in ["potential.json", "f_table.csv", "u_profile.csv"] {
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn oscillate_blend_stage_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "construct",
            "--mode",
            "oscillate",
            "--dim",
            "10",
            "--c1",
            "8",
            "--c2",
            "16",
            "--stages",
            "2",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = json(&dir.path().join("audit.json"));
    let st = a["stages"].as_array().unwrap();
    assert!((st[0]["c_at_x"].as_f64().unwrap() - 16.0).abs() < 1e-8);
    assert!((st[1]["c_at_y"].as_f64().unwrap() - 10.666_666_666_666_666).abs() < 1e-8);

    // the written potential verifies as a case file
    let out = lab()
        .args(["verify", "--case-file"])
        .arg(dir.path().join("potential.json"))
        .arg("--out")
        .arg(dir.path().join("v"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&dir.path().join("v/report.json"))["passed"], true);
}

#[test]
fn prescribed_hardy_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("hardy.json");
    std::fs::write(&table, r#"{"t": [-40.0, 0.0], "c": [25.0, 25.0]}"#).unwrap();
    let arg = format!("table:{}", table.display());
    let out = run(
        &[
            "construct",
            "--mode",
            "prescribed",
            "--dim",
            "12",
            "--psi",
            &arg,
        ],
        &dir.path().join("o"),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = json(&dir.path().join("o/audit.json"));
    assert!((a["f0"].as_f64().unwrap() - 9.316_625).abs() < 1e-6);
    let first = &rows(&dir.path().join("o/f_table.csv"))[0];
    assert_eq!(first[0], 0.0);
    let m = json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn low_constant_level_fails_superlinearity() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("flat.json");
    std::fs::write(&table, r#"{"t": [-40.0, 0.0], "c": [0.5, 0.5]}"#).unwrap();
    let arg = format!("table:{}", table.display());
    let out = run(
        &[
            "construct",
            "--mode",
            "prescribed",
            "--dim",
            "12",
            "--psi",
            &arg,
        ],
        &dir.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("superlinear"));
    // outputs are still written so the failure can be inspected
    let a = json(&dir.path().join("o/audit.json"));
    assert_eq!(a["passed"], false);
    assert_eq!(a["failing_flag"], "superlinear");
}

#[test]
fn verify_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--case", "exp10"], &dir.path().join("exp"));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&dir.path().join("exp/report.json"));
    assert!(r["report"]["lower_margin"].as_f64().unwrap().abs() <= 1e-3);
    assert!(r["report"]["upper_pass"].as_bool().unwrap());
    assert!(dir.path().join("exp/branch.csv").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));

    let out = run(&["verify", "--case", "hardy12"], &dir.path().join("h"));
    assert!(out.status.success());
    let cstar = rows(&dir.path().join("h/cstar.csv"));
    assert!(cstar.iter().all(|r| (r[2] - 25.0).abs() < 1e-6));

    let out = run(&["verify", "--case", "torsion"], &dir.path().join("t"));
    assert_eq!(out.status.code(), Some(4));
    assert!(!dir.path().join("t/report.json").exists());
}

#[test]
fn unverifiable_case_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("low.json");
    std::fs::write(&spec, r#"{"dim": 10, "form": "shifted", "epsilon": 4.0}"#).unwrap();
    let out = lab()
        .args(["verify", "--case-file"])
        .arg(&spec)
        .args(["--t-min", "-30", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not verifiable"));
    assert!(!dir.path().join("o/report.json").exists());
}

#[test]
fn sweep_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--pairs", "12", "--seed", "3"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(rows(&dir.path().join("sweep.csv")).len(), 12);
    assert_eq!(
        json(&dir.path().join("manifest.json"))["stats"]["violations"],
        0
    );
}
