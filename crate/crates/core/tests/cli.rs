//! End-to-end runs of the `bloch-amp` binary.

use std::process::{Command, Output};

use bloch_amp::catalogue::{parse_spec_json, spec_to_json, Preset, PresetKind, SpecFile};

fn bloch_amp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bloch-amp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = bloch_amp(&["simulate", "--preset", "linear_cptp", "--m", "1", "--t", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,tau,x,y,z,purity,entropy,trXOmega,coneMargin");
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last.len(), 9);
    assert_eq!(last[0], 2.0);
    assert!((last[2] - (1.0 - (-8.0f64).exp())).abs() < 1e-9);
}

#[test]
fn choi_flags_non_cp() {
    let out = bloch_amp(&["choi", "--preset", "linear_noncp", "--M", "1", "--gamma", "0.5", "--t", "0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let eig: Vec<f64> = text.lines().take(4).map(|l| l.parse().unwrap()).collect();
    assert_eq!(eig.len(), 4);
    assert!(eig[0] < 0.0);
    assert!(text.contains("not completely positive"));
}

#[test]
fn gate_plan_reports_json() {
    let out = bloch_amp(&["gate-plan", "--preset", "threejump_nino", "--M", "1", "--gamma", "0", "--target-radius", "0.99"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let t_gate = v["t_gate"].as_f64().unwrap();
    assert!((t_gate - 990f64.ln()).abs() < 1e-7);
    assert!(v["pre_amp"]["duration"].as_f64().unwrap() > 0.0);
}

#[test]
fn fixed_points_json() {
    let out = bloch_amp(&["fixed-points", "--preset", "threejump_nino", "--M", "1", "--gamma", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["fixed_lines"].as_array().unwrap().len(), 1);
}

#[test]
fn slowdown_and_stability() {
    let out = bloch_amp(&["slowdown", "--preset", "onejump_nino", "--fp", "1,0,0", "--dir", "1,0,0"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["exponent"].as_f64().unwrap() - 2.0).abs() < 0.01);

    let out = bloch_amp(&["stability", "--preset", "threejump_nino", "--M", "1", "--gamma", "0.5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["classification"]["unital"], true);
    assert!((v["max_real_eigenvalue"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn sweep_rows() {
    let out = bloch_amp(&[
        "sweep", "--preset", "linear_cptp", "--param", "m", "--from", "0.5", "--to", "1", "--steps", "3",
        "--observables", "purity,radius",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,observable,value");
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
}

#[test]
fn errors_exit_nonzero() {
    let out = bloch_amp(&["fixed-points", "--preset", "threejump_nino", "--M", "1", "--gamma", "2.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("M >= Gamma/2"));

    let out = bloch_amp(&["fixed-points", "--preset", "nonesuch"]);
    assert!(!out.status.success());

    let out = bloch_amp(&["choi", "--preset", "onejump_nino", "--t", "0.1"]);
    assert!(!out.status.success());

    let out = bloch_amp(&["simulate", "--spec-file", "/nonexistent/spec.json", "--t", "1"]);
    assert!(!out.status.success());
}

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for kind in PresetKind::ALL {
        let spec = kind.canonical().expand().unwrap();
        let text = spec_to_json(&spec);
        assert_eq!(parse_spec_json(&text).unwrap(), spec, "{kind}");

        let path = dir.path().join(format!("{kind}.json"));
        std::fs::write(&path, &text).unwrap();
        let out = bloch_amp(&["fixed-points", "--spec-file", path.to_str().unwrap()]);
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // preset form expands to the same spec as the library
    let preset = SpecFile::Preset {
        preset: "linear_noncp".into(),
        params: Preset::LinearNonCp { big_m: 1.0, gamma: 0.5 }.params(),
    };
    let text = serde_json::to_string(&preset).unwrap();
    assert_eq!(
        parse_spec_json(&text).unwrap(),
        Preset::LinearNonCp { big_m: 1.0, gamma: 0.5 }.expand().unwrap()
    );
}
