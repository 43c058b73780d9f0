use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn qtraj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtraj")).args(args).output().expect("binary runs")
}

fn run_in(cmd: &str, file: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, file.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    qtraj(&args)
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.in.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn grommer_run_traces_sinusoids() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("run", &scenario("grommer-oscillators.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("trajectory.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "q1", "q2", "v1", "v2", "s1", "s2"]);
    let mut worst: f64 = 0.0;
    for row in reader.records() {
        let row = row.unwrap();
        let t: f64 = row[0].parse().unwrap();
        for k in 1..=2 {
            worst = worst.max((row[k].parse::<f64>().unwrap() - t.sin()).abs());
        }
    }
    assert!(worst < 1e-6, "{worst}");
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(sidecar["termination"], "completed");
}

#[test]
fn einstein_coupling_diagnosis() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("diagnose", &scenario("einstein-coupling.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"]["coupling"], "coupled");
    assert_eq!(report["verdicts"]["covariance"], "covariant");
    assert_eq!(report["law"], "einstein");
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["fractions", "grid", "law", "state", "statistics", "verdicts"]);
    let w = report["fractions"]["probability_weight"].as_f64().unwrap();
    assert!((w - (1.0 - (-1.0f64).exp())).abs() < 1e-3);
}

#[test]
fn grommer_coupling_diagnosis() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("diagnose", &scenario("grommer-coupling.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"]["coupling"], "uncoupled");
    assert_eq!(report["verdicts"]["divergence"], "not_conserved");
}

#[test]
fn unknown_law_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), r#"{"state": {"id": "ho"}, "law": "pilot", "initial": {"q0": [0]}}"#);
    let out = qtraj(&["validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("law") && err.contains("pilot"), "{err}");
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), r#"{"state": {"id": "ho"}, "law": "flat", "integrator": {"steps": 4}}"#);
    let out = qtraj(&["run", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("integrator") && err.contains("steps"), "{err}");
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), r#"{"state": {"id": "ho"}, "law": "flat", "initial": {"q0": [0.2]}}"#);
    let out = qtraj(&["validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let echoed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echoed["state"]["hbar"], 1.0);
    assert_eq!(echoed["integrator"]["dt"], 0.001);
    assert_eq!(echoed["chart"], "native");
    assert_eq!(echoed["seed"], 0);
}

#[test]
fn leaving_the_domain_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("run", &scenario("einstein-outside.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(sidecar["termination"], "left_admissible_domain");
}

#[test]
fn outputs_are_byte_identical_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(
        dir.path(),
        r#"{"state": {"id": "hosup:levels=0|1"}, "law": "rotor",
            "initial": {"q0": [0.0], "angles": [1.0, 0.0, 0.0]},
            "integrator": {"dt": 0.01, "t_max": 0.3},
            "diagnostics": ["ensemble"], "probe": {"samples": 1000}, "seed": 4}"#,
    );
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        assert_eq!(run_in("ensemble", &p, out, &[]).status.code(), Some(0));
        assert_eq!(run_in("diagnose", &p, out, &[]).status.code(), Some(0));
    }
    assert_eq!(run_in("ensemble", &p, &c, &["--seed", "5"]).status.code(), Some(0));
    for f in ["ensemble.csv", "ensemble.json", "report.json", "scenario.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("ensemble.csv")).unwrap(), fs::read(c.join("ensemble.csv")).unwrap());
    let echoed: serde_json::Value = serde_json::from_slice(&fs::read(c.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(echoed["seed"], 5);
}

#[test]
fn quiet_suppresses_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let file = scenario("flat-divergence.json");
    let loud = qtraj(&["diagnose", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!loud.stdout.is_empty());
    let quiet = run_in("diagnose", &file, dir.path(), &[]);
    assert!(quiet.stdout.is_empty());
}

#[test]
fn rotor_path_and_mean_flow() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in("run", &scenario("rotor-path.json"), dir.path(), &[]).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert!(text.starts_with("t,x1,alpha,beta,gamma\n"));
    assert_eq!(run_in("diagnose", &scenario("rotor-mean-flow.json"), dir.path(), &[]).status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"]["dbb"], "mean_flow_matches");
    assert_eq!(report["verdicts"]["continuity"], "satisfied");
}

#[test]
fn every_scenario_validates() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let out = qtraj(&["validate", path.to_str().unwrap(), "--quiet"]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}
