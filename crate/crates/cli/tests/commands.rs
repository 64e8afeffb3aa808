//! End-to-end checks of the `ccons` binary: reports, files written and the
//! exit-status contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use consensus_cli::reference::{self, GAIN_ASSIGNED};
use consensus_cli::scenario::{GainSection, Pole, ScenarioFile};
use serde_json::Value;
use tempfile::TempDir;

fn ccons(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccons")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, file: &ScenarioFile) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, file.to_json()).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn short(mut file: ScenarioFile, t_final: f64) -> ScenarioFile {
    file.t_final = t_final;
    file.step = 0.01;
    file
}

#[test]
fn analyze_coupled_reference() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "coupled.json", &reference::scenario(0.2, 0.2, GAIN_ASSIGNED));
    let out = ccons(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    for (got, want) in numbers(&report["margins"]).iter().zip([0.20, 0.19, 0.30, 0.38, 0.48]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    assert_eq!(report["disc_separation"], false);
    assert_eq!(report["ordering"], serde_json::json!([1, 0, 2, 3, 4]));
    assert!(report["k"].as_f64().unwrap() > 0.0);
}

#[test]
fn analyze_boundary_is_negative() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "edge.json", &reference::scenario(0.2, 0.39, GAIN_ASSIGNED));
    let out = ccons(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(numbers(&report["margins"])[1], 0.0);
    assert_eq!(report["k"], Value::Null);
}

#[test]
fn analyze_zero_coupling() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "zero.json", &reference::scenario(1.0, 0.0, GAIN_ASSIGNED));
    let report = stdout_json(&ccons(&["analyze", path.to_str().unwrap()]));
    assert_eq!(numbers(&report["margins"]), reference::BASE_SELF_GAINS.to_vec());
    assert_eq!(report["disc_separation"], true);
}

fn with_spec(s1: f64, sigma: f64) -> ScenarioFile {
    let mut file = reference::scenario(0.2, 0.2, GAIN_ASSIGNED);
    file.gain = GainSection::Spec {
        dominant_poles: vec![Pole::Real(s1)],
        sigmas: vec![sigma],
        v: Some(vec![vec![1.0]]),
    };
    file
}

#[test]
fn synthesize_reference_gains_and_round_trip() {
    let dir = TempDir::new().unwrap();
    for (s1, sigma, want, tol) in [(-0.19665, 0.9306, [-0.3660, 0.9306], 5e-5), (-0.1, 1.0, [-0.2, 1.0], 1e-12)] {
        let file = with_spec(s1, sigma);
        let path = write(dir.path(), "spec.json", &file);
        let out = ccons(&["synthesize", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let report = stdout_json(&out);
        let f = numbers(&report["f"][0]);
        assert!((f[0] - want[0]).abs() < tol && (f[1] - want[1]).abs() < tol, "{f:?}");
        assert_eq!(report["spectra"].as_array().unwrap().len(), 5);

        let written = std::fs::read_to_string(dir.path().join("spec.synthesized.json")).unwrap();
        let back = ScenarioFile::parse(&written).unwrap();
        let expected = ScenarioFile {
            gain: GainSection::Explicit { f: vec![f.clone()] },
            ..file
        };
        assert_eq!(back, expected);
    }
}

#[test]
fn synthesize_rejects_unstable_target() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "bad.json", &with_spec(0.0, 1.0));
    let out = ccons(&["synthesize", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("bad.synthesized.json").exists());
}

#[test]
fn synthesize_riccati_gain_with_certificate() {
    let dir = TempDir::new().unwrap();
    let mut file = reference::scenario(0.2, 0.2, GAIN_ASSIGNED);
    file.gain = GainSection::Theorem1 {
        q: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    let path = write(dir.path(), "riccati.json", &file);
    let out = ccons(&["synthesize", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = &stdout_json(&out)["certificate"];
    assert_eq!(cert["passed"], true);
    assert_eq!(cert["frequencies_checked"], 201);
    assert!(cert["riccati_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn run_writes_full_precision_csv() {
    let dir = TempDir::new().unwrap();
    let path = write(dir.path(), "run.json", &short(reference::scenario(0.2, 0.2, GAIN_ASSIGNED), 3.0));
    let out = ccons(&[
        "run",
        path.to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
        "--threshold",
        "0.5",
        "--threshold",
        "2.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 2 * 6 + 2);
    assert_eq!(header[..3], ["t", "x0_1", "x0_2"]);
    assert_eq!(header[header.len() - 2..], ["phi", "psi"]);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 301);
    assert!(rows.iter().all(|r| r.len() == header.len() && r.iter().all(|v| v.is_finite())));
    assert_eq!(rows[0][header.len() - 2], 3.0);
    assert_eq!(rows[0][header.len() - 1], 6.0);

    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.report.json")).unwrap()).unwrap();
    assert_eq!(sidecar["samples"], 301);
    assert_eq!(sidecar["block_spectrum"].as_array().unwrap().len(), 10);
    assert_eq!(sidecar["crossings"].as_array().unwrap().len(), 4);
    assert!(sidecar["phi_ratio"].as_f64().unwrap() < 1.0);
}

#[test]
fn run_on_consensus_manifold_is_flat() {
    let dir = TempDir::new().unwrap();
    let mut file = short(reference::scenario(0.2, 0.2, GAIN_ASSIGNED), 1.0);
    file.initial.agents = vec![file.initial.leader.clone(); 5];
    let path = write(dir.path(), "flat.json", &file);
    assert_eq!(ccons(&["run", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]).status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("flat.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[v.len() - 2..], [0.0, 0.0]);
    }
}

#[test]
fn run_divergence_flushes_partial_csv() {
    let dir = TempDir::new().unwrap();
    let mut file = short(reference::scenario(0.2, 0.2, GAIN_ASSIGNED), 50.0);
    file.gain = GainSection::Explicit { f: vec![vec![5.0, -5.0]] };
    let path = write(dir.path(), "boom.json", &file);
    let out = ccons(&["run", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    let t = report["diverged_at"].as_f64().unwrap();
    assert!(t > 0.0 && t < 50.0);
    let rows = std::fs::read_to_string(dir.path().join("boom.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows as u64, report["samples"].as_u64().unwrap());
    assert!(rows < 5001);
}

#[test]
fn parse_errors_carry_position() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"plant\": {\n    \"n\": 2,,\n  }\n}\n").unwrap();
    let out = ccons(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.json:3:"), "{err}");
}

#[test]
fn validation_errors_carry_line() {
    let dir = TempDir::new().unwrap();
    let mut file = reference::scenario(0.2, 0.2, GAIN_ASSIGNED);
    file.coupling.adjacency[0][1] = -1.0;
    let path = write(dir.path(), "negative.json", &file);
    let out = ccons(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    let text = std::fs::read_to_string(&path).unwrap();
    let line = text.lines().position(|l| l.contains("\"adjacency\"")).unwrap() + 1;
    assert!(err.contains(&format!("negative.json:{line}:")), "{err}");
    assert!(err.contains("adjacency[0][1]"), "{err}");
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(ccons(&["reproduce", "fig9", "--output-dir", dir.path().to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(ccons(&["analyze", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(ccons(&["frobnicate"]).status.code(), Some(2));
    let path = write(dir.path(), "explicit.json", &reference::scenario(0.2, 0.2, GAIN_ASSIGNED));
    assert_eq!(ccons(&["synthesize", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reproduce_writes_bundle() {
    let dir = TempDir::new().unwrap();
    let out = ccons(&[
        "reproduce",
        "fig4",
        "--output-dir",
        dir.path().to_str().unwrap(),
        "--t-final",
        "2",
        "--step",
        "0.01",
    ]);
    // two seconds is far too short for either case to settle
    assert_eq!(out.status.code(), Some(1));
    for name in ["fig4_uncoupled.csv", "fig4_coupled.csv", "fig4_summary.json", "fig4_summary.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let summary = stdout_json(&out);
    assert_eq!(summary["cases"].as_array().unwrap().len(), 2);
    assert_eq!(summary["ordering_reproduced"], false);
}

#[test]
fn example_is_a_valid_scenario() {
    let out = ccons(&["example", "uncoupled"]);
    assert_eq!(out.status.code(), Some(0));
    let file: ScenarioFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(file, reference::scenario(0.12, 0.0, GAIN_ASSIGNED));
}
