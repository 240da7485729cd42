use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn soliton_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soliton-lab")).args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn soliton_check_fixture_passes() {
    let out = soliton_lab(&["soliton-check", "--Q", "1,0,0,2", "--a", "1,1", "--grid", "129", "--box", "-3,3"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["metrics"]["sup_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(s["checks"]["sup_residual"]["pass"], true);
    assert_eq!(s["input"]["grid"], 129);
}

#[test]
fn sign_condition_is_invalid_input() {
    let out = soliton_lab(&["ode1d", "--a0", "1", "--b0", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a0 * b0 > 0"));
    assert_eq!(summary(&out)["pass"], false);
}

#[test]
fn unperturbed_decay_trace_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = soliton_lab(&[
        "decay",
        "--eps",
        "0",
        "--grid",
        "16",
        "--T",
        "0.2",
        "--samples",
        "11",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,sup_D3u_sq,t_times_sup,lambda_min,lambda_max"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
    assert!(!csv.contains('\r'));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |dir: &Path| {
        soliton_lab(&["soliton-check", "--random", "3", "--seed", "7", "--grid", "33", "--out", path(dir)])
    };
    let (ra, rb) = (run(a.path()), run(b.path()));
    assert_eq!(ra.status.code(), Some(0));
    assert_eq!(ra.stdout, rb.stdout);
    for file in ["draws.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let other = soliton_lab(&["soliton-check", "--random", "3", "--seed", "8", "--grid", "33"]);
    assert_ne!(other.stdout, ra.stdout);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("flow.json");
    fs::write(&config, r#"{"experiment": "flow-verify", "grid": 17, "T": 0.01, "tol": 1e-30}"#).unwrap();

    let strict = soliton_lab(&["--config", path(&config)]);
    let s = summary(&strict);
    assert_eq!(s["experiment"], "flow-verify");
    assert_eq!(s["input"]["grid"], 17);

    let out = soliton_lab(&["flow-verify", "--config", path(&config), "--tol", "1e-8", "--grid", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["input"]["grid"], 9);
    assert_eq!(s["input"]["T"], 0.01);
    // the translating solution is reproduced to round-off, so the impossible tolerance decides
    let exact = s["metrics"]["sup_error"].as_f64().unwrap() == 0.0;
    assert_eq!(strict.status.code(), Some(if exact { 0 } else { 1 }));
}

#[test]
fn malformed_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_key.json", r#"{"experiment": "decay", "nodes": 3}"#),
        ("unknown_experiment.json", r#"{"experiment": "heat"}"#),
        ("no_experiment.json", r#"{"grid": 3}"#),
        ("broken.json", r#"{"experiment": "#),
    ];
    for (name, text) in cases {
        let file = dir.path().join(name);
        fs::write(&file, text).unwrap();
        assert_eq!(soliton_lab(&["--config", path(&file)]).status.code(), Some(2), "{name}");
    }
    assert_eq!(soliton_lab(&["rigidity", "--box", "5,-5"]).status.code(), Some(2));
    assert_eq!(soliton_lab(&["legendre-check", "--Q", "1,2,0,1"]).status.code(), Some(2));
    assert_eq!(soliton_lab(&["flow-verify", "--Q", "-1,0,0,1"]).status.code(), Some(2));
    assert_eq!(soliton_lab(&["decay", "--normalization", "half"]).status.code(), Some(2));
}

#[test]
fn failures_exit_with_one() {
    // raising c above the compatible value makes the solution blow up backward in time
    let out = soliton_lab(&["ode1d", "--c", "0.8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overflow at t"));

    let quartic = soliton_lab(&["rigidity", "--field", "quartic"]);
    assert_eq!(quartic.status.code(), Some(1));
    let s = summary(&quartic);
    assert_eq!(s["checks"]["psi_variation"]["pass"], false);
    assert!((s["metrics"]["psi_variation"].as_f64().unwrap() - 4.0 * 2f64.ln()).abs() < 1e-3);
}

#[test]
fn batch_runs_each_config_into_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut configs = Vec::new();
    for (name, body) in [
        ("ode", r#""experiment": "ode1d", "dt": 0.01"#),
        ("rig", r#""experiment": "rigidity", "order": 4"#),
        ("bad", r#""experiment": "ode1d", "b0": -1"#),
    ] {
        let out = dir.path().join(name);
        let file = dir.path().join(format!("{name}.json"));
        fs::write(&file, format!(r#"{{{body}, "out": "{}"}}"#, out.display())).unwrap();
        configs.push(file);
    }
    let mut args = vec!["batch"];
    args.extend(configs.iter().map(|c| path(c)));
    let out = soliton_lab(&args);
    assert_eq!(out.status.code(), Some(2));
    let docs: Vec<Value> =
        serde_json::Deserializer::from_slice(&out.stdout).into_iter().collect::<Result<_, _>>().unwrap();
    assert_eq!(docs.len(), 3);
    assert_eq!(docs[0]["pass"], true);
    assert_eq!(docs[1]["metrics"]["order"], 4);
    assert!(docs[2]["error"].as_str().unwrap().contains("a0 * b0 > 0"));
    assert!(dir.path().join("ode/profile.csv").exists());
    assert!(dir.path().join("rig/psi.csv").exists());
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn timing_is_opt_in() {
    let plain = summary(&soliton_lab(&["ode1d", "--dt", "0.01"]));
    assert!(plain.get("wall_clock_seconds").is_none());
    let timed = summary(&soliton_lab(&["ode1d", "--dt", "0.01", "--timing"]));
    assert!(timed["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}
