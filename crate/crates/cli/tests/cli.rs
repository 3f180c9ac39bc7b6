use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn petrowave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petrowave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn small(extra: Value) -> Value {
    let mut base = json!({
        "schema_version": 1,
        "basis": {"length": 1.0, "modes": 4},
        "coupling": {"constant": 0.3},
        "initial": {"u1": {"modes": [0.05]}, "u2": {"modes": [1.0]}, "v2": {"modes": [-1.0]}},
        "dt": 1e-3,
        "t_end": 0.5,
        "sample_stride": 10
    });
    json_merge(&mut base, extra);
    base
}

fn json_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    b.remove(&k);
                } else {
                    json_merge(b.entry(k).or_insert(Value::Null), v);
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_and_rejects_couplings() {
    let tmp = TempDir::new().unwrap();
    let ok = write_config(tmp.path(), "ok.json", &small(json!({"coupling": {"constant": 0.9}})));
    let bad = write_config(tmp.path(), "bad.json", &small(json!({"coupling": {"constant": 1.2}})));
    let out = tmp.path().join("ok");
    assert_eq!(code(&petrowave(&["check", "--config", s(&ok), "--out", s(&out)])), 0);
    assert_eq!(read_json(&out.join("hypotheses.json"))["all_passed"], true);

    let out = tmp.path().join("bad");
    let res = petrowave(&["check", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&res), 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("coupling_sup_bound"));
    let report = read_json(&out.join("hypotheses.json"));
    assert_eq!(report["all_passed"], false);

    let forced = petrowave(&["check", "--config", s(&bad), "--out", s(&out), "--force"]);
    assert_eq!(code(&forced), 0);
    assert_eq!(read_json(&out.join("hypotheses.json"))["all_passed"], false);
}

#[test]
fn malformed_configs_exit_2() {
    let tmp = TempDir::new().unwrap();
    let unknown = write_config(tmp.path(), "unknown.json", &small(json!({"dtt": 1})));
    let res = petrowave(&["simulate", "--config", s(&unknown), "--out", s(tmp.path())]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("dtt") && err.contains("line"), "{err}");

    let broken = tmp.path().join("broken.json");
    fs::write(&broken, "{\"schema_version\": 1,").unwrap();
    assert_eq!(code(&petrowave(&["check", "--config", s(&broken)])), 2);

    let unstable = write_config(tmp.path(), "unstable.json", &small(json!({"dt": 0.5})));
    assert_eq!(code(&petrowave(&["simulate", "--config", s(&unstable), "--out", s(tmp.path())])), 2);

    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&petrowave(&["check", "--config", s(&missing)])), 2);
}

#[test]
fn zero_length_run_writes_single_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small(json!({"t_end": 0.0})));
    let out = tmp.path().join("out");
    assert_eq!(code(&petrowave(&["simulate", "--config", s(&cfg), "--out", s(&out)])), 0);
    for file in ["energy.csv", "states.csv"] {
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().count(), 2, "{file}: {text}");
    }
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,E,dissipation,lower_bound"));
    let states = fs::read_to_string(out.join("states.csv")).unwrap();
    assert!(states.starts_with("t,u1_1,u1_2,u1_3,u1_4,u2_1"));
}

#[test]
fn simulate_is_bit_for_bit_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &small(json!({"damping": {"law": {"kind": "power_log", "p": 3, "q": 0}, "c_g": 0.25}})),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&petrowave(&["simulate", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(code(&petrowave(&["simulate", "--config", s(&cfg), "--out", s(&b)])), 0);
    for file in ["energy.csv", "states.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let (ma, mb) = (read_json(&a.join("manifest.json")), read_json(&b.join("manifest.json")));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["manifest_sha256"], mb["manifest_sha256"]);
    assert!(ma["drift"]["relative_drift"].as_f64().unwrap() > 0.0);
    assert!(ma["drift"]["max_relative_increase"].as_f64().unwrap() < 1e-12);
}

#[test]
fn divergence_exits_4_with_partial_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &small(json!({
            "damping": {"law": {"kind": "table", "points": [[0.0, 0.0], [1.0, -1000.0]]}, "bounds": {"tau2": 1.0}},
            "t_end": 5.0
        })),
    );
    let out = tmp.path().join("out");
    let res = petrowave(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 4, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("energy.csv").exists());
    assert_eq!(read_json(&out.join("manifest.json"))["status"], "diverged");
}

#[test]
fn envelope_matches_closed_form_without_a_trace() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &small(json!({"decay": {"e0": 1.0, "grid_end": 10.0, "grid_points": 11}})),
    );
    let out = tmp.path().join("out");
    assert_eq!(code(&petrowave(&["envelope", "--config", s(&cfg), "--out", s(&out)])), 0);
    let text = fs::read_to_string(out.join("envelope.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 11);
    for (t, v) in rows {
        let expected = if t <= 1.0 { 1.0 } else { (1.0 - t).exp() };
        assert!(((v - expected) / expected).abs() < 1e-9, "t = {t}: {v} vs {expected}");
    }
    let rate = read_json(&out.join("rate.json"));
    assert_eq!(rate["descriptor"]["branch"], "exponential");
}

#[test]
fn envelope_reports_double_exponential_branch() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &small(json!({
            "damping": {"law": {"kind": "power_log", "p": 1, "q": 1}, "epsilon": 0.3, "c_g": 0.25},
            "decay": {"e0": 1.0, "eps0": 0.01, "grid_end": 5.0, "grid_points": 6},
            "dt": 1e-4
        })),
    );
    let out = tmp.path().join("out");
    let res = petrowave(&["envelope", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rate = read_json(&out.join("rate.json"));
    assert_eq!(rate["descriptor"]["branch"], "double_exp");
    assert_eq!(rate["descriptor"]["template"], "ce^{-e^t}");
}

#[test]
fn envelope_errors() {
    let tmp = TempDir::new().unwrap();
    let no_e0 = write_config(tmp.path(), "a.json", &small(json!({})));
    assert_eq!(code(&petrowave(&["envelope", "--config", s(&no_e0), "--out", s(tmp.path())])), 2);

    let uncovered = write_config(
        tmp.path(),
        "b.json",
        &small(json!({
            "damping": {"law": {"kind": "power_log", "p": 1, "q": 2}, "epsilon": 0.1, "c_g": 0.25},
            "decay": {"e0": 1.0, "eps0": 0.01, "grid_end": 1.0, "grid_points": 3},
            "dt": 1e-5
        })),
    );
    let out = tmp.path().join("uncovered");
    let res = petrowave(&["envelope", "--config", s(&uncovered), "--out", s(&out)]);
    assert_eq!(code(&res), 5, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(read_json(&out.join("rate.json"))["error"].is_string());
}

fn synthetic_trace(dir: &Path, f: impl Fn(f64) -> f64) -> PathBuf {
    let path = dir.join("trace.csv");
    let mut text = String::from("t,E\n");
    for i in 0..=100 {
        let t = 0.1 * i as f64;
        text.push_str(&format!("{t:e},{:e}\n", f(t)));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_on_synthetic_exponential() {
    let tmp = TempDir::new().unwrap();
    let trace = synthetic_trace(tmp.path(), |t| 3.0 * (-0.7 * t).exp());
    let out = tmp.path().join("out");
    let res = petrowave(&["fit", "--trace", s(&trace), "--model", "exponential", "--window", "2,10", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let fit = read_json(&out.join("fit.json"));
    assert!((fit["fit"]["rate"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert!((fit["fit"]["c"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert!((fit["omega"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert_eq!(fit["dominance"]["holds"], true);
    assert!(out.join("comparison.csv").exists());
}

#[test]
fn fit_reports_dominance_violation() {
    let tmp = TempDir::new().unwrap();
    let trace = synthetic_trace(tmp.path(), |t| (-t).exp());
    let out = tmp.path().join("out");
    let res = petrowave(&["fit", "--trace", s(&trace), "--window", "2,10", "--constant", "0.1", "--out", s(&out)]);
    assert_eq!(code(&res), 6);
    let fit = read_json(&out.join("fit.json"));
    assert_eq!(fit["dominance"]["holds"], false);
    assert!((fit["dominance"]["worst_ratio"].as_f64().unwrap() - 10.0 / std::f64::consts::E).abs() < 1e-6);
}

#[test]
fn full_pipeline_on_a_damped_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &small(json!({
            "coupling": {"constant": 0.0},
            "initial": {"u1": null, "v2": null},
            "damping": {"law": {"kind": "linear", "gain": 1.0}},
            "dt": 1e-3,
            "t_end": 8.0,
            "sample_stride": 50,
            "decay": {"omega": "fit"},
            "fit": {"model": "exponential", "window": {"t_min": 4.0, "t_max": 8.0}}
        })),
    );
    let out = tmp.path().join("out");
    let trace = out.join("energy.csv");
    for args in [
        vec!["check", "--config", s(&cfg), "--out", s(&out)],
        vec!["simulate", "--config", s(&cfg), "--out", s(&out)],
        vec!["envelope", "--config", s(&cfg), "--trace", s(&trace), "--out", s(&out)],
        vec!["fit", "--config", s(&cfg), "--trace", s(&trace), "--out", s(&out)],
    ] {
        let res = petrowave(&args);
        assert_eq!(code(&res), 0, "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let fit = read_json(&out.join("fit.json"));
    // slow root of c'' + λc' + λc = 0 for the first wave mode
    let lambda = std::f64::consts::PI.powi(2);
    let slow = (lambda - (lambda * lambda - 4.0 * lambda).sqrt()) / 2.0;
    assert!((fit["fit"]["rate"].as_f64().unwrap() - 2.0 * slow).abs() < 1e-6);
}

#[test]
fn sweep_runs_entries_in_parallel() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "base.json", &small(json!({})));
    let spec = write_config(
        tmp.path(),
        "spec.json",
        &json!({
            "commands": ["check", "simulate"],
            "entries": [
                {"name": "low", "patch": {"coupling": {"constant": 0.1}}},
                {"name": "mid", "patch": {"coupling": {"constant": 0.5}}},
                {"name": "high", "patch": {"coupling": {"constant": 1.2}}}
            ]
        }),
    );
    let out = tmp.path().join("sweep");
    let res = petrowave(&["sweep", "--config", s(&cfg), "--spec", s(&spec), "--jobs", "3", "--out", s(&out)]);
    assert_eq!(code(&res), 3);
    assert!(out.join("low/energy.csv").exists() && out.join("mid/energy.csv").exists());
    assert!(!out.join("high/energy.csv").exists());
    let summary = read_json(&out.join("sweep.json"));
    let text = summary.to_string();
    assert!(text.contains("low") && text.contains("high"));

    let ok_spec = write_config(
        tmp.path(),
        "ok.json",
        &json!({"entries": [{"name": "only", "patch": {}}]}),
    );
    let res = petrowave(&["sweep", "--config", s(&cfg), "--spec", s(&ok_spec), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}
