use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wentzell(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_wentzell"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const WEAK: &str = r#"{"operator":"divergence","coefficient":{"x0":0.5,"K":0.5},
    "wentzell":{"beta0":1,"beta1":1,"gamma0":0,"gamma1":0},"time":{"T":1.0},"mesh":{"n":8}}"#;

#[test]
fn run_steady_state_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = wentzell(&["run"], WEAK, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("out/summary.json"));
    for key in [
        "operator", "class", "n", "dt", "T", "final_norm_mu_sq", "sup_norm_mu_sq", "energy_integral",
        "contraction_ok", "energy_bound_ok",
    ] {
        assert!(s.get(key).is_some(), "summary lacks {key}");
    }
    assert_eq!(s["class"], "weak");
    assert_eq!(s["contraction_ok"], true);
    let (a, b) = (s["initial_norm_mu_sq"].as_f64().unwrap(), s["final_norm_mu_sq"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12);
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("step,t,norm_mu_sq,energy_form,slack\n"));
}

#[test]
fn verify_green_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = wentzell(&["verify", "--suite", "green"], WEAK, dir.path());
    assert!(out.status.success());
    let r = json(&dir.path().join("out/verification.json"));
    assert_eq!(r["suite"], "green");
    assert_eq!(r["passed"], true);
    assert!(r["checks"].as_array().unwrap().len() >= 12);
}

#[test]
fn spectrum_shows_affine_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = wentzell(&["spectrum"], WEAK, dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    let eig: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    let report = json(&dir.path().join("out/spectrum.json"));
    let lmax = report["checks"][0]["values"]["max_eigenvalue"].as_f64().unwrap();
    assert!(eig[0].abs() <= 1e-9 * lmax && eig[1].abs() <= 1e-9 * lmax);
    assert!(eig[2] > 1e-9 * lmax);
}

#[test]
fn resolvent_reports_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = WEAK.replace("\"mesh\"", "\"resolvent\":{\"lambda\":1,\"f\":\"linear\"},\"mesh\"");
    let out = wentzell(&["resolvent"], &cfg, dir.path());
    assert!(out.status.success());
    let r = json(&dir.path().join("out/resolvent.json"));
    assert!(r["residual"].as_f64().unwrap() <= 1e-10);
    // f = x lies in the kernel, so u = x
    let csv = fs::read_to_string(dir.path().join("out/resolvent.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let c: Vec<&str> = line.split(',').collect();
        let (x, v): (f64, f64) = (c[1].parse().unwrap(), c[3].parse().unwrap());
        let want = if c[2] == "value" { x } else { 1.0 };
        assert!((v - want).abs() < 1e-12, "{line}");
    }
}

#[test]
fn invalid_configs_exit_nonzero_with_diagnostic() {
    for (text, key) in [
        (WEAK.replace("\"gamma0\":0", "\"gamma0\":0.5"), "wentzell.gamma0"),
        (
            WEAK.replace("\"divergence\"", "\"nondivergence\"").replace("\"K\":0.5", "\"K\":2.5"),
            "coefficient.K",
        ),
        (WEAK.replace("\"T\":1.0", "\"T\":1.0,\"steps\":3"), "time.steps"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = wentzell(&["run"], &text, dir.path());
        assert_eq!(out.status.code(), Some(2));
        let e = json(&dir.path().join("out/error.json"));
        assert_eq!(e["key"], key);
        assert_eq!(e["error"], "config");
    }
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let cfg = r#"{"operator":"nondivergence","coefficient":{"x0":0.4,"K":1.25},
        "wentzell":{"beta0":2,"beta1":0.5,"gamma0":-1,"gamma1":0},
        "time":{"T":0.5,"dt":0.01,"scheme":"crank_nicolson"},"mesh":{"n":12},
        "initial":"random","forcing":{"kind":"separable","time":{"kind":"linear"},"space":"random"}}"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for sub in ["run", "spectrum", "resolvent"] {
        let oa = wentzell(&[sub, "--seed", "11", "--threads", "4"], cfg, a.path());
        let ob = wentzell(&[sub, "--seed", "11"], cfg, b.path());
        assert_eq!(oa.status.code(), ob.status.code());
    }
    let oa = wentzell(&["verify", "--suite", "norms", "--seed", "5"], cfg, a.path());
    let ob = wentzell(&["verify", "--suite", "norms", "--seed", "5", "--threads", "3"], cfg, b.path());
    assert!(oa.status.success() && ob.status.success());
    let mut names: Vec<_> = fs::read_dir(a.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7, "{names:?}");
    for name in names {
        let x = fs::read(a.path().join("out").join(&name)).unwrap();
        let y = fs::read(b.path().join("out").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}
