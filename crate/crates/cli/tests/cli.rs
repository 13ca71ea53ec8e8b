use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn polaron(dir: &Path, args: &[&str], config: Option<Value>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_polaron"));
    cmd.args(args).arg("--out").arg(dir.join("out")).env("RUST_LOG", "warn");
    if let Some(cfg) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, cfg.to_string()).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn model(gamma: f64, beta: f64) -> Value {
    json!({
        "spin_boson": {"epsilon": 1.0, "h": 1.0},
        "bath": {"beta": beta, "spectral_density": {"type": "super_ohmic", "gamma": gamma, "omega_c": 1.0}}
    })
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(file)).unwrap()
}

fn json_file(dir: &Path, file: &str) -> Value {
    serde_json::from_str(&read(dir, file)).unwrap()
}

#[test]
fn unknown_config_fields_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = polaron(dir.path(), &["evolve"], Some(json!({"model": model(0.1, 1.0), "metod": "redfield"})));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metod"));
}

#[test]
fn missing_sections_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(polaron(dir.path(), &["evolve"], None).status.code(), Some(1));
    let no_time = polaron(dir.path(), &["evolve"], Some(json!({"model": model(0.1, 1.0)})));
    assert_eq!(no_time.status.code(), Some(1));
}

#[test]
fn numeric_failures_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    // Without coupling every diagonal state is stationary.
    let out = polaron(dir.path(), &["steady"], Some(json!({"model": model(0.0, 1.0)})));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evolve_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"model": model(0.1, 1.0), "method": "pt-redfield", "time": {"t_max": 2.0, "steps": 20}});
    let out = polaron(dir.path(), &["evolve"], Some(cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "evolve.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,re_sigma_z,trace,min_eig");
    assert_eq!(lines.len(), 22);
    assert!(lines[1].starts_with("0,1,1,"));
    let side = json_file(dir.path(), "evolve.json");
    assert_eq!(side["command"], "evolve");
    assert_eq!(side["rows"], 21);
    assert_eq!(side["config"]["method"], "pt-redfield");
    assert_eq!(side["extra"]["method"], "pt-redfield");
}

#[test]
fn gap_units_rescale_the_time_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"model": model(0.1, 2.8), "units": "gap", "time": {"t_max": 8.0, "steps": 4}});
    assert!(polaron(dir.path(), &["evolve"], Some(cfg)).status.success());
    let csv = read(dir.path(), "evolve.csv");
    assert!(csv.lines().last().unwrap().starts_with("8,"), "{csv}");
}

#[test]
fn scans_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model": model(0.1, 1.0),
        "methods": ["pt-ccqme", "redfield"],
        "grid": {"gammas": [0.0, 0.2], "betas": {"start": 1.0, "stop": 2.0, "count": 2}},
        "time": {"t_max": 5.0, "steps": 50}
    });
    let run = |args: &[&str], file: &str| {
        let out = polaron(dir.path(), args, Some(cfg.clone()));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        read(dir.path(), file)
    };
    let a = run(&["gap-scan", "--workers", "2"], "gap_scan.csv");
    let b = run(&["gap-scan", "--workers", "1"], "gap_scan.csv");
    assert_eq!(a, b);
    assert!(a.starts_with("method,gamma,beta,gap,re_mu1,im_mu1,error\n"));
    assert_eq!(a.lines().count(), 1 + 8);

    let strip = |s: String| -> Vec<String> {
        s.lines().map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 5).map(|(_, c)| c).collect::<Vec<_>>().join(",")).collect()
    };
    let p = run(&["positivity-scan"], "positivity.csv");
    let q = run(&["positivity-scan", "--workers", "3"], "positivity.csv");
    assert_eq!(strip(p.clone()), strip(q));
    let mut rows = csv::Reader::from_reader(p.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>(), ["method", "gamma", "beta", "min_eig", "gap", "runtime_ms", "error"]);
    for r in rows.records() {
        let r = r.unwrap();
        if &r[1] == "0" {
            assert!(r[3].parse::<f64>().unwrap() >= -1e-10);
        }
    }
}

#[test]
fn presets_supply_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = polaron(dir.path(), &["frame", "--preset", "fig2"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let f = json_file(dir.path(), "frame.json");
    for key in ["tildeHS", "kappa", "eigenvalues", "deltaE21"] {
        assert!(f.get(key).is_some(), "{key}");
    }
    let e = f["eigenvalues"].as_array().unwrap();
    let gap = e[1].as_f64().unwrap() - e[0].as_f64().unwrap();
    assert!((f["deltaE21"].as_f64().unwrap() - gap).abs() < 1e-12);
    assert!(f["kappa"][0][1].as_f64().unwrap() < 1.0);
}

#[test]
fn generator_dumps_complex_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = polaron(dir.path(), &["generator"], Some(json!({"model": model(0.3, 1.0)})));
    assert!(out.status.success());
    let g = json_file(dir.path(), "generator.json");
    assert_eq!(g["method"], "pt-ccqme");
    for key in ["R", "Q", "L"] {
        let m = g[key].as_array().unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.iter().all(|row| row.as_array().unwrap().len() == 4));
        assert_eq!(m[0][0].as_array().unwrap().len(), 2);
    }
    let redfield = polaron(dir.path(), &["generator"], Some(json!({"model": model(0.3, 1.0), "method": "redfield"})));
    assert!(redfield.status.success());
    assert!(json_file(dir.path(), "generator.json")["Q"].is_null());
}

#[test]
fn oracle_mirrors_evolve_with_engine_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"model": model(0.05, 1.0), "time": {"t_max": 1.0, "steps": 10}, "oracle": {"modes": 2, "cutoff": 3}});
    let out = polaron(dir.path(), &["oracle"], Some(cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "oracle.csv");
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>(), ["engine", "t", "re_sigma_z", "trace", "min_eig"]);
    let first = rows.records().next().unwrap().unwrap();
    assert_eq!(&first[0], "ed");
    assert!((first[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(json_file(dir.path(), "oracle.json")["extra"]["dimension"], 18);
}

#[test]
fn oracle_dimension_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"model": model(0.05, 1.0), "time": {"t_max": 1.0, "steps": 10}, "oracle": {"modes": 7, "cutoff": 4}});
    let out = polaron(dir.path(), &["oracle"], Some(cfg));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4096"));
}

#[test]
fn correlation_and_steady_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"model": model(0.2, 1.0), "taus": [0.0, 1.0]});
    assert!(polaron(dir.path(), &["correlation"], Some(cfg.clone())).status.success());
    let c = read(dir.path(), "correlation.csv");
    assert!(c.starts_with("channel,tau,re_c,im_c\n"));
    assert_eq!(c.lines().count(), 1 + 4 * 2 + 2);
    assert!(read(dir.path(), "transform.csv").starts_with("channel,lambda,re_w,im_w,re_dw,im_dw\n"));

    assert!(polaron(dir.path(), &["steady"], Some(cfg)).status.success());
    let s = json_file(dir.path(), "steady.json");
    let z = s["sigma_z"].as_f64().unwrap();
    assert!(z < 0.0 && z > -1.0);
    assert!(s["mfg"]["rho"].is_array());
}

#[test]
fn dynamics_compare_writes_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model": model(0.1, 1.0),
        "units": "gap",
        "methods": ["pt-ccqme"],
        "grid": {"gammas": [0.05], "betas": [1.4]},
        "time": {"t_max": 4.0, "steps": 8}
    });
    assert!(polaron(dir.path(), &["dynamics-compare"], Some(cfg)).status.success());
    assert!(read(dir.path(), "dynamics.csv").starts_with("method,gamma,beta,t,re_sigma_z,unphysical,error\n"));
    let a = read(dir.path(), "anchors.csv");
    assert!(a.starts_with("gamma,beta,weak_gibbs,strong_mfg\n0.05,1.4,"));
}

#[test]
fn validate_honors_tolerance_overrides_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = polaron(dir.path(), &["validate"], Some(json!({"tolerances": {"tensor_agreement": 0.0}})));
    assert_eq!(out.status.code(), Some(3));
    let report = json_file(dir.path(), "validate.json");
    assert_eq!(report["passed"], false);
    let failed: Vec<&str> =
        report["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(failed, ["tensor_agreement"]);
}
