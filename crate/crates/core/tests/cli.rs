use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cavitrap(dir: &Path, task: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{task}.json"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cavitrap"))
        .arg(task)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or("");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn empty_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(dir.path(), "equilibrate", "", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "parse");
}

#[test]
fn unknown_keys_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(dir.path(), "equilibrate", r#"{"trap": {"omega_r_mhz": 0.5, "omega_z_mhz": 1}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_task_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(dir.path(), "teleport", r#"{"trap": {"omega_r_mhz": 0.5}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["exit_code"], 2);
}

#[test]
fn missing_task_params_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(dir.path(), "equilibrate", r#"{"trap": {"omega_r_mhz": 0.5}}"#, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "validation");

    let o = cavitrap(
        dir.path(),
        "modes",
        r#"{"trap": {"omega_r_mhz": 0.5}, "task": "equilibrate", "task_params": {"n_ions": 3}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(3));

    let o = cavitrap(dir.path(), "equilibrate", r#"{"trap": {"omega_r_mhz": -1}, "task_params": {"n_ions": 3}}"#, &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn single_configuration_has_no_barrier() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "barrier",
        r#"{"trap": {"omega_r_mhz": 0.5}, "task_params": {"n_ions": 2, "restarts": 5}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "compute");
}

const EQUILIBRATE_10: &str = r#"{
    "trap": {"omega_r_mhz": 0.5},
    "task": "Equilibrate",
    "task_params": {"n_ions": 10, "restarts": 20},
    "seed": 4
}"#;

#[test]
fn ten_ions_give_two_rings() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(dir.path(), "equilibrate", EQUILIBRATE_10, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("out/equilibria.csv"));
    let ring = rows[0].iter().position(|h| h == "ring_configuration").unwrap();
    assert_eq!(rows[1][ring], "2,8");
    assert_eq!(rows[1][2], "stable");
    let raw = fs::read_to_string(dir.path().join("out/equilibria.csv")).unwrap();
    assert!(raw.contains("\"2,8\""));

    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(dir.path().join("out").join(f.as_str().unwrap()).exists());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = cavitrap(d.path(), "equilibrate", EQUILIBRATE_10, &["--threads", "2"]);
        assert!(o.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.len() >= 2);
    for n in names {
        assert_eq!(
            fs::read(a.path().join("out").join(&n)).unwrap(),
            fs::read(b.path().join("out").join(&n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(dir.path(), "equilibrate", EQUILIBRATE_10, &["--seed", "11"]);
    assert!(o.status.success());
    let manifest: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(manifest["seed"], 11);
}

#[test]
fn modes_table_is_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "modes",
        r#"{"trap": {"omega_r_mhz": 0.5, "anisotropy": 0.1, "aspect_ratio": 4.0}, "task_params": {"n_ions": 10, "restarts": 20}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("out/modes.csv"));
    assert_eq!(rows[0], ["mode_index", "partition", "frequency_hz", "imaginary", "label"]);
    assert_eq!(rows.len(), 31);
    assert_eq!(rows[1][4], "COM");
    assert!(rows[2][4].starts_with("Tilt") && rows[3][4].starts_with("Tilt"));
    let ev: Value = serde_json::from_slice(&fs::read(dir.path().join("out/eigenvectors.json")).unwrap()).unwrap();
    assert_eq!(ev["modes"].as_array().unwrap().len(), 30);
}

#[test]
fn spin_task_writes_graph_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "spin",
        r#"{"trap": {"omega_r_mhz": 0.5, "aspect_ratio": 4.0},
            "task_params": {"n_ions": 6, "restarts": 10, "sweep_mu_over_omega_max": [1.01, 2.0, 10.0]}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let jij = read_csv(&dir.path().join("out/jij.csv"));
    assert_eq!(jij.len(), 7);
    assert_eq!(jij[0].len(), 7);
    let edges = read_csv(&dir.path().join("out/edges.csv"));
    assert_eq!(edges[0], ["i", "j", "r_m", "J_rad_per_s", "sign"]);
    assert_eq!(edges.len(), 16);
    let sweep = read_csv(&dir.path().join("out/beta_sweep.csv"));
    assert_eq!(sweep[0], ["mu_hz", "beta", "residual", "af_fraction"]);
    assert_eq!(sweep.len(), 4);
}

#[test]
fn lifetime_report_has_unit_keys() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "lifetime",
        r#"{"trap": {"omega_r_mhz": 0.5}, "task_params": {"n_ions": 20, "intensity_w_per_m2": 1.16e12}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("out/lifetime.json")).unwrap()).unwrap();
    for key in ["gamma_off_per_s", "gamma_meta_per_s", "tau_s"] {
        assert!(v["lifetime"][key].is_number(), "{key}");
    }
    for key in ["langevin_rate_per_s", "recoil_energy_j", "recoil_heating_rate_k_per_s", "background_pressure_pa"] {
        assert!(v["heating"][key].is_number(), "{key}");
    }
}

#[test]
fn table_one_with_explicit_waist() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "table-one",
        r#"{"trap": {"omega_r_mhz": 0.5}, "task_params": {"n_values": [5], "waists_um": [14.4], "restarts": 10}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("out/table1.csv"));
    assert_eq!(rows[0], ["row", "N=5"]);
    let labels: Vec<&str> = rows.iter().skip(1).map(|r| r[0].as_str()).collect();
    assert!(labels.contains(&"Ion configuration"));
    assert!(labels.contains(&"Minimum required laser power [W]"));
    assert_eq!(rows[2][1], "[5]");
    assert_eq!(rows[7][1], "14.4");
    assert!(!rows.iter().any(|r| r[1] == "ERROR"));
}

#[test]
fn transition_scan_fits_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "transition-scan",
        r#"{"trap": {"omega_r_mhz": 0.5, "waist_um": 100}, "task_params": {"n_values": [10, 14, 18], "restarts": 10}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("out/transition_scan.csv"));
    assert_eq!(rows[0], ["n_ions", "w0_m", "w0_over_rmax", "alpha_tr", "stability"]);
    assert_eq!(rows.len(), 4);
    let fit: Value = serde_json::from_slice(&fs::read(dir.path().join("out/power_law_fit.json")).unwrap()).unwrap();
    assert!(fit["exponent"].as_f64().unwrap() > 0.0);
}

#[test]
fn barrier_task_dumps_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavitrap(
        dir.path(),
        "barrier",
        r#"{"trap": {"omega_r_mhz": 0.5},
            "task_params": {"n_ions": 5, "restarts": 30, "n_paths": 2, "n_samples": 200}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("out/barrier_path_0.csv"));
    assert_eq!(
        rows[0],
        ["step", "distance_to_final_m", "energy_j", "energy_mk", "path_coordinate", "step_coordinate"]
    );
    assert_eq!(rows[1][3].parse::<f64>().unwrap(), 0.0);
    let s: Value = serde_json::from_slice(&fs::read(dir.path().join("out/barrier_summary.json")).unwrap()).unwrap();
    assert!(s["barrier_mk"].as_f64().unwrap() > 1.0);
}
