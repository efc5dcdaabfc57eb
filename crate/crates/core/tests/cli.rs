use std::fs;
use std::path::Path;
use std::process::Command;

fn q3d(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_q3d")).args(args).output().expect("binary runs")
}

const QUICK: [&str; 10] = [
    "--set", "refinement_level=0",
    "--set", "oracle_layers=20",
    "--set", "t_end=1e-3",
    "--set", "profile_times=5e-4",
    "--set", "vtk_z_samples=5",
];

fn run_into(dir: &Path, solver: &str) -> std::process::Output {
    let mut args = vec!["run", "--solver", solver, "--out", dir.to_str().unwrap()];
    args.extend(QUICK);
    q3d(&args)
}

#[test]
fn identical_configs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for solver in ["q3d", "ref3d"] {
        assert!(run_into(a.path(), solver).status.success());
        assert!(run_into(b.path(), solver).status.success());
        for f in [format!("probes_{solver}.csv"), format!("profiles_{solver}.csv"), format!("field_{solver}.vtk")] {
            let x = fs::read(a.path().join(&f)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, fs::read(b.path().join(&f)).unwrap(), "{f}");
        }
    }
    assert_eq!(fs::read(a.path().join("events_q3d.csv")).unwrap(), fs::read(b.path().join("events_q3d.csv")).unwrap());
}

#[test]
fn zero_duration_gives_single_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = q3d(&["run", "--out", dir.path().to_str().unwrap(), "--set", "t_end=0", "--set", "profile_times=0", "--set", "refinement_level=0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("probes_q3d.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_sha256="));
    assert_eq!(lines[1], "time_s,theta_hotspot_K,theta_neighbor_K");
    assert_eq!(lines[2..], ["0.0000000000000000e0,2.0000000000000000e0,2.0000000000000000e0"]);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.cfg");
    fs::write(&cfg, "# quick\nrefinement_level = 0\nt_end = 2e-4\nvtk_z_samples = 3\nprofile_times = 1e-4\n").unwrap();
    let out = q3d(&["run", "-c", cfg.to_str().unwrap(), "--set", "dt=1e-4", "-o", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let echo = fs::read_to_string(dir.path().join("config_resolved.txt")).unwrap();
    assert!(echo.contains("t_end = "));
    let probes = fs::read_to_string(dir.path().join("probes_q3d.csv")).unwrap();
    assert_eq!(probes.lines().count(), 2 + 3);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata_q3d.json")).unwrap()).unwrap();
    assert_eq!(meta["system_dimension"], meta["fe_nodes"].as_u64().unwrap() * 41);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(q3d(&["run", "--out", d, "--set", "q_hat=-1"]).status.code(), Some(1));
    assert_eq!(q3d(&["run", "--out", d, "--set", "no_such_key=1"]).status.code(), Some(1));
    assert_eq!(q3d(&["run", "--out", d, "--set", "q_hat"]).status.code(), Some(1));
    assert_eq!(q3d(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(q3d(&["run", "--config", "/nonexistent/q3d.cfg"]).status.code(), Some(1));
    // dt does not divide t_end
    assert_eq!(q3d(&["run", "--out", d, "--set", "t_end=1.5e-4", "--set", "refinement_level=0"]).status.code(), Some(1));
    // output below a regular file fails after the solve
    let file = dir.path().join("plain");
    fs::write(&file, "").unwrap();
    let blocked = file.join("out");
    let out = q3d(&["run", "--out", blocked.to_str().unwrap(), "--set", "t_end=0", "--set", "profile_times=0", "--set", "refinement_level=0"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "dt = 1e-4\nwhat is this\n").unwrap();
    let out = q3d(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn validate_reports_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["validate", "--out", dir.path().to_str().unwrap()];
    args.extend(QUICK);
    let out = q3d(&args);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("validation_summary.json")).unwrap()).unwrap();
    let passed = summary["passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 3 }));
    assert!(summary["coarse_oracle_difference"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "time_s,theta_q3d_K,theta_q3d_adapted_K,theta_ref3d_K,reldiff_q3d,reldiff_q3d_adapted");
    assert_eq!(csv.lines().count(), 2 + 11);
}

#[test]
fn threshold_failure_exits_with_3() {
    // a two-element spectral mesh of degree 1 cannot meet the limits
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["validate", "--out", dir.path().to_str().unwrap(), "--set", "se_elements=3", "--set", "se_degree=1"];
    args.extend(QUICK);
    assert_eq!(q3d(&args).status.code(), Some(3));
}

#[test]
fn mesh_export_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(q3d(&["mesh-export", "--out", d, "--set", "refinement_level=0"]).status.success());
    let vtk = fs::read_to_string(dir.path().join("mesh.vtk")).unwrap();
    assert!(vtk.contains("CELL_DATA 56"));
    let out = q3d(&["sweep", "--out", d, "--set", "sweep_levels=0,1", "--set", "oracle_layers=40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2 + 2);
    let runs = fs::read_to_string(dir.path().join("sweep_runs.csv")).unwrap();
    // one q3d row and six ref3d rows per level
    assert_eq!(runs.lines().count(), 2 + 2 * 7);
}
