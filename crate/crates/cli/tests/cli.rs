use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnls")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.ini");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_GROUND: &str = "[ground]\nn_r = 48\nn_z = 96\nr_max = 6\nz_max = 120\n";

#[test]
fn constants_writes_hashed_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "[spectral]\nn_r = 64\nn_z = 64\nextents = 4, 8\nfloor_tol = 0.01\n");
    let o = cnls(&["constants", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let hash = m["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for name in ["records.jsonl", "summary.csv", "spectral_floor.dat", "soliton_profile.dat"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert!(text.contains(&hash), "{name} lacks the config hash");
        assert!(m["files"][name].is_string(), "{name} missing from the manifest");
    }
    let first: Value = serde_json::from_str(fs::read_to_string(out.join("records.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["record"], "constants");
    assert!((first["lambda0"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_exponent_fails_before_any_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "[problem]\np = 2\n");
    let o = cnls(&["ground", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unusable_output_directory_leaves_nothing_behind() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let cfg = write_config(tmp.path(), "[spectral]\nn_r = 32\nn_z = 32\nextents = 4, 8\n");
    let o = cnls(&["constants", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("creating output directory"));
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 2, "only the config and the blocking file remain");
}

#[test]
fn failed_check_sets_exit_status_and_lists_it() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &format!("{SMALL_GROUND}pohozaev_tol = 1e-14\n"));
    let o = cnls(&["ground", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(&out);
    assert_eq!(m["passed"], false);
    assert!(m["failures"].as_array().unwrap().iter().any(|f| f == "ground_pohozaev"));
}

#[test]
fn ground_runs_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_GROUND);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let o = cnls(&["ground", "--config", &cfg, "--out", d.to_str().unwrap(), "--threads", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let names: Vec<String> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.len() >= 6);
    for n in names {
        assert_eq!(fs::read(dirs[0].join(&n)).unwrap(), fs::read(dirs[1].join(&n)).unwrap(), "{n} differs");
    }
}

#[test]
fn grid_flag_enters_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), SMALL_GROUND);
    let o = cnls(&["ground", "--config", &cfg, "--grid", "40x80", "--out", out.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["config"]["ground"]["n_r"], 40);
    assert_eq!(m["config"]["ground"]["n_z"], 80);
    let bad = cnls(&["ground", "--grid", "40", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn mu_sweep_reports_the_slope() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "[sweep]\nmus = 0.08, 0.04\nground_n_r = 32\nground_n_z = 64\nmpass_nodes = 64\nmin_core_nodes = 4\n",
    );
    let o = cnls(&["mu-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let m = manifest(&out);
    assert_eq!(o.status.success(), m["passed"].as_bool().unwrap());
    let report = fs::read_to_string(out.join("slope_report.txt")).unwrap();
    assert!(report.contains("lambda2_slope"));
    assert!(m["checks"].as_array().unwrap().iter().any(|c| c["name"] == "lambda2_slope"));
}

#[test]
fn check_command_passes_with_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "[check]\ngn_nodes = 64\nrandom_fields = 20\n");
    let o = cnls(&["check", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("gn_random_ratios.dat").exists());
}
