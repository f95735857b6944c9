use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(format!("{name}.json"))
}

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibred-hodge")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cohomology_on_sphere_predicts_one_zero_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["cohomology", "--scene", scene("sphere").to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("cohomology.json"));
    assert_eq!(v["result"]["predicted_betti"], serde_json::json!([1, 0, 1]));
    assert_eq!(v["meta"]["seed"], 7);
    assert_eq!(v["meta"]["scene_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn spectrum_on_torus_has_four_harmonic_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["spectrum", "--scene", scene("torus").to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("spectrum.json"));
    assert_eq!(v["result"]["r"], 3.0);
    assert_eq!(v["result"]["kernel_dim"], 4);
    assert_eq!(v["result"]["kernel_dim_d"], 4);
}

#[test]
fn scan_with_empty_grid_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["scan", "--scene", scene("sphere").to_str().unwrap(), "--r-grid", "3:2:1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty r grid"));
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(cli(&["cohomology", "--scene", missing.to_str().unwrap()], dir.path()).status.code(), Some(4));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"name\": ").unwrap();
    assert_eq!(cli(&["cohomology", "--scene", broken.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["spectrum"], dir.path()).status.code(), Some(3));
    let sphere = scene("sphere");
    assert_eq!(cli(&["scan", "--scene", sphere.to_str().unwrap(), "--r-grid", "2:3"], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["cohomology", "--scene", sphere.to_str().unwrap(), "--h=-1"], dir.path()).status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sphere = scene("sphere");
    let args = ["splice", "--scene", sphere.to_str().unwrap(), "--r-grid", "2:3:1", "--seed", "11"];
    assert!(cli(&args, a.path()).status.success());
    assert!(cli(&args, b.path()).status.success());
    for name in ["splice.csv", "splice.json"] {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert_eq!(x, y, "{name} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("splice.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# scene_hash="));
    assert!(csv.contains("seed=11"));
    assert_eq!(lines.next().unwrap(), "r,basis_index,ratio,bound,defect");
    assert_eq!(lines.count(), 4);
}

#[test]
fn weyl_modes_and_gap_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let theta = scene("theta");
    let t = theta.to_str().unwrap();
    assert!(cli(&["weyl", "--scene", t], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("cross_section_y.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("k,lambda_k"));
    let v = json(&dir.path().join("weyl.json"));
    assert_eq!(v["result"]["cross_sections"][0]["kernel_dim"], 4);

    assert!(cli(&["modes", "--scene", t], dir.path()).status.success());
    let v = json(&dir.path().join("modes.json"))["result"].clone();
    assert_eq!(v["dim_W"], 6);
    assert_eq!(v["dim_Lv"], serde_json::json!([6, 6]));
    assert_eq!(v["dim_L2"], serde_json::json!([0, 0]));
    assert!(v["lagrangian_max_pairing"].as_f64().unwrap() < 1e-6);

    let sphere = scene("sphere");
    assert!(cli(&["gap", "--scene", sphere.to_str().unwrap(), "--r-grid", "2:3:1"], dir.path()).status.success());
    let gap = std::fs::read_to_string(dir.path().join("gap.csv")).unwrap();
    assert_eq!(gap.lines().nth(1), Some("r,delta"));
    assert_eq!(gap.lines().count(), 4);
}
