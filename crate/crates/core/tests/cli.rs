use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnitude")).args(args).output().unwrap()
}

fn last_value(csv: &str) -> f64 {
    let line = csv.lines().nth(1).expect("a data row");
    line.split(',').nth(1).unwrap().parse().unwrap()
}

fn write_points(dir: &Path) -> String {
    let path = dir.join("pts.csv");
    std::fs::write(&path, "x\n0\n1\n2\n").unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn finite_space_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_points(dir.path());
    let out = run(&["magnitude", "--points", &pts, "--R", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = last_value(&String::from_utf8_lossy(&out.stdout));
    assert!((m - (1.0 + 2.0 * 0.5f64.tanh())).abs() < 1e-10, "{m}");
}

#[test]
fn subcommand_name_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_points(dir.path());
    let explicit = run(&["magnitude", "--points", &pts, "--R", "2"]);
    let implicit = run(&["--points", &pts, "--R", "2"]);
    assert!(implicit.status.success());
    assert_eq!(explicit.stdout, implicit.stdout);
}

#[test]
fn output_file_gets_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_points(dir.path());
    let out_path = dir.path().join("curve.csv");
    let out = run(&["magnitude", "--points", &pts, "--R-grid", "0.5,1,2", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&out_path).unwrap().lines().count(), 4);
    let sidecar = dir.path().join("curve.csv.manifest.json");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
    assert!(manifest.is_object());
}

#[test]
fn geometry_of_ball_as_json() {
    let out = run(&["geometry", "--domain", "ball"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w = doc["functionals"]["willmore"].as_f64().unwrap();
    assert!((w - 4.0 * std::f64::consts::PI).abs() < 1e-8, "{w}");
}

#[test]
fn falsify_without_calibration_exits_5() {
    let out = run(&["falsify", "--a-grid", "1"]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_input_exits_2() {
    let out = run(&["geometry", "--domain", "sphere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = run(&["magnitude", "--R", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn symbol_parametrix_checks_identity() {
    let dir = tempfile::tempdir().unwrap();
    let sym = dir.path().join("a.json");
    std::fs::write(
        &sym,
        r#"{"order":2,"dim":1,"terms":[{"degree":2,"alpha":[0],"k":0,"p":2,"coeff":{"re":[1,1],"im":[0,1]},"scalars":{}}]}"#,
    )
    .unwrap();
    let out = run(&["symbol", "parametrix", "--symbol", sym.to_str().unwrap(), "--cutoff", "-6", "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["identity"], serde_json::Value::Bool(true));
}
