use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slab-symmetry"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> i32 {
    let out = bin().args(args).output().unwrap();
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_passes_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let code = run(&["verify", "--scenario", s(&scenario("t4.json")), "--out", s(&out), "--resolution", "0.0625", "--seed", "3"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["provenance"]["seed"], 3);
    assert_eq!(report["provenance"]["resolution"], 0.0625);
}

#[test]
fn missing_scenario_is_an_execution_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["verify", "--scenario", "/nonexistent/t9.json", "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code, 2);
}

#[test]
fn asymmetric_surface_is_a_verified_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.json");
    std::fs::write(
        &path,
        r#"{"id":"custom","slab":{"axis_normal":[0,0,1],"offset_lo":0,"offset_hi":1},
            "H":{"kind":"constant","H0":0},
            "bc":{"kind":"dirichlet","g":{"kind":"fourier","center":[0,0],"mean":0.5,"terms":[[1,0.15,0],[2,0,0.1]]}},
            "domain":{"kind":"planar","outer":{"shape":"circle","center":[0,0],"radius":0.5}},
            "resolution":0.0625}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(run(&["verify", "--scenario", s(&path), "--out", s(&out)]), 1);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["symmetry"]["verdict"]["status"], "asymmetric");
}

#[test]
fn export_then_sweep_the_exported_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let art = dir.path().join("art");
    let t4 = scenario("t4.json");
    assert_eq!(run(&["export", "--scenario", s(&t4), "--out", s(&art), "--resolution", "0.0625"]), 0);
    for f in ["report.json", "mesh.obj", "mesh.json", "field.csv", "sweep_00.csv"] {
        assert!(art.join(f).exists(), "{f}");
    }
    let sym = dir.path().join("sym.json");
    let code = run(&["sweep", "--scenario", s(&t4), "--out", s(&sym), "--resolution", "0.0625", "--mesh", s(&art.join("mesh.obj"))]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sym).unwrap()).unwrap();
    assert_eq!(report["verdict"]["status"], "symmetric");
}

#[test]
fn solve_linearize_and_touching_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let t4 = scenario("t4.json");
    let common = ["--scenario", s(&t4), "--resolution", "0.0625"];
    let solved = dir.path().join("solved");
    assert_eq!(run(&[&["solve"][..], &common, &["--out", s(&solved)]].concat()), 0);
    assert!(solved.join("field.csv").exists() && solved.join("solver.json").exists());

    let op = dir.path().join("op.json");
    assert_eq!(run(&[&["linearize"][..], &common, &["--out", s(&op), "--angle", "0.7"]].concat()), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&op).unwrap()).unwrap();
    assert_eq!(v["ellipticity"]["violations"], 0);
    assert!(v["operator"]["k"].as_f64().unwrap() > 0.0);

    let t = dir.path().join("touch.json");
    assert_eq!(run(&[&["touching"][..], &common, &["--out", s(&t)]].concat()), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&t).unwrap()).unwrap();
    assert_eq!(v["conclusion"]["status"], "holds");
}
