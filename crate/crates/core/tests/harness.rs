use std::path::PathBuf;

use slab_symmetry::harness::{export_artifacts, run_scenario, Provenance, Scenario, VerificationReport};
use slab_symmetry::moving_plane::Verdict;
use slab_symmetry::Error;

fn scenario_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn coarse_t4() -> Scenario {
    let mut s = Scenario::load(&scenario_file("t4.json")).unwrap();
    s.resolution = 1.0 / 16.0;
    s
}

#[test]
fn canonical_scenarios_validate() {
    for name in ["t1.json", "t2.json", "t3.json", "t4.json"] {
        let s = Scenario::load(&scenario_file(name)).unwrap();
        s.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn radial_flux_run_passes_and_exports_identically() {
    let s = coarse_t4();
    let a = run_scenario(&s, 7);
    assert!(a.report.failure.is_none(), "{:?}", a.report.failure);
    assert!(a.report.pass, "{:#?}", a.report.criteria);
    assert!(a.report.criterion("axis_through_origin").unwrap().passed);

    let b = run_scenario(&s, 7);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = export_artifacts(&a, da.path()).unwrap();
    let fb = export_artifacts(&b, db.path()).unwrap();
    assert_eq!(fa.len(), fb.len());
    assert!(fa.iter().any(|p| p.ends_with("mesh.obj")));
    for (pa, pb) in fa.iter().zip(&fb) {
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap(), "{}", pa.display());
    }
}

#[test]
fn seed_changes_the_config_hash() {
    let s = coarse_t4();
    assert_ne!(Provenance::new(&s, 0).config_hash, Provenance::new(&s, 1).config_hash);
    assert_eq!(Provenance::new(&s, 3).config_hash, Provenance::new(&s, 3).config_hash);
}

#[test]
fn empty_report_is_a_null_skeleton() {
    let s = coarse_t4();
    let r = VerificationReport::empty("T4", Provenance::new(&s, 0));
    let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    for key in ["solver", "symmetry", "ellipticity", "touching", "failure"] {
        assert!(v[key].is_null(), "{key}");
    }
    assert_eq!(v["pass"], false);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 0);
}

#[test]
fn export_to_unwritable_path_names_it() {
    let s = coarse_t4();
    let mut out = run_scenario(&s, 0);
    out.mesh = None;
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = export_artifacts(&out, &blocker.join("sub")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn violated_precondition_fails_before_solving() {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(scenario_file("t3.json")).unwrap()).unwrap();
    v["bc"]["h"][0]["slope"] = serde_json::json!(0.5);
    let s: Scenario = serde_json::from_value(v).unwrap();
    let out = run_scenario(&s, 0);
    let f = out.report.failure.expect("must fail");
    assert_eq!(f.stage, "validate");
    assert!(f.message.contains("nonincreasing"), "{}", f.message);
    assert!(out.report.solver.is_none() && out.mesh.is_none());
    assert!(!out.report.pass);
}

#[test]
fn asymmetric_dirichlet_data_is_reported_with_a_witness() {
    let s = Scenario::from_json(
        r#"{"id":"custom","slab":{"axis_normal":[0,0,1],"offset_lo":0,"offset_hi":1},
            "H":{"kind":"constant","H0":0},
            "bc":{"kind":"dirichlet","g":{"kind":"fourier","center":[0,0],"mean":0.5,"terms":[[1,0.15,0],[2,0,0.1]]}},
            "domain":{"kind":"planar","outer":{"shape":"circle","center":[0,0],"radius":0.5}},
            "resolution":0.0625}"#,
    )
    .unwrap();
    let out = run_scenario(&s, 0);
    assert!(out.report.failure.is_none(), "{:?}", out.report.failure);
    assert!(!out.report.pass);
    let sym = out.report.symmetry.as_ref().unwrap();
    match &sym.verdict {
        Verdict::Asymmetric { witness, deviation, .. } => {
            assert!(*witness < sym.results.len());
            assert!(*deviation > sym.tolerances.deviation);
        }
        v => panic!("expected asymmetric, got {v:?}"),
    }
}
