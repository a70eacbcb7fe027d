mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use diffeo_commutators::bump::TaperProfile;
use diffeo_commutators::io::{list_from_json, list_to_json, read_json, write_json, FactorJson, FieldJson};
use diffeo_commutators::pipeline::{decompose, verify, PipelineConfig, RunReport};
use diffeo_commutators::{make_diffeo, suite, DisplacementField, GridSpec, TorusDiffeo};

fn cfg(n: usize) -> PipelineConfig {
    PipelineConfig {
        grid: n,
        ..PipelineConfig::default()
    }
}

fn without_clock(report: &RunReport) -> RunReport {
    let mut r = report.clone();
    r.timestamp.unix_seconds = 0;
    r.timestamp.elapsed_ms = 0;
    r
}

#[test]
fn pipeline_is_deterministic_and_self_consistent() {
    let grid = GridSpec::new(2, 128).unwrap();
    let f = suite::diffeo(2, 5e-4, grid).unwrap();
    let (a, ra) = decompose(&f, &cfg(128)).unwrap();
    let (b, rb) = decompose(&f, &cfg(128)).unwrap();
    assert_eq!(a.len(), b.len());
    for (p, q) in a.pairs.iter().zip(&b.pairs) {
        assert_eq!(p.provenance, q.provenance);
        assert_eq!(p.g.field(), q.g.field());
        assert_eq!(p.h.field(), q.h.field());
    }
    assert_eq!(without_clock(&ra), without_clock(&rb));

    // the same factors after a trip through the exchange format
    let text = serde_json::to_string(&list_to_json(&a)).unwrap();
    let factors: Vec<FactorJson> = serde_json::from_str(&text).unwrap();
    let reread = list_from_json(&factors, Some(grid)).unwrap();
    let v = verify(&f, &reread).unwrap();
    assert!((v.residual_c0 - ra.verification.residual_c0).abs() <= 1e-12);
    assert!(v.residual_c0 <= 1e-6, "{v:?}");

    let swapped = verify(&f, &reread.swapped(0, 1)).unwrap();
    assert!(swapped.residual_c0 >= 10.0 * v.residual_c0, "{swapped:?} vs {v:?}");
}

#[test]
fn map_inside_one_chart_leaves_the_other_trivial() {
    let grid = GridSpec::new(2, 128).unwrap();
    let taper = TaperProfile::new(0.45, 0.55, 0.1).unwrap();
    let f = make_diffeo(DisplacementField::from_fn(grid, |x| {
        let b = 5e-4 * taper.chi(x[0]);
        [b * (2.0 * PI * x[1]).sin(), b * (2.0 * PI * (x[0] + x[1])).cos()]
    }))
    .unwrap()
    .masked(taper.support());
    let (list, report) = decompose(&f, &cfg(128)).unwrap();
    assert!(report.verification.residual_c0 <= 1e-6, "{:?}", report.verification);
    let other: Vec<_> = list.pairs.iter().filter(|p| p.provenance.chart == 1).collect();
    assert!(!other.is_empty());
    assert!(other.iter().all(|p| p.is_trivial()));
    assert!(list.pairs.iter().filter(|p| p.provenance.chart == 0).any(|p| !p.is_trivial()));
}

fn commutators(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_commutators"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn write_input(path: &Path, f: &TorusDiffeo) {
    write_json(path, &FieldJson::from_diffeo(f)).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cli_decompose_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (input, out, report, csv, check) = (
        dir.path().join("f.json"),
        dir.path().join("factors.json"),
        dir.path().join("report.json"),
        dir.path().join("plot.csv"),
        dir.path().join("verify.json"),
    );
    write_input(&input, &suite::diffeo(0, 5e-4, GridSpec::new(2, 16).unwrap()).unwrap());
    let code = commutators(&[
        "decompose", "--input", s(&input), "--grid", "128", "--out", s(&out), "--report", s(&report),
        "--plot-data", s(&csv),
    ]);
    assert_eq!(code, 0);
    let r: RunReport = read_json(&report).unwrap();
    assert!(r.passed && r.m == 12 && r.grid == 128);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("series,chart,foliation,x,residual\n"));

    assert_eq!(commutators(&["verify", "--input", s(&input), "--factors", s(&out), "--report", s(&check)]), 0);
    let v: serde_json::Value = read_json(&check).unwrap();
    assert_eq!(v["verification"]["residual_c0"].as_f64().unwrap(), r.verification.residual_c0);
    // an unreachable tolerance is a verification failure
    assert_eq!(commutators(&["verify", "--input", s(&input), "--factors", s(&out), "--tol", "1e-20"]), 1);
}

#[test]
fn cli_prunes_identity_to_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (input, out) = (dir.path().join("id.json"), dir.path().join("factors.json"));
    write_input(&input, &TorusDiffeo::identity(GridSpec::new(2, 32).unwrap()));
    assert_eq!(commutators(&["decompose", "--input", s(&input), "--out", s(&out), "--prune"]), 0);
    let factors: Vec<FactorJson> = read_json(&out).unwrap();
    assert!(factors.is_empty());
}

#[test]
fn cli_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(commutators(&["decompose", "--input", s(&missing)]), 2);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"n\": 2").unwrap();
    assert_eq!(commutators(&["decompose", "--input", s(&garbage)]), 2);
    assert_eq!(commutators(&["decompose"]), 2);
    let big = dir.path().join("big.json");
    write_input(&big, &suite::diffeo(0, 1e-2, GridSpec::new(2, 16).unwrap()).unwrap());
    assert_eq!(commutators(&["decompose", "--input", s(&big)]), 2);
}

#[test]
fn cli_certify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    assert_eq!(commutators(&["certify", "--k-scan", "2000", "--out", s(&out)]), 0);
    let cert: serde_json::Value = read_json(&out).unwrap();
    assert!(cert["C_emp"].as_f64().unwrap() > 0.0);
    assert_eq!(commutators(&["certify", "--gamma", "silver"]), 2);
}
