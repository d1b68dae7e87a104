use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convexq")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn spec(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

/// `W_i` column of the quermass table.
fn quermass_values(out: &str) -> Vec<f64> {
    out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

#[test]
fn ball_is_certified() {
    let d = TempDir::new().unwrap();
    spec(&d, "ball.toml", "kind = \"ball\"\nradius = 1.0\n");
    let o = run(&["body", "--body", "ball.toml", "--resolution", "16"], d.path());
    assert_eq!(code(&o), 0);
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cert["pass"], true);
}

#[test]
fn overscaled_perturbation_is_not_certified() {
    let d = TempDir::new().unwrap();
    spec(
        &d,
        "bad.toml",
        "kind = \"perturbed_ball\"\neps = 10.0\n[field]\nkind = \"harmonic\"\ncoefficients = [0, 0, 0, 0, 1]\n",
    );
    let o = run(&["body", "--body", "bad.toml", "--n", "3", "--resolution", "16"], d.path());
    assert_eq!(code(&o), 2);
    let q = run(&["quermass", "--body", "bad.toml", "--n", "3", "--resolution", "16"], d.path());
    assert_eq!(code(&q), 2);
}

#[test]
fn malformed_input_is_a_precondition_error() {
    let d = TempDir::new().unwrap();
    spec(&d, "mal.toml", "kind = \"ball\" radius =\n");
    assert_eq!(code(&run(&["body", "--body", "mal.toml"], d.path())), 1);
    spec(&d, "unknown.json", r#"{"kind": "ball", "radius": 1.0, "colour": "red"}"#);
    assert_eq!(code(&run(&["body", "--body", "unknown.json"], d.path())), 1);
    assert_eq!(code(&run(&["verify", "no-such-suite"], d.path())), 1);
    assert_eq!(code(&run(&["verify", "poincare-sphere", "--tol=-1"], d.path())), 1);
    assert_eq!(code(&run(&["quermass", "--n", "1"], d.path())), 1);
}

#[test]
fn quermass_of_balls() {
    let d = TempDir::new().unwrap();
    let o = run(&["quermass", "--n", "3", "--resolution", "16"], d.path());
    assert_eq!(code(&o), 0);
    for w in quermass_values(&stdout(&o)) {
        assert!((w - 4.0 * PI / 3.0).abs() < 1e-12);
    }
    spec(&d, "r2.json", r#"{"kind": "ball", "radius": 2.0}"#);
    let o = run(&["quermass", "--n", "3", "--body", "r2.json", "--resolution", "16"], d.path());
    let w = quermass_values(&stdout(&o));
    for (i, wi) in w.iter().enumerate() {
        let expect = 4.0 * PI / 3.0 * 2f64.powi(3 - i as i32);
        assert!((wi - expect).abs() < 1e-11 * expect);
    }
}

#[test]
fn ellipse_quermass_writes_csv() {
    let d = TempDir::new().unwrap();
    spec(&d, "ell.toml", "kind = \"ellipsoid\"\naxes = [2.0, 1.0]\n");
    let o = run(&["quermass", "--body", "ell.toml", "--out", "out"], d.path());
    assert_eq!(code(&o), 0);
    let w = quermass_values(&stdout(&o));
    assert_eq!(w.len(), 2);
    assert!((w[0] - 2.0 * PI).abs() < 1e-12);
    assert_eq!(fs::read_to_string(d.path().join("out/quermass.csv")).unwrap(), stdout(&o));
}

#[test]
fn brunn_minkowski_of_homothets_is_equality() {
    let d = TempDir::new().unwrap();
    spec(
        &d,
        "cfg.toml",
        "n = 3\nresolution = 16\nt_grid = [0.25, 0.5, 0.75]\nbodies = [\n  { kind = \"ellipsoid\", axes = [1.5, 1.0, 0.8] },\n  { kind = \"ellipsoid\", axes = [3.0, 2.0, 1.6] },\n]\n",
    );
    let o = run(&["verify", "bm", "--config", "cfg.toml", "--out", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let reports: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(d.path().join("out/bm.json")).unwrap()).unwrap();
    assert!(!reports.is_empty());
    for r in &reports {
        assert!(r["relative_gap"].as_f64().unwrap().abs() < 1e-10, "{r}");
    }
    let csv = fs::read_to_string(d.path().join("out/bm.csv")).unwrap();
    assert_eq!(csv.lines().count(), reports.len() + 1);
}

#[test]
fn sharpness_on_ellipsoid_passes() {
    let d = TempDir::new().unwrap();
    spec(&d, "e.toml", "kind = \"ellipsoid\"\naxes = [2.0, 1.0, 1.0]\n");
    let o = run(&["verify", "sharpness", "--body", "e.toml", "--resolution", "32"], d.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("0 fail"));
}

#[test]
fn two_atom_measure_is_rejected() {
    let d = TempDir::new().unwrap();
    spec(&d, "two.toml", "atoms = [[0.0, 1.0], [3.141592653589793, 1.0]]\n");
    let o = run(&["verify", "wirtinger", "--n", "2", "--measure", "two.toml"], d.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("two point masses"));
}

#[test]
fn three_atom_measure_passes() {
    let d = TempDir::new().unwrap();
    spec(&d, "three.toml", "atoms = [[0.0, 1.0], [2.0943951023931953, 1.0], [4.1887902047863905, 1.0]]\n");
    let o = run(&["verify", "wirtinger", "--n", "2", "--measure", "three.toml"], d.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn failing_verdict_names_worst_report() {
    let d = TempDir::new().unwrap();
    let o = run(&["verify", "sharpness", "--resolution", "12", "--tol", "1e-9"], d.path());
    assert_eq!(code(&o), 3);
    let line = stdout(&o);
    assert!(line.contains("fail") && line.contains("worst #") && line.contains("body "), "{line}");
}

#[test]
fn selfcheck_passes() {
    let d = TempDir::new().unwrap();
    let o = run(&["selfcheck", "--out", "out"], d.path());
    assert_eq!(code(&o), 0);
    assert!(d.path().join("out/convergence.csv").exists());
    assert!(stdout(&o).contains("resolution,nodes,error,order"));
}

#[test]
fn sequential_flag_matches_default() {
    let d = TempDir::new().unwrap();
    let a = run(&["verify", "poincare-boundary", "--n", "2", "--out", "a"], d.path());
    let b = run(&["verify", "poincare-boundary", "--n", "2", "--out", "b", "--sequential"], d.path());
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    let read = |s: &str| fs::read(d.path().join(s).join("poincare-boundary.json")).unwrap();
    assert_eq!(read("a"), read("b"));
}
