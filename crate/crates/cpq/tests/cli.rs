//! Runs the `cpq` binary against golden files in `tests/golden`.
//! `CPQ_BLESS=1` rewrites the golden files from the current output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn cpq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpq"))
        .args(args)
        .current_dir(crate_dir())
        .env_remove("CPQ_REFERENCE_FILE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden_path(name: &str) -> PathBuf {
    crate_dir().join("tests/golden").join(name)
}

fn bless(name: &str, text: &str) -> bool {
    if std::env::var_os("CPQ_BLESS").is_some() {
        std::fs::write(golden_path(name), text).unwrap();
        return true;
    }
    false
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn same_json(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => close(x.as_f64().unwrap(), y.as_f64().unwrap()),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_json(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same_json(v, w)))
        }
        _ => a == b,
    }
}

fn golden_json(name: &str, args: &[&str]) -> Value {
    let text = stdout(&cpq(args));
    let got: Value = serde_json::from_str(&text).unwrap();
    if !bless(name, &text) {
        let want: Value = serde_json::from_str(&std::fs::read_to_string(golden_path(name)).unwrap()).unwrap();
        assert!(same_json(&got, &want), "{name} differs:\n{text}");
    }
    got
}

fn same_csv(a: &str, b: &str) -> bool {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    la.len() == lb.len()
        && la.iter().zip(&lb).all(|(x, y)| {
            if x.starts_with('#') {
                return x == y;
            }
            let (fx, fy): (Vec<&str>, Vec<&str>) = (x.split(',').collect(), y.split(',').collect());
            fx.len() == fy.len()
                && fx.iter().zip(&fy).all(|(p, q)| match (p.parse::<f64>(), q.parse::<f64>()) {
                    (Ok(u), Ok(v)) => close(u, v),
                    _ => p == q,
                })
        })
}

fn golden_csv(name: &str, args: &[&str]) -> String {
    let text = stdout(&cpq(args));
    if !bless(name, &text) {
        let want = std::fs::read_to_string(golden_path(name)).unwrap();
        assert!(same_csv(&text, &want), "{name} differs:\n{text}");
    }
    text
}

fn reference(id: &str) -> f64 {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(crate_dir().join("data/references.json")).unwrap()).unwrap();
    v.as_array()
        .unwrap()
        .iter()
        .find(|e| e["case_id"] == id)
        .unwrap()["value"][0]
        .as_f64()
        .unwrap()
}

fn re(v: &Value) -> f64 {
    v["value"][0].as_f64().unwrap()
}

const PATCH: [&str; 2] = ["--paper-triangle", "0.6,0.7,0.5"];

fn with_patch<'a>(rest: &[&'a str]) -> Vec<&'a str> {
    let mut a = vec![rest[0]];
    a.extend(PATCH);
    a.extend(&rest[1..]);
    a
}

#[test]
fn integrate_singular_point() {
    let v = golden_json(
        "integrate_singular.json",
        &with_patch(&["integrate", "--x0", "F:0.2,0.4", "--n", "100", "--reg", "t2t1"]),
    );
    assert_eq!(v["frame"]["classification"], "interior");
    assert!((re(&v) - reference("patch-singular")).abs() < 5e-5);
}

#[test]
fn integrate_near_singular_point() {
    let v = golden_json(
        "integrate_near.json",
        &with_patch(&["integrate", "--x0", "F:0.2,0.4:0,0,-1e-4", "--n", "60"]),
    );
    assert_eq!(v["regularization"], "t2t1");
    assert!((re(&v) - reference("patch-near-singular")).abs() < 1e-3);
}

#[test]
fn integrate_far_point_is_spectral() {
    let a = golden_json("integrate_far.json", &with_patch(&["integrate", "--x0", "0,0,5", "--n", "12"]));
    let b: Value = serde_json::from_str(&stdout(&cpq(&with_patch(&["integrate", "--x0", "0,0,5", "--n", "24"])))).unwrap();
    assert!((re(&a) - re(&b)).abs() < 1e-14);
}

#[test]
fn integrate_bad_flag_is_usage_error() {
    let o = cpq(&["integrate", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = cpq(&with_patch(&["integrate", "--x0", "1,2"]));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn integrate_degenerate_triangle_is_numerical_error() {
    let o = cpq(&["integrate", "--triangle", "[[0,0,0],[1,0,0],[2,0,0]]", "--x0", "0,0,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_and_version_succeed() {
    assert!(stdout(&cpq(&["--help"])).contains("solid-angle"));
    assert!(stdout(&cpq(&["--version"])).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn converge_singular_from_reference_file() {
    let args = with_patch(&[
        "converge", "--x0", "F:0.2,0.4", "--n-list", "2..12", "--case", "patch-singular", "--threads", "1",
    ]);
    let text = golden_csv("converge_singular.csv", &args);
    assert!(text.contains("n,N,level,abs_error,value"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 11);
    let mut threaded = args.clone();
    *threaded.last_mut().unwrap() = "3";
    assert_eq!(stdout(&cpq(&threaded)), text);
}

#[test]
fn converge_near_with_explicit_reference() {
    let r = format!("{}", reference("patch-near-singular"));
    let text = golden_csv(
        "converge_near.csv",
        &with_patch(&[
            "converge", "--x0", "F:0.2,0.4:0,0,-1e-4", "--n-list", "4,8,16", "--levels", "none,t2t1", "--reference", &r,
        ]),
    );
    // without T₋₂ the error is O(1) at these orders
    let none_errors: Vec<f64> = text
        .lines()
        .filter(|l| l.contains(",none,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(none_errors.iter().all(|&e| e > 1e-3));
}

#[test]
fn converge_pair_scenario() {
    golden_csv(
        "converge_pair.csv",
        &with_patch(&["converge", "--scenario", "identical", "--n-list", "3,5", "--levels", "t2t1", "--case", "patch-pair-identical"]),
    );
}

#[test]
fn converge_needs_a_reference() {
    let o = cpq(&with_patch(&["converge", "--x0", "F:0.2,0.4", "--n-list", "2..4"]));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn converge_writes_file() {
    let dir = std::env::temp_dir().join(format!("cpq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("sweep.csv");
    let out_s = out.to_str().unwrap();
    let args = with_patch(&["converge", "--x0", "F:0.2,0.4", "--n-list", "2,3", "--reference", "0.5", "--out", out_s]);
    assert_eq!(stdout(&cpq(&args)), "");
    assert!(std::fs::read_to_string(&out).unwrap().contains("# reference=5.0000000000000000e-1"));
}

#[test]
fn pair_identical() {
    let v = golden_json(
        "pair_identical.json",
        &with_patch(&["pair", "--scenario", "identical", "--n", "8", "--case", "patch-pair-identical"]),
    );
    assert!(v["reference"]["abs_error"].as_f64().unwrap() < 2e-2);
}

#[test]
fn pair_shifted() {
    let v = golden_json(
        "pair_shifted.json",
        &with_patch(&["pair", "--scenario", "shifted:0.05,0.05,0", "--n", "16", "--case", "patch-pair-shifted"]),
    );
    assert!(v["reference"]["abs_error"].as_f64().unwrap() < 1e-2);
}

#[test]
fn pair_mesh_edge() {
    let v = golden_json(
        "pair_mesh_edge.json",
        &["pair", "--scenario", "mesh:tests/data/sphere84.msh:1:2", "--n", "8", "--case", "sphere84-edge-0-1"],
    );
    assert!(v["reference"]["abs_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn pair_helmholtz_at_zero_wavenumber_is_static() {
    let args = |k: &'static str| with_patch(&["pair", "--scenario", "shifted:0.05,0.05,0", "--n", "6", "--kernel", k]);
    let a: Value = serde_json::from_str(&stdout(&cpq(&args("double-layer")))).unwrap();
    let b: Value = serde_json::from_str(&stdout(&cpq(&args("helmholtz:0")))).unwrap();
    assert!(close(re(&a), re(&b)));
    assert_eq!(b["value"][1].as_f64().unwrap(), 0.0);
}

#[test]
fn pair_bad_scenario_and_tag() {
    assert_eq!(cpq(&with_patch(&["pair", "--scenario", "sideways"])).status.code(), Some(1));
    let o = cpq(&["pair", "--scenario", "mesh:tests/data/sphere84.msh:1:999"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cpq(&["pair", "--scenario", "mesh:tests/data/missing.msh:1:2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solid_angle_octant() {
    let v = golden_json(
        "solid_angle_octant.json",
        &["solid-angle", "--vertices", "[[1,0,0],[0,1,0],[0,0,1]]", "--x0", "0,0,0"],
    );
    assert!((v["closed_form"].as_f64().unwrap().abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    assert!(v["abs_diff"].as_f64().unwrap() < 1e-12);
}

#[test]
fn solid_angle_near_point() {
    let v = golden_json(
        "solid_angle_near.json",
        &["solid-angle", "--vertices", "[[0,0,0],[1,0.2,0],[0.3,0.9,0.1]]", "--x0", "0.4,0.3,-1e-3", "--n", "40"],
    );
    assert!(v["abs_diff"].as_f64().unwrap() <= 1e-8 * v["closed_form"].as_f64().unwrap().abs());
}

#[test]
fn solid_angle_at_vertex_is_numerical_error() {
    let o = cpq(&["solid-angle", "--vertices", "[[1,0,0],[0,1,0],[0,0,1]]", "--x0", "1,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cpq(&["solid-angle", "--vertices", "[[1,0,0],[0,1,0]]", "--x0", "0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_list() {
    let text = stdout(&cpq(&["oracle", "--list"]));
    if !bless("oracle_list.txt", &text) {
        assert_eq!(text, std::fs::read_to_string(golden_path("oracle_list.txt")).unwrap());
    }
}

#[test]
fn oracle_check_bundled_file() {
    let text = stdout(&cpq(&["oracle", "--check"]));
    assert_eq!(text.lines().filter(|l| l.ends_with(" ok")).count(), 7);
}

#[test]
fn oracle_recomputes_single_case() {
    let dir = std::env::temp_dir().join(format!("cpq-oracle-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("refs.json");
    stdout(&cpq(&["oracle", "--case", "patch-near-singular", "--out", out.to_str().unwrap()]));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let e = &v[0];
    assert_eq!(e["case_id"], "patch-near-singular");
    let diff = (e["value"][0].as_f64().unwrap() - reference("patch-near-singular")).abs();
    assert!(diff <= e["est_error"].as_f64().unwrap().max(1e-13));

    // the override is honoured by commands reading the reference file
    let o = Command::new(env!("CARGO_BIN_EXE_cpq"))
        .args(["converge", "--paper-triangle", "0.6,0.7,0.5", "--x0", "F:0.2,0.4", "--n-list", "2"])
        .args(["--case", "patch-singular"])
        .env("CPQ_REFERENCE_FILE", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("patch-singular"));
}

#[test]
fn oracle_unknown_case() {
    let o = cpq(&["oracle", "--case", "no-such-case", "--list"]);
    assert_eq!(o.status.code(), Some(1));
}
