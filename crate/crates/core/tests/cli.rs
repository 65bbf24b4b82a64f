use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn quadlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadlab")).args(args).arg("--out").arg(out).output().unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn enumerate_circle_twelve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = quadlab(&["enumerate", "--quadric", &cfg("circle.toml"), "--qmax", "5", "--cross-check"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("points.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert_eq!(csv.lines().next(), Some("p_1,p_2,q"));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["checks"][0]["pass"], true);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = quadlab(&["enumerate", "--quadric", &cfg("circle.toml"), "--qmax", "5", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let rec: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(rec["error"]["kind"], "usage");
    assert!(rec["usage"].as_str().unwrap().contains("Usage"));
    assert_eq!(manifest(dir.path())["status"], "error");
}

#[test]
fn unknown_subcommand_and_bad_config_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(quadlab(&["transmogrify"], dir.path()).status.code(), Some(1));
    let o = quadlab(&["enumerate", "--quadric", &cfg("missing.toml"), "--qmax", "5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(dir.path());
    assert_eq!(m["error"]["kind"], "config");
}

#[test]
fn failed_calibration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let balls = dir.path().join("balls.csv");
    std::fs::write(&balls, "x_1,x_2,radius\n3/5,4/5,1/8\n").unwrap();
    let out = dir.path().join("run");
    let o = quadlab(
        &["simplex-check", "--quadric", &cfg("circle.toml"), "--box=-2,-2:2,2", "--balls", balls.to_str().unwrap(), "--kappa-grid", "1000000"],
        &out,
    );
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["error"]["kind"], "diagnostic");
    let v = std::fs::read_to_string(out.join("violations.csv")).unwrap();
    assert!(v.lines().count() >= 2);
}

#[test]
fn dim_bound_at_c_one_returns_delta() {
    let dir = tempfile::tempdir().unwrap();
    let o = quadlab(
        &[
            "dim-bound",
            "--quadric",
            &cfg("circle.toml"),
            "--measure",
            &cfg("centered_cantor.toml"),
            "--chart",
            &cfg("upper_circle.toml"),
            "--c",
            "1",
            "--s-grid",
            "0.4:0.01:0.9",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cost_report.json")).unwrap()).unwrap();
    let s = r["reports"][0]["s_star"].as_f64().unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() <= 0.05, "{s}");
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = quadlab(&["decay", "--spec", &cfg("circle_family.toml")], &a);
    assert!(o.status.success());
    let b = dir.path().join("b");
    let o = Command::new(env!("CARGO_BIN_EXE_quadlab"))
        .args(["--replay", a.join("manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(manifest(&a)["output_sha256"], manifest(&b)["output_sha256"]);
    assert_eq!(std::fs::read(a.join("decay.csv")).unwrap(), std::fs::read(b.join("decay.csv")).unwrap());
}

#[test]
fn json_keys_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    quadlab(&["measure-fit", "--measure", "preset:middle_thirds", "--samples", "3"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}
