use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const JORDAN8: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/jordan8.toml");

fn hyperlat(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperlat")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
operator = { kind = "jordanNilpotent", n = 4 }

[[sectors]]
direction = [1.0, 0.0]
halfAngle = 1.0

[[sectors]]
direction = [-1.0, 0.0]
halfAngle = 1.0
"#;

#[test]
fn certify_jordan_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperlat(&["certify", "--config", JORDAN8], &dir.path().join("run"));
    assert_eq!(o.status.code(), Some(10), "{}", stderr(&o));
    let cert = json(dir.path().join("run/certificate.json"));
    assert_eq!(cert["verdict"]["kind"], "INCONCLUSIVE_AK_ZERO");
    assert_eq!(cert["config"]["seed"], 42);
    for op in cert["operators"].as_array().unwrap() {
        assert!(op["norm"].as_f64().unwrap() < 1e-6);
    }
    let summary = fs::read_to_string(dir.path().join("run/summary.csv")).unwrap();
    assert!(summary.starts_with("# seed = 42\nname,value,floor,passed\n"));
    assert!(!summary.contains(",false"));
    assert!(!dir.path().join("run/.lock").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let o = hyperlat(&["certify", "--config", JORDAN8, "--seed", "7"], &dir.path().join(run));
        assert_eq!(o.status.code(), Some(10), "{}", stderr(&o));
    }
    for file in ["certificate.json", "config.json", "summary.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    assert_eq!(json(dir.path().join("a/config.json"))["seed"], 7);
    assert_eq!(json(dir.path().join("a/certificate.json"))["config"]["seed"], 7);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperlat(&["selftest", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = json(dir.path().join("selftest.json"));
    assert_eq!(summary["seed"], 3);
    assert!(!summary["checks"].as_array().unwrap().is_empty());
}

#[test]
fn probe_through_the_origin_hits_a_pole() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[probe]\nradii = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.0]\nform = \"power\"\n");
    let config = write_config(dir.path(), "zero.toml", &text);
    let o = hyperlat(&["probe", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(20));
    let err = stderr(&o);
    assert!(err.contains("resolvent pole") && err.contains("probe"), "{err}");
}

#[test]
fn probe_fits_the_jordan_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[probe]\nradii = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01]\nform = \"power\"\n");
    let config = write_config(dir.path(), "probe.toml", &text);
    let o = hyperlat(&["probe", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let growth = json(dir.path().join("out/growth.json"));
    assert_eq!(growth["seed"], 42);
    for sector in growth["sectors"].as_array().unwrap() {
        for ray in sector["rays"].as_array().unwrap() {
            assert!((ray["N"].as_f64().unwrap() - 4.0).abs() < 0.3, "{ray}");
        }
    }
    let samples = fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 2 + 2 * 8 * 8);
}

#[test]
fn comb_and_integrate_on_a_small_operator() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.toml", SMALL);
    let o = hyperlat(&["comb", "--config", config.to_str().unwrap()], &dir.path().join("comb"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let combs = json(dir.path().join("comb/combs.json"));
    assert_eq!(combs["validated"], true);
    assert!(dir.path().join("comb/contour_1.csv").exists());

    let o = hyperlat(&["integrate", "--config", config.to_str().unwrap(), "--tol", "1e-9"], &dir.path().join("int"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(dir.path().join("int/integrate.json"));
    assert!(report["norm"].as_f64().unwrap() < 1e-6);
    assert_eq!(json(dir.path().join("int/config.json"))["tol"], 1e-9);
    let matrix = fs::read_to_string(dir.path().join("int/matrix.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 2 + 16);
}

#[test]
fn narrow_beta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "beta.toml", &format!("{SMALL}\n[calculus]\nbeta = 0.9\n"));
    let o = hyperlat(&["certify", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("precondition"), "{}", stderr(&o));
}

#[test]
fn unknown_operator_lists_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "kind.toml", &SMALL.replace("jordanNilpotent", "toeplitz"));
    let o = hyperlat(&["probe", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for kind in ["dense", "jordanNilpotent", "volterraAnalytic", "weightedShift", "unitaryDiagonal"] {
        assert!(err.contains(kind), "{err}");
    }
}

#[test]
fn locked_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".lock"), "1").unwrap();
    let o = hyperlat(&["certify", "--config", JORDAN8], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("locked"));
    assert!(!dir.path().join("certificate.json").exists());
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperlat(&["comb"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}
