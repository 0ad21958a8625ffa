use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use linfvar_core::function_space::{save, DiscreteFunction, Grid};
use tempfile::TempDir;

fn linfvar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linfvar"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn sample(dir: &Path, name: &str, m: usize, f: fn(f64) -> f64, df: fn(f64) -> f64) -> String {
    let grid = Grid::new_1d(0.0, 1.0, m).unwrap();
    let u = DiscreteFunction::sample(grid, move |x| f(x[0]), move |x| vec![df(x[0])]).unwrap();
    let path = dir.join(name);
    save(&u, &path).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn oracle_single_switch() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["oracle", "0", "1", "0", "0", "1", "0"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["s"], 4.0);
    assert_eq!(v["c"], 0.5);
}

#[test]
fn oracle_accepts_negative_data_and_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(
        tmp.path(),
        &["oracle", "-1", "1", "0", "-2", "0", "2", "--out", "o"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // u = x^2 - 1 matches the data exactly
    assert_eq!(json(&out)["c"], serde_json::Value::Null);
    assert!(tmp.path().join("o/oracle.csv").exists());
    assert!(tmp.path().join("o/oracle.json").exists());
}

#[test]
fn oracle_degenerate_interval_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["oracle", "1", "1", "0", "0", "0", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn implicit_zigzag_switches() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(
        tmp.path(),
        &[
            "implicit", "--h", "identity", "--C", "1", "--g", "zero", "--out", "im",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    let sw: Vec<f64> = v["switches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(sw.len(), 2);
    assert!((sw[0] - 0.25).abs() < 1e-8 && (sw[1] - 0.75).abs() < 1e-8);
    let (header, rows) = read_csv(&tmp.path().join("im/implicit.csv"));
    assert_eq!(header[0], "x");
    assert_eq!(rows.len(), 201);
}

#[test]
fn implicit_below_reachable_level_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["implicit", "--C", "-1"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn young_quadratic_all_pass() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(
        tmp.path(),
        &["young", "--fixture", "quadratic", "--out", "y"],
    );
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["all_pass"], true);
    let (header, rows) = read_csv(&tmp.path().join("y/young.csv"));
    assert_eq!(header, ["x", "sup_finite", "escaped_mass", "pass"]);
    assert!(rows.iter().all(|r| r[3] == 1.0));
}

#[test]
fn young_cubic_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["young", "--fixture", "cubic"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["all_pass"], false);
}

#[test]
fn residual_of_a_quadratic_vanishes() {
    let tmp = TempDir::new().unwrap();
    let file = sample(tmp.path(), "quad.csv", 101, |x| x * x, |x| 2.0 * x);
    let out = linfvar(
        tmp.path(),
        &[
            "residual",
            &file,
            "--supremand",
            "squared-hessian",
            "--out",
            "r",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&tmp.path().join("r/residual.csv"));
    assert_eq!(header, ["x", "contracted", "expanded", "gradH", "masked"]);
    for r in rows.iter().filter(|r| r[4] == 0.0) {
        assert!(r[1].abs() < 1e-6 && r[2].abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn residual_of_the_cubic_follows_its_profile() {
    let tmp = TempDir::new().unwrap();
    let file = sample(tmp.path(), "cubic.csv", 801, |x| x.powi(3), |x| 3.0 * x * x);
    let out = linfvar(tmp.path(), &["residual", &file, "--out", "r"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&tmp.path().join("r/residual.csv"));
    let mut checked = 0;
    for r in rows.iter().filter(|r| r[4] == 0.0 && r[0] >= 0.1) {
        let want = 62208.0 * r[0].powi(3);
        assert!((r[1] - want).abs() <= 0.02 * want, "{r:?}");
        checked += 1;
    }
    assert!(checked > 600);
}

#[test]
fn residual_missing_file() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["residual", "nope.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_supremand_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        r#"{"supremand": "smoothed-hessian-norm:eps=abc"}"#,
    )
    .unwrap();
    let out = linfvar(tmp.path(), &["solve", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("supremand"));
}

#[test]
fn config_errors_point_at_the_line() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        "{\n  \"supremand\": \"squared-hessian\",\n  \"grdi\": {}\n}\n",
    )
    .unwrap();
    let out = linfvar(tmp.path(), &["solve", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grdi") && err.contains("line 3"), "{err}");
}

const QUADRATIC: &str = r#"{
  "supremand": "squared-hessian",
  "grid": {"lower": [0], "upper": [1], "counts": [41]},
  "boundary": {"kind": "clamped", "values": [0, 0, 1, 2]},
  "schedule": [4, 8, 16],
  "out": "q"
}"#;

#[test]
fn quadratic_config_has_constant_energy() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("q.json"), QUADRATIC).unwrap();
    let out = linfvar(tmp.path(), &["solve", "--config", "q.json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv_mixed(&tmp.path().join("q/continuation.csv"));
    assert_eq!(header[1], "E_p");
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((r[1] - 4.0).abs() < 1e-9, "{r:?}");
    }
    assert!(tmp.path().join("q/energies.dat").exists());
    assert!(tmp.path().join("q/solution.csv").exists());
}

#[test]
fn zero_data_gives_zero_solution() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"supremand": "squared-hessian", "grid": {"counts": [21]}, "boundary": {"kind": "zero"}, "schedule": [4, 8]}"#;
    fs::write(tmp.path().join("z.json"), cfg).unwrap();
    let out = linfvar(tmp.path(), &["solve", "--config", "z.json", "--out", "z"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, rows) = read_csv(&tmp.path().join("z/solution.csv"));
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn runs_are_deterministic_and_parallel_runs_are_isolated() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"supremand": "smoothed-hessian-norm:eps=0.01", "grid": {"counts": [31]}, "schedule": [4, 8], "solver": {"restarts": 1}}"#;
    fs::write(tmp.path().join("a.json"), cfg).unwrap();
    fs::write(tmp.path().join("b.json"), cfg).unwrap();
    let out = linfvar(
        tmp.path(),
        &[
            "--jobs", "2", "solve", "--config", "a.json", "--config", "b.json", "--seed", "7",
            "--out", "runs",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "continuation.csv",
        "u_p8.csv",
        "solution.csv",
        "config.json",
    ] {
        let a = fs::read(tmp.path().join("runs/a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("runs/b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn check_rejects_unknown_criterion() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["check", "--only", "11"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_runs_a_subset() {
    let tmp = TempDir::new().unwrap();
    let out = linfvar(tmp.path(), &["check", "--only", "1,8", "--out", "acc"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("[PASS]")).count(),
        2
    );
    assert!(tmp.path().join("acc/acceptance.json").exists());
}

fn read_csv_mixed(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| match v {
                    "true" => 1.0,
                    "false" => 0.0,
                    _ => v.parse().unwrap(),
                })
                .collect()
        })
        .collect();
    (header, rows)
}
