use std::path::Path;
use std::process::{Command, Output};

use vlp_core::grid::{Field, Grid};
use vlp_core::io::{write_field, FIELD_TAG};

const ZERO_CONFIG: &str = "vlp-config v1
alpha = 0.75
b = 2
gamma = 0
n = 1
L = 4
N = 32
T = 1
M = 8
mode = global
p = 1.8
u0 = zero
";

fn vlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn norm_of_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.txt");
    write_field(
        &path,
        &Field::zeros(Grid::new(1, 4.0, 16).unwrap()),
        FIELD_TAG,
    )
    .unwrap();
    let out = vlp(&["norm", path.to_str().unwrap(), "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0\n");
}

#[test]
fn verify_kernel_gaussian_oracle() {
    let out = vlp(&["verify-kernel", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("check,name,value,bound,pass\n"));
    let oracle = csv
        .lines()
        .find(|l| l.starts_with("oracle,gaussian"))
        .expect("oracle row");
    assert!(oracle.ends_with(",true"));
}

#[test]
fn solve_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "zero.cfg", ZERO_CONFIG);
    let out_dir = dir.path().join("run");
    let out = vlp(&["solve", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace, "k,norm,increment,ratio\n1,0,0,\n");
    assert!(out_dir.join("u_0008.txt").exists());
}

#[test]
fn check_global_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = ZERO_CONFIG.replace("u0 = zero", "u0 = gauss:0.05");
    let config = write(dir.path(), "small.cfg", &text);
    let out = vlp(&["check", &config]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("log-holder,local,0,")));
    assert!(csv
        .lines()
        .any(|l| l.starts_with("smallness,") && l.ends_with(",true")));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = ZERO_CONFIG.replace("u0 = zero", "u0 = gauss:5");
    let config = write(dir.path(), "large.cfg", &text);
    let out = vlp(&["check", &config]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn errors_exit_two() {
    assert_eq!(vlp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        vlp(&["check", "/nonexistent/run.cfg"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.cfg",
        &ZERO_CONFIG.replace("alpha = 0.75", "alpha = 2"),
    );
    let out = vlp(&["check", &config]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = vlp(&[
            "verify-operators",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let config = write(
        dir.path(),
        "small.cfg",
        &ZERO_CONFIG.replace("u0 = zero", "u0 = gauss:0.05"),
    );
    for run in ["r1", "r2"] {
        let out = vlp(&[
            "solve",
            &config,
            "--out",
            dir.path().join(run).to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for file in ["trace.csv", "u_0004.txt"] {
        assert_eq!(
            std::fs::read(dir.path().join("r1").join(file)).unwrap(),
            std::fs::read(dir.path().join("r2").join(file)).unwrap()
        );
    }
}
