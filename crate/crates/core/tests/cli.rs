//! Exit codes and outputs of the binary.

use std::fs;
use std::process::Command;

fn fdlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fdlab")).args(args).output().unwrap()
}

#[test]
fn bad_config_exits_with_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[run]\nt_end = -1.0\n").unwrap();
    let out = fdlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.t_end"), "{err}");

    fs::write(&cfg, "[solver]\ndt_max = 0.0\n").unwrap();
    let out = fdlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.dt_max"));
}

#[test]
fn syntax_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "seed = 3\n[run]\nt_end = \"soon\"\n").unwrap();
    let out = fdlab(&["rates", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn empty_alpha_grid_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[spectrum]\nalphas = []\n").unwrap();
    let out = fdlab(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(dir.path().join("spectrum.csv")).unwrap().is_empty());
}

#[test]
fn spectrum_table_has_branch_labels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[spectrum]\nd = 5\nalphas = [-12.0, -6.0, -3.6]\ncertify = false\n").unwrap();
    let out = fdlab(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    // alpha = -12 < -(d+2): lambda_10 sharp, lambda_20 improved
    assert_eq!(&first[11..], ["lambda_10", "lambda_20"]);
    assert!(text.lines().any(|l| l.starts_with("5,-6,") && l.ends_with("lambda_10,lambda_02")));
    assert!(text.lines().any(|l| l.starts_with("5,-3.6,") && l.ends_with("lambda_01,continuum")));
}

#[test]
fn rates_emits_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdlab(&["rates", "--seed", "9", "--jobs", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("gamma_curves.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "d,m,gamma_case1,gamma_case2,gamma_case3,gamma_baseline,extension");
    assert_eq!(text.lines().count(), 100);
}
