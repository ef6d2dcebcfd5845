use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_traffic-kmc");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn column(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.nth(row).unwrap().split(',').nth(i).unwrap().to_string()
}

#[test]
fn run_writes_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["run", "--cells", "200", "--density", "0.3", "--t-final", "60", "--burn-in", "10", "--events", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(dir.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 2);
    assert_eq!(column(&summary, 0, "n_cars"), "60");
    assert_eq!(column(&summary, 0, "wall_time_s"), "NA");
    let f: f64 = column(&summary, 0, "F_bar_per_s").parse().unwrap();
    assert!(f > 0.0);
    let manifest = read(dir.path(), "manifest.txt");
    assert!(manifest.contains("subcommand=run"));
    assert!(manifest.contains("cells=200"));
    assert!(read(dir.path(), "events.csv").lines().count() > 1);
}

#[test]
fn empty_road_is_frozen_with_zero_flux() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--cells", "50", "--cars", "0", "--t-final", "10", "--burn-in", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let summary = read(dir.path(), "summary.csv");
    assert_eq!(column(&summary, 0, "frozen"), "true");
    assert_eq!(column(&summary, 0, "F_bar_per_s").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["run", "--t-final", "10", "--burn-in", "10", "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = dir.path().join("bad.txt");
    fs::write(&cfg, "cells=100\nlane_count=2\n").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lane_count"));

    let o = run(&["run", "--kernel", "gaussian:3", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kernel"));
}

#[test]
fn sweep_writes_rows_per_replicate_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep", "--cells", "100", "--rho-min", "0.1", "--rho-max", "0.9", "--rho-step", "0.1",
        "--seeds", "3", "--t-final", "20", "--burn-in", "5", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(dir.path(), "diagram.csv").lines().count(), 1 + 27);
    let agg = read(dir.path(), "aggregate.csv");
    assert_eq!(agg.lines().count(), 1 + 9);
    assert_eq!(column(&agg, 0, "rho_bar"), "0.1");
    assert_eq!(column(&agg, 8, "replicates"), "3");
}

#[test]
fn bench_writes_times_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", "--sizes", "50,100,200", "--engines", "standard,accelerated", "--budget", "2000", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path(), "bench.csv").lines().count() >= 7);
    assert!(read(dir.path(), "slopes.csv").contains("standard_minus_accelerated"));
}

#[test]
fn injected_fault_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--inject-fault", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(read(dir.path(), "validate.csv").contains(",false"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
}
