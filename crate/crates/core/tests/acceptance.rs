//! Acceptance criteria. One PASS/FAIL line per criterion; exits nonzero if
//! any fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 3 5`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use traffic_kmc::analytic::{self, Limit};
use traffic_kmc::bench::{run_bench, BenchConfig};
use traffic_kmc::stats::sweep;
use traffic_kmc::validate::{
    chi_square_critical_1pct, compare_trajectories, frozen_waiting_times, incremental_deviation,
    ks_critical_1pct, ks_exponential, list_selection_counts, list_vs_standard_flux,
};
use traffic_kmc::{EngineKind, Kernel, KernelSpec, RateParams, SimConfig, Simulation, Slowdown};

type Outcome = (bool, String);

const LIN: Slowdown = Slowdown::LinearClamped;
const QUAD: Slowdown = Slowdown::QuadraticClamped;

fn base(lambda: f64, jump: usize, g: Slowdown, t_final: f64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(500, 0, KernelSpec::Exponential { lambda }, g).with_horizon(t_final);
    cfg.jump = jump;
    cfg.seed = seed;
    cfg
}

fn mean_f(cfg: &SimConfig, rho: f64, seeds: usize) -> f64 {
    sweep(cfg, &[rho], seeds, 0).unwrap().aggregates[0].f_mean
}

fn c1_incremental_vs_direct() -> Outcome {
    let start = Instant::now();
    let kernel = Kernel::exponential(256, 100.0).unwrap();
    let n_cars = SimConfig::cars_for_density(256, 0.4);
    let mut worst = 0.0f64;
    for jump in [1, 2] {
        let params = RateParams::new(4.0, jump, Slowdown::default()).unwrap();
        let dev = incremental_deviation(&kernel, n_cars, &params, 100_000, 1_000, 1).unwrap();
        worst = worst.max(dev);
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-9 && secs < 60.0,
        format!("max |w_accel - w_direct| = {worst:.3e} (<= 1e-9), {secs:.1} s (< 60 s)"),
    )
}

fn c2_trajectory_equivalence() -> Outcome {
    let start = Instant::now();
    let mut cfg = SimConfig::new(
        512,
        SimConfig::cars_for_density(512, 0.3),
        KernelSpec::Exponential { lambda: 10.0 },
        Slowdown::default(),
    );
    cfg.seed = 2;
    let t = compare_trajectories(&cfg, EngineKind::Standard, EngineKind::Accelerated, 100_000)
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        t.steps == 100_000 && t.mismatches == 0 && t.max_clock_rel_diff <= 1e-9 && secs < 120.0,
        format!(
            "{} steps, {} mismatches, clock rel diff {:.3e} (<= 1e-9), {secs:.1} s (< 120 s)",
            t.steps, t.mismatches, t.max_clock_rel_diff
        ),
    )
}

fn c3_limit_infinity() -> Outcome {
    let f = mean_f(&base(1e4, 1, LIN, 600.0, 3), 0.5, 5) * 3600.0;
    (
        (3420.0..=3780.0).contains(&f),
        format!("F(0.5) = {f:.1} cars/h, want [3420, 3780]"),
    )
}

fn c4_limit_zero() -> Outcome {
    let cases = [
        ("J=1 lambda=0.1 rho=1/3", 0.1, 1, 1.0 / 3.0, 2133.0),
        ("J=2 lambda=1e4 rho=1/3", 1e4, 2, 1.0 / 3.0, 2133.0),
        ("J=2 lambda=0.1 rho=1/4", 0.1, 2, 0.25, 1519.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, lambda, jump, rho, quoted)) in cases.into_iter().enumerate() {
        let f = mean_f(&base(lambda, jump, LIN, 600.0, 40 + i as u64), rho, 5) * 3600.0;
        let (lo, hi) = (0.95 * quoted, 1.05 * quoted);
        ok &= (lo..=hi).contains(&f);
        parts.push(format!("{name}: {f:.1} in [{lo:.0}, {hi:.0}]"));
    }
    (ok, parts.join("; "))
}

/// Argmax of mean flow on the `k / 60` grid. A single-seed pass over the
/// whole grid locates the peak region; the seven grid points around it are
/// then rerun with 3 seeds over 9600 s and the argmax is taken there.
fn grid_argmax(lambda: f64, g: Slowdown, seed: u64) -> f64 {
    let step = 1.0 / 60.0;
    let grid: Vec<f64> = (1..60).map(|k| k as f64 * step).collect();
    let coarse = sweep(&base(lambda, 1, g, 600.0, seed), &grid, 1, 0).unwrap();
    let k0 = (coarse.argmax_density().unwrap() / step).round() as i64;
    let window: Vec<f64> = (k0 - 3..=k0 + 3)
        .filter(|&k| (1..60).contains(&k))
        .map(|k| k as f64 * step)
        .collect();
    let fine = sweep(&base(lambda, 1, g, 9600.0, seed + 1), &window, 3, 0).unwrap();
    fine.argmax_density().unwrap()
}

fn c5_critical_densities() -> Outcome {
    let cases = [
        ("lambda=1e4", 1e4, LIN, Limit::LambdaToInfinity),
        ("lambda=0.1 linear", 0.1, LIN, Limit::LambdaToZero),
        ("lambda=0.1 quadratic", 0.1, QUAD, Limit::LambdaToZero),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, lambda, g, limit)) in cases.into_iter().enumerate() {
        let rc = analytic::critical_density(1, limit, g).unwrap();
        let found = grid_argmax(lambda, g, 500 + 10 * i as u64);
        let steps = (found - rc).abs() * 60.0;
        ok &= steps <= 1.0 + 1e-9;
        parts.push(format!("{name}: argmax {found:.4} vs {rc:.4} ({steps:.2} steps)"));
    }
    (ok, parts.join("; "))
}

/// Replicates per density. Jumps of two cells conserve the parity of every
/// headway, so a J = 2 run stays in the parity class it started in and its
/// flux scatters from seed to seed however long it runs; only more seeds
/// shrink that scatter.
fn c6_seeds(jump: usize) -> usize {
    if jump == 1 {
        4
    } else {
        24
    }
}

fn c6_curves() -> Outcome {
    let grid: Vec<f64> = (1..20).map(|k| k as f64 * 0.05).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut seed = 600;
    for (lambda, limit) in [(1e4, Limit::LambdaToInfinity), (0.1, Limit::LambdaToZero)] {
        for g in [LIN, QUAD] {
            for jump in [1, 2] {
                seed += 1;
                let s = sweep(&base(lambda, jump, g, 600.0, seed), &grid, c6_seeds(jump), 0).unwrap();
                // worst ratio of deviation to allowed deviation
                let mut worst = (0.0f64, 0.0);
                for a in &s.aggregates {
                    let exact = analytic::flux_limit(a.rho_bar, jump, 4.0, limit, g).unwrap();
                    let allowed = (0.05 * exact).max(0.02);
                    let r = (a.f_mean - exact).abs() / allowed;
                    if r > worst.0 {
                        worst = (r, a.rho_bar);
                    }
                }
                ok &= worst.0 <= 1.0;
                parts.push(format!(
                    "lambda={lambda} g={g} J={jump}: worst {:.2} of tolerance at rho {:.2}",
                    worst.0, worst.1
                ));
            }
        }
    }
    (ok, parts.join("; "))
}

fn c7_complexity() -> Outcome {
    let start = Instant::now();
    let report = run_bench(&BenchConfig::default()).unwrap();
    let std = report.slope(EngineKind::Standard).unwrap();
    let acc = report.slope(EngineKind::Accelerated).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        std - acc >= 0.8 && secs < 900.0,
        format!(
            "slopes standard {std:.3}, accelerated {acc:.3}, difference {:.3} (>= 0.8), {secs:.0} s",
            std - acc
        ),
    )
}

fn c8_waiting_times() -> Outcome {
    let n = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    let cases = [
        (EngineKind::Accelerated, KernelSpec::Exponential { lambda: 10.0 }),
        (EngineKind::Standard, KernelSpec::Linear { look_ahead: 30 }),
        (EngineKind::ListBased, KernelSpec::Constant { look_ahead: 20 }),
    ];
    for (i, (engine, kernel)) in cases.into_iter().enumerate() {
        let wt = frozen_waiting_times(100, kernel, Slowdown::default(), engine, n, 80 + i as u64)
            .unwrap();
        let rel = (wt.mean() * wt.total_rate - 1.0).abs();
        let ks = ks_exponential(&wt.samples, wt.total_rate);
        let crit = ks_critical_1pct(n);
        ok &= rel <= 0.02 && ks < crit;
        parts.push(format!(
            "{engine}: mean err {rel:.4} (<= 0.02), KS {ks:.5} (< {crit:.5})"
        ));
    }
    (ok, parts.join("; "))
}

fn c9_list_consistency() -> Outcome {
    let (f_list, f_std) = list_vs_standard_flux(20, 0).unwrap();
    let rel = (f_list - f_std).abs() / f_std;
    let params = RateParams::new(4.0, 1, LIN).unwrap();
    let sel = list_selection_counts(500, 150, 50, &params, 1_000_000, 0).unwrap();
    let max_z = sel.z_scores().into_iter().fold(0.0, f64::max);
    let (chi2, df) = sel.chi_square();
    let crit = chi_square_critical_1pct(df);
    (
        rel <= 0.03 && max_z <= 3.0 && chi2 <= crit,
        format!(
            "F list {f_list:.4} vs standard {f_std:.4}: rel diff {rel:.4} (<= 0.03); \
             max per-car z {max_z:.2} (<= 3); chi2 {chi2:.1} on {df} df (<= {crit:.1})"
        ),
    )
}

fn cars_conserved() -> bool {
    let cases = [
        (EngineKind::Standard, KernelSpec::Linear { look_ahead: 40 }, 1),
        (EngineKind::Accelerated, KernelSpec::Exponential { lambda: 3.0 }, 2),
        (EngineKind::ListBased, KernelSpec::Constant { look_ahead: 25 }, 3),
    ];
    cases.into_iter().all(|(engine, kernel, jump)| {
        let mut cfg = SimConfig::new(300, 120, kernel, LIN);
        cfg.engine = engine;
        cfg.jump = jump;
        let mut sim = Simulation::new(cfg).unwrap();
        (0..20_000).all(|i| {
            sim.step();
            let lat = sim.lattice();
            lat.n_cars() == 120
                && (i % 500 != 0
                    || (lat.occupancy().iter().filter(|&&b| b).count() == 120
                        && lat.is_consistent()))
        })
    })
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_traffic-kmc"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> bool {
    names.iter().all(|n| {
        let (x, y) = (std::fs::read(a.join(n)), std::fs::read(b.join(n)));
        matches!((x, y), (Ok(x), Ok(y)) if x == y && !x.is_empty())
    })
}

fn c10_conservation_determinism() -> Outcome {
    let conserved = cars_conserved();
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    let s = |p: std::path::PathBuf| p.to_string_lossy().into_owned();

    let run = [
        "run", "--cells", "300", "--density", "0.35", "--kernel", "exponential:5", "--g", "linear",
        "--t-final", "200", "--seed", "7", "--events",
    ];
    let mut ok_run = cli(&[&run[..], &["--out", &s(d("run1"))]].concat())
        && cli(&[&run[..], &["--out", &s(d("run2"))]].concat());
    // the manifest written by the first run reproduces it
    ok_run &= cli(&["run", "--config", &s(d("run1").join("manifest.txt")), "--events", "--out", &s(d("run3"))]);
    ok_run &= same_files(&d("run1"), &d("run2"), &["summary.csv", "events.csv"])
        && same_files(&d("run1"), &d("run3"), &["summary.csv", "events.csv"]);

    let sweep_args = [
        "sweep", "--cells", "200", "--kernel", "constant:10", "--g", "quadratic", "--engine",
        "list", "--densities", "0.1,0.3,0.5,0.7", "--seeds", "3", "--t-final", "100", "--seed",
        "5",
    ];
    let mut ok_sweep = true;
    for (name, threads) in [("sw1", "4"), ("sw2", "4"), ("sw3", "1")] {
        ok_sweep &= cli(&[&sweep_args[..], &["--threads", threads, "--out", &s(d(name))]].concat());
    }
    ok_sweep &= same_files(&d("sw1"), &d("sw2"), &["diagram.csv", "aggregate.csv"])
        && same_files(&d("sw1"), &d("sw3"), &["diagram.csv", "aggregate.csv"]);

    let mut ok_validate = true;
    for name in ["v1", "v2"] {
        ok_validate &= cli(&["validate", "--out", &s(d(name))]);
    }
    ok_validate &= same_files(&d("v1"), &d("v2"), &["validate.csv"]);

    (
        conserved && ok_run && ok_sweep && ok_validate,
        format!(
            "cars conserved: {conserved}; byte-identical run: {ok_run}, sweep (1 and 4 threads): {ok_sweep}, validate: {ok_validate}"
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "incremental weights match direct", c1_incremental_vs_direct),
        (2, "standard and accelerated trajectories agree", c2_trajectory_equivalence),
        (3, "limiting flux, lambda -> infinity", c3_limit_infinity),
        (4, "limiting flux, lambda -> 0 and J = 2 maxima", c4_limit_zero),
        (5, "critical densities", c5_critical_densities),
        (6, "flux curves match limits", c6_curves),
        (7, "complexity separation", c7_complexity),
        (8, "waiting-time law", c8_waiting_times),
        (9, "list engine consistency", c9_list_consistency),
        (10, "conservation and determinism", c10_conservation_determinism),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = f();
        if !pass {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
