//! Oracle checks run by `traffic-kmc validate`.
//!
//! Each check reports its measured value next to the threshold it is held
//! to. The building blocks are public so tests can run them at other sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{self, Limit};
use crate::engine::{EngineKind, ListTable, SimConfig, Simulation, StepOutcome};
use crate::kernel::{Kernel, KernelLookup, KernelSpec};
use crate::lattice::LatticeState;
use crate::rates::{weight_direct, RateParams, RateState};
use crate::slowdown::Slowdown;
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// How `value` is compared with `threshold`, e.g. `<=`.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: "<=",
            pass: value <= threshold,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: ">=",
            pass: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,value,relation,threshold,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{:e},{},{:e},{}\n",
                c.name, c.value, c.relation, c.threshold, c.pass
            ));
        }
        out
    }
}

/// Wraps a kernel and drops the periodic reduction in [`KernelLookup::at`]:
/// offsets outside `[0, N)` read as zero. Used to confirm that
/// [`incremental_deviation`] catches a broken wrap-around.
#[derive(Debug, Clone)]
pub struct NonPeriodic(pub Kernel);

impl KernelLookup for NonPeriodic {
    fn n_cells(&self) -> usize {
        self.0.n_cells()
    }

    fn value(&self, offset: usize) -> f64 {
        self.0.value(offset)
    }

    fn at(&self, offset: isize) -> f64 {
        usize::try_from(offset)
            .ok()
            .and_then(|o| self.0.values().get(o).copied())
            .unwrap_or(0.0)
    }

    fn look_ahead(&self) -> usize {
        self.0.look_ahead()
    }
}

/// Runs `events` executed moves with incrementally updated weights and no
/// refreshes. Every `every` moves the weights are compared with a direct
/// recomputation; returns the largest absolute difference seen.
pub fn incremental_deviation<K: KernelLookup + ?Sized>(
    kernel: &K,
    n_cars: usize,
    params: &RateParams,
    events: u64,
    every: u64,
    seed: u64,
) -> Result<f64> {
    let n = kernel.n_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = LatticeState::init_random_with(n, n_cars, &mut rng)?;
    let mut rs = RateState::init(&state, kernel, params);
    let every = every.max(1);
    let mut worst = 0.0f64;
    let mut executed = 0u64;
    while executed < events {
        let car = match rs.select_event(rng.random::<f64>()) {
            Ok(car) => car,
            Err(_) => break,
        };
        if !state.span_vacant_unchecked(car, params.jump) {
            continue;
        }
        let m = state.apply_move(car, params.jump);
        rs.update_accelerated(&state, kernel, params, car, m.old_cell);
        executed += 1;
        if executed % every == 0 || executed == events {
            for (car, &w) in rs.weights().iter().enumerate() {
                let direct = weight_direct(&state, kernel, state.car_cell(car));
                worst = worst.max((w - direct).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryComparison {
    pub steps: u64,
    /// Steps whose selected car or executed flag differ.
    pub mismatches: u64,
    pub max_clock_rel_diff: f64,
}

/// Steps two engines built from `base` in lockstep, both driven by the
/// uniforms drawn by the first.
pub fn compare_trajectories(
    base: &SimConfig,
    a: EngineKind,
    b: EngineKind,
    steps: u64,
) -> Result<TrajectoryComparison> {
    let mut sa = Simulation::new(SimConfig { engine: a, ..base.clone() })?;
    let mut sb = Simulation::new(SimConfig { engine: b, ..base.clone() })?;
    let mut out = TrajectoryComparison {
        steps: 0,
        mismatches: 0,
        max_clock_rel_diff: 0.0,
    };
    for _ in 0..steps {
        let u = sa.draw_uniforms();
        let (ea, eb) = (sa.step_with(u), sb.step_with(u));
        out.steps += 1;
        match (ea, eb) {
            (StepOutcome::Event(x), StepOutcome::Event(y)) => {
                if x.car != y.car || x.executed != y.executed {
                    out.mismatches += 1;
                }
            }
            (StepOutcome::Frozen, StepOutcome::Frozen) => break,
            _ => {
                out.mismatches += 1;
                break;
            }
        }
        let (ca, cb) = (sa.clock(), sb.clock());
        if ca.is_finite() && cb.is_finite() && ca > 0.0 {
            out.max_clock_rel_diff = out.max_clock_rel_diff.max((ca - cb).abs() / ca);
        }
    }
    Ok(out)
}

/// Kolmogorov-Smirnov distance between `samples` and Exp(`rate`).
pub fn ks_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-rate * x).exp();
            (cdf - i as f64 / n).abs().max((((i + 1) as f64) / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTimes {
    pub total_rate: f64,
    pub samples: Vec<f64>,
}

impl WaitingTimes {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// Waiting times drawn on a fully occupied ring, where every selected car is
/// blocked and the configuration never changes.
pub fn frozen_waiting_times(
    n_cells: usize,
    kernel: KernelSpec,
    slowdown: Slowdown,
    engine: EngineKind,
    samples: usize,
    seed: u64,
) -> Result<WaitingTimes> {
    let lattice = LatticeState::from_occupancy(&vec![true; n_cells])?;
    let mut cfg = SimConfig::new(n_cells, n_cells, kernel, slowdown);
    cfg.engine = engine;
    cfg.seed = seed;
    let mut sim = Simulation::with_lattice(cfg, lattice)?;
    let total_rate = sim.total_rate();
    let mut dts = Vec::with_capacity(samples);
    for _ in 0..samples {
        match sim.step() {
            StepOutcome::Event(rec) if !rec.executed => dts.push(rec.dt),
            _ => return Err(Error::InvalidParameter("configuration is not frozen".into())),
        }
    }
    Ok(WaitingTimes {
        total_rate,
        samples: dts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionCounts {
    pub counts: Vec<u64>,
    /// `r_i / R` per car.
    pub expected: Vec<f64>,
    pub draws: u64,
}

impl SelectionCounts {
    /// Per-car `|count - draws p| / sqrt(draws p (1 - p))`; 0 where `p = 0`
    /// and the car was never drawn.
    pub fn z_scores(&self) -> Vec<f64> {
        let n = self.draws as f64;
        self.counts
            .iter()
            .zip(&self.expected)
            .map(|(&c, &p)| {
                let var = n * p * (1.0 - p);
                let diff = (c as f64 - n * p).abs();
                if var > 0.0 {
                    diff / var.sqrt()
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    /// Pearson statistic over cars with positive probability, and its
    /// degrees of freedom.
    pub fn chi_square(&self) -> (f64, usize) {
        let n = self.draws as f64;
        let (mut stat, mut cells) = (0.0, 0usize);
        for (&c, &p) in self.counts.iter().zip(&self.expected) {
            if p > 0.0 {
                let e = n * p;
                stat += (c as f64 - e).powi(2) / e;
                cells += 1;
            }
        }
        (stat, cells.saturating_sub(1))
    }
}

/// Upper 1% point of chi-square with `df` degrees of freedom
/// (Wilson-Hilferty).
pub fn chi_square_critical_1pct(df: usize) -> f64 {
    let k = df as f64;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + 2.326_347_874 * a.sqrt()).powi(3)
}

/// Draws `draws` selections from the list table of a fixed random
/// configuration under the constant kernel `k_i = 1` on `1..=window`.
pub fn list_selection_counts(
    n_cells: usize,
    n_cars: usize,
    window: usize,
    params: &RateParams,
    draws: u64,
    seed: u64,
) -> Result<SelectionCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = LatticeState::init_random_with(n_cells, n_cars, &mut rng)?;
    let table = ListTable::new(&state, window, params);
    let total = table.total();
    let expected = (0..n_cars).map(|c| table.rate(c) / total).collect();
    let mut counts = vec![0u64; n_cars];
    for _ in 0..draws {
        let xi1 = rng.random::<f64>();
        let pick = rng.random::<f64>();
        counts[table.select_event(xi1, pick)?] += 1;
    }
    Ok(SelectionCounts {
        counts,
        expected,
        draws,
    })
}

/// Mean `F` over `seeds` replicates of `base` at density `rho`, cars/s.
pub fn mean_flux(base: &SimConfig, rho: f64, seeds: usize, threads: usize) -> Result<f64> {
    let sweep = stats::sweep(base, &[rho], seeds, threads)?;
    Ok(sweep.aggregates[0].f_mean)
}

fn limit_base(lambda: f64, jump: usize, g: Slowdown, t_final: f64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(500, 0, KernelSpec::Exponential { lambda }, g).with_horizon(t_final);
    cfg.jump = jump;
    cfg.seed = seed;
    cfg
}

/// Relative deviation of simulated from analytic flux.
#[allow(clippy::too_many_arguments)]
fn limit_check(
    name: &str,
    lambda: f64,
    limit: Limit,
    jump: usize,
    g: Slowdown,
    rho: f64,
    seeds: usize,
    threads: usize,
) -> Result<Check> {
    let base = limit_base(lambda, jump, g, 600.0, 11);
    let f = mean_flux(&base, rho, seeds, threads)?;
    let exact = analytic::flux_limit(rho, jump, base.omega0, limit, g)?;
    Ok(Check::at_most(name, (f - exact).abs() / exact, 0.05))
}

/// The full oracle suite. `fault` swaps in [`NonPeriodic`] for the
/// incremental check.
pub fn run_suite(threads: usize, fault: bool) -> Result<Report> {
    let mut checks = Vec::new();
    let lin = Slowdown::LinearClamped;

    let kernel = Kernel::exponential(256, 100.0)?;
    for jump in [1, 2] {
        let params = RateParams::new(4.0, jump, Slowdown::default())?;
        let n_cars = SimConfig::cars_for_density(256, 0.4);
        let dev = if fault {
            incremental_deviation(&NonPeriodic(kernel.clone()), n_cars, &params, 100_000, 1_000, 5)?
        } else {
            incremental_deviation(&kernel, n_cars, &params, 100_000, 1_000, 5)?
        };
        checks.push(Check::at_most(
            format!("incremental_vs_direct_max_abs_J{jump}"),
            dev,
            1e-9,
        ));
    }

    let mut base = SimConfig::new(
        512,
        SimConfig::cars_for_density(512, 0.3),
        KernelSpec::Exponential { lambda: 1000.0 },
        Slowdown::default(),
    );
    base.seed = 3;
    let t = compare_trajectories(&base, EngineKind::Standard, EngineKind::Accelerated, 100_000)?;
    checks.push(Check::at_most("trajectory_mismatches", t.mismatches as f64, 0.0));
    checks.push(Check::at_most("trajectory_clock_rel_diff", t.max_clock_rel_diff, 1e-9));

    let n_samples = 100_000;
    let wt = frozen_waiting_times(
        100,
        KernelSpec::Exponential { lambda: 10.0 },
        Slowdown::default(),
        EngineKind::Accelerated,
        n_samples,
        8,
    )?;
    checks.push(Check::at_most(
        "dt_mean_rel_err",
        (wt.mean() * wt.total_rate - 1.0).abs(),
        0.02,
    ));
    checks.push(Check::at_most(
        "dt_ks_statistic",
        ks_exponential(&wt.samples, wt.total_rate),
        ks_critical_1pct(n_samples),
    ));

    checks.push(limit_check("flux_lambda_inf_J1_rel_err", 1e4, Limit::LambdaToInfinity, 1, lin, 0.5, 5, threads)?);
    checks.push(limit_check("flux_lambda_zero_J1_rel_err", 0.1, Limit::LambdaToZero, 1, lin, 1.0 / 3.0, 5, threads)?);
    checks.push(limit_check("flux_lambda_inf_J2_rel_err", 1e4, Limit::LambdaToInfinity, 2, lin, 1.0 / 3.0, 5, threads)?);
    checks.push(limit_check("flux_lambda_zero_J2_rel_err", 0.1, Limit::LambdaToZero, 2, lin, 0.25, 5, threads)?);

    let params = RateParams::new(4.0, 1, lin)?;
    let sel = list_selection_counts(500, 150, 50, &params, 1_000_000, 0)?;
    let max_z = sel.z_scores().into_iter().fold(0.0, f64::max);
    checks.push(Check::at_most("list_selection_max_z", max_z, 3.0));
    let (chi2, df) = sel.chi_square();
    checks.push(Check::at_most("list_selection_chi2", chi2, chi_square_critical_1pct(df)));

    let (f_list, f_std) = list_vs_standard_flux(20, threads)?;
    checks.push(Check::at_most(
        "list_vs_standard_flux_rel_diff",
        (f_list - f_std).abs() / f_std,
        0.03,
    ));

    let cons = conservation_check()?;
    checks.push(Check::at_least("car_count_conserved", cons as u8 as f64, 1.0));

    Ok(Report { checks })
}

/// Mean `F` of the list and standard engines on the constant kernel
/// `L = 50`, `N = 500`, density 0.3, over `seeds` replicates each.
pub fn list_vs_standard_flux(seeds: usize, threads: usize) -> Result<(f64, f64)> {
    let mut base = SimConfig::new(
        500,
        0,
        KernelSpec::Constant { look_ahead: 50 },
        Slowdown::LinearClamped,
    )
    .with_horizon(600.0);
    base.seed = 21;
    base.engine = EngineKind::ListBased;
    let f_list = mean_flux(&base, 0.3, seeds, threads)?;
    base.engine = EngineKind::Standard;
    let f_std = mean_flux(&base, 0.3, seeds, threads)?;
    Ok((f_list, f_std))
}

/// Car count and lattice consistency after runs on every engine.
fn conservation_check() -> Result<bool> {
    let mut ok = true;
    for engine in [EngineKind::Standard, EngineKind::Accelerated, EngineKind::ListBased] {
        let mut cfg = SimConfig::new(
            200,
            70,
            KernelSpec::Constant { look_ahead: 20 },
            Slowdown::LinearClamped,
        )
        .with_horizon(50.0);
        cfg.engine = engine;
        cfg.jump = 2;
        let mut sim = Simulation::new(cfg)?;
        sim.run();
        let lat = sim.lattice();
        ok &= lat.n_cars() == 70
            && lat.occupancy().iter().filter(|&&b| b).count() == 70
            && lat.is_consistent();
    }
    Ok(ok)
}
