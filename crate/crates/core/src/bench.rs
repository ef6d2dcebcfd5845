//! Per-event cost scaling of the engines.
//!
//! Each timing run uses the global linear kernel (`L = N`) and stops after a
//! fixed number of executed events, so times at different `N` are comparable.

use rayon::prelude::*;

use crate::engine::{EngineKind, SimConfig, Simulation};
use crate::kernel::KernelSpec;
use crate::slowdown::Slowdown;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub engines: Vec<EngineKind>,
    pub events: u64,
    pub density: f64,
    pub jump: usize,
    pub omega0: f64,
    pub slowdown: Slowdown,
    pub seed: u64,
    /// Parallel timing runs; 1 keeps them serial.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 200, 400, 800],
            engines: vec![EngineKind::Standard, EngineKind::Accelerated],
            events: 200_000,
            density: 0.3,
            jump: 1,
            omega0: crate::engine::DEFAULT_OMEGA0,
            slowdown: Slowdown::Arrhenius { c: 3.0 },
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub engine: EngineKind,
    pub n_cells: usize,
    pub n_cars: usize,
    pub events: u64,
    /// s
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub engine: EngineKind,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub slopes: Vec<SlopeRow>,
}

impl BenchReport {
    pub fn slope(&self, engine: EngineKind) -> Option<f64> {
        self.slopes.iter().find(|s| s.engine == engine).map(|s| s.slope)
    }
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn fit_loglog_slope(sizes: &[usize], times: &[f64]) -> Result<f64> {
    if sizes.len() != times.len() {
        return Err(Error::InvalidParameter("sizes and times differ in length".into()));
    }
    if sizes.len() < 3 {
        return Err(Error::InvalidParameter("slope fit needs at least 3 sizes".into()));
    }
    if sizes.iter().any(|&n| n == 0) || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("sizes and times must be positive".into()));
    }
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct sizes".into()));
    }
    Ok(sxy / sxx)
}

fn time_one(cfg: &BenchConfig, engine: EngineKind, n: usize) -> Result<BenchRow> {
    let mut sim_cfg = SimConfig::new(
        n,
        SimConfig::cars_for_density(n, cfg.density),
        KernelSpec::Linear { look_ahead: n },
        cfg.slowdown,
    );
    sim_cfg.jump = cfg.jump;
    sim_cfg.omega0 = cfg.omega0;
    sim_cfg.engine = engine;
    sim_cfg.seed = cfg.seed;
    let mut sim = Simulation::new(sim_cfg)?;
    let wall_time = sim.run_executed(cfg.events);
    Ok(BenchRow {
        engine,
        n_cells: n,
        n_cars: sim.lattice().n_cars(),
        events: sim.executed_events(),
        wall_time,
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.sizes.len() < 3 {
        return Err(Error::InvalidParameter("bench needs at least 3 sizes".into()));
    }
    let jobs: Vec<(EngineKind, usize)> = cfg
        .engines
        .iter()
        .flat_map(|&e| cfg.sizes.iter().map(move |&n| (e, n)))
        .collect();
    let rows: Vec<BenchRow> = if cfg.threads <= 1 {
        jobs.iter().map(|&(e, n)| time_one(cfg, e, n)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            jobs.par_iter()
                .map(|&(e, n)| time_one(cfg, e, n))
                .collect::<Result<_>>()
        })?
    };
    let slopes = cfg
        .engines
        .iter()
        .map(|&engine| {
            let (sizes, times): (Vec<usize>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.engine == engine)
                .map(|r| (r.n_cells, r.wall_time.max(1e-9)))
                .unzip();
            Ok(SlopeRow {
                engine,
                slope: fit_loglog_slope(&sizes, &times)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchReport { rows, slopes })
}
