//! Flow and velocity measurement, and fundamental-diagram sweeps.

use rayon::prelude::*;

use crate::engine::{EngineKind, EventRecord, SimConfig, Simulation};
use crate::{Error, Result};

/// Detector passages and distance travelled within the measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeasureAccumulator {
    pub crossings: u64,
    pub cells_advanced: u64,
    pub executed: u64,
    pub null_events: u64,
    /// s
    pub measure_time: f64,
}

impl MeasureAccumulator {
    pub fn record(&mut self, rec: &EventRecord, jump: usize, detector: usize, n_cells: usize) {
        match rec.old_cell {
            Some(old) if rec.executed => {
                self.executed += 1;
                self.cells_advanced += jump as u64;
                self.crossings += crossings_of_move(old, jump, detector, n_cells) as u64;
            }
            _ => self.null_events += 1,
        }
    }
}

/// 1 iff a jump of `jump` cells from `old_cell` lands on or passes
/// `detector`, i.e. the detector is one of `old+1 ..= old+jump` mod N.
pub fn crossings_of_move(old_cell: usize, jump: usize, detector: usize, n_cells: usize) -> u32 {
    let d = (detector + n_cells - old_cell % n_cells) % n_cells;
    (d >= 1 && d <= jump) as u32
}

/// Cars per second past the detector.
pub fn flow_average(acc: &MeasureAccumulator) -> Result<f64> {
    if !(acc.measure_time > 0.0) {
        return Err(Error::EmptyWindow);
    }
    Ok(acc.crossings as f64 / acc.measure_time)
}

/// Cells per second, averaged over cars and time.
pub fn velocity_average(acc: &MeasureAccumulator, n_cars: usize) -> Result<f64> {
    if !(acc.measure_time > 0.0) {
        return Err(Error::EmptyWindow);
    }
    if n_cars == 0 {
        return Err(Error::InvalidParameter("velocity of an empty system".into()));
    }
    Ok(acc.cells_advanced as f64 / (n_cars as f64 * acc.measure_time))
}

/// Outcome of one run. Undefined averages (empty window, no cars) are
/// reported as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub n_cells: usize,
    pub n_cars: usize,
    /// cars/s
    pub f_bar: f64,
    /// cells/s
    pub v_bar: f64,
    pub window: MeasureAccumulator,
    /// Over the whole run, including burn-in.
    pub executed: u64,
    pub null_events: u64,
    pub frozen: bool,
    pub final_clock: f64,
    pub wall_time: f64,
}

impl SimSummary {
    pub(crate) fn new(acc: &MeasureAccumulator, sim: &Simulation, wall_time: f64) -> Self {
        let n_cars = sim.lattice().n_cars();
        Self {
            n_cells: sim.lattice().n_cells(),
            n_cars,
            f_bar: flow_average(acc).unwrap_or(0.0),
            v_bar: velocity_average(acc, n_cars).unwrap_or(0.0),
            window: *acc,
            executed: sim.executed_events(),
            null_events: sim.null_events(),
            frozen: sim.is_frozen(),
            final_clock: sim.clock(),
            wall_time,
        }
    }

    /// Null events over all steps.
    pub fn null_fraction(&self) -> f64 {
        let steps = self.executed + self.null_events;
        if steps == 0 {
            0.0
        } else {
            self.null_events as f64 / steps as f64
        }
    }

    pub fn f_bar_per_hour(&self) -> f64 {
        self.f_bar * 3600.0
    }
}

/// One `(density, replicate)` point of a fundamental diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramRow {
    pub density_index: usize,
    pub replicate: usize,
    pub rho_bar: f64,
    pub n_cars: usize,
    pub seed: u64,
    /// cars/s
    pub f_bar: f64,
    /// cells/s
    pub v_bar: f64,
    pub null_fraction: f64,
    pub engine: EngineKind,
    pub frozen: bool,
    pub wall_time: f64,
}

impl DiagramRow {
    pub fn f_bar_per_hour(&self) -> f64 {
        self.f_bar * 3600.0
    }
}

/// Mean and standard error over the replicates of one density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityAggregate {
    pub rho_bar: f64,
    pub n_cars: usize,
    pub replicates: usize,
    pub f_mean: f64,
    pub f_stderr: f64,
    pub v_mean: f64,
    pub v_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<DiagramRow>,
    pub aggregates: Vec<DensityAggregate>,
}

impl Sweep {
    /// Grid density with the largest mean flow; ties go to the lower density.
    pub fn argmax_density(&self) -> Option<f64> {
        self.aggregates
            .iter()
            .fold(None::<&DensityAggregate>, |best, a| match best {
                Some(b) if b.f_mean >= a.f_mean => Some(b),
                _ => Some(a),
            })
            .map(|a| a.rho_bar)
    }
}

/// splitmix64 finalizer over the base seed and both indices.
pub fn derive_seed(base_seed: u64, density_index: usize, replicate: usize) -> u64 {
    let mut z = base_seed
        ^ (density_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (replicate as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mean` and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every `(density, replicate)` pair of `base` and aggregates per
/// density. `threads = 0` uses the rayon default. Output order and values do
/// not depend on scheduling.
pub fn sweep(
    base: &SimConfig,
    densities: &[f64],
    seeds_per_density: usize,
    threads: usize,
) -> Result<Sweep> {
    if let Some(&bad) = densities.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "densities must lie in (0, 1], got {bad}"
        )));
    }
    if seeds_per_density == 0 {
        return Err(Error::InvalidParameter("need at least one seed per density".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..densities.len())
        .flat_map(|d| (0..seeds_per_density).map(move |r| (d, r)))
        .collect();
    let run_one = |&(d, r): &(usize, usize)| -> Result<DiagramRow> {
        let rho = densities[d];
        let mut cfg = base.clone();
        cfg.n_cars = SimConfig::cars_for_density(cfg.n_cells, rho);
        cfg.seed = derive_seed(base.seed, d, r);
        let mut sim = Simulation::new(cfg.clone())?;
        let s = sim.run();
        Ok(DiagramRow {
            density_index: d,
            replicate: r,
            rho_bar: rho,
            n_cars: cfg.n_cars,
            seed: cfg.seed,
            f_bar: s.f_bar,
            v_bar: s.v_bar,
            null_fraction: s.null_fraction(),
            engine: cfg.engine,
            frozen: s.frozen,
            wall_time: s.wall_time,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let rows: Vec<DiagramRow> =
        pool.install(|| jobs.par_iter().map(run_one).collect::<Result<Vec<_>>>())?;

    let aggregates = rows
        .chunks(seeds_per_density)
        .map(|chunk| {
            let f: Vec<f64> = chunk.iter().map(|r| r.f_bar).collect();
            let v: Vec<f64> = chunk.iter().map(|r| r.v_bar).collect();
            let (f_mean, f_stderr) = mean_stderr(&f);
            let (v_mean, v_stderr) = mean_stderr(&v);
            DensityAggregate {
                rho_bar: chunk[0].rho_bar,
                n_cars: chunk[0].n_cars,
                replicates: chunk.len(),
                f_mean,
                f_stderr,
                v_mean,
                v_stderr,
            }
        })
        .collect();
    Ok(Sweep { rows, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::slowdown::Slowdown;

    #[test]
    fn crossing_examples() {
        assert_eq!(crossings_of_move(6, 3, 0, 8), 1);
        assert_eq!(crossings_of_move(2, 1, 0, 8), 0);
        assert_eq!(crossings_of_move(7, 1, 0, 8), 1);
        assert_eq!(crossings_of_move(0, 2, 0, 8), 0);
        assert_eq!(crossings_of_move(3, 2, 5, 8), 1);
    }

    #[test]
    fn averages() {
        let acc = MeasureAccumulator {
            crossings: 100,
            measure_time: 50.0,
            ..Default::default()
        };
        assert_eq!(flow_average(&acc).unwrap(), 2.0);
        assert_eq!(flow_average(&acc).unwrap() * 3600.0, 7200.0);
        assert_eq!(velocity_average(&acc, 10).unwrap(), 0.0);
        assert_eq!(
            flow_average(&MeasureAccumulator::default()),
            Err(Error::EmptyWindow)
        );
        assert!(velocity_average(&acc, 0).is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for d in 0..50 {
            for r in 0..20 {
                assert!(seen.insert(derive_seed(7, d, r)));
            }
        }
        assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    }

    #[test]
    fn mean_stderr_small_cases() {
        assert_eq!(mean_stderr(&[]), (0.0, 0.0));
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
        let (m, se) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    fn small_base() -> SimConfig {
        SimConfig::new(
            60,
            0,
            KernelSpec::Exponential { lambda: 5.0 },
            Slowdown::LinearClamped,
        )
        .with_horizon(20.0)
    }

    #[test]
    fn sweep_shape_and_jammed_point() {
        let s = sweep(&small_base(), &[0.2, 0.5, 1.0], 2, 1).unwrap();
        assert_eq!(s.rows.len(), 6);
        assert_eq!(s.aggregates.len(), 3);
        assert_eq!(s.aggregates[2].f_mean, 0.0);
        assert!(s.rows.iter().all(|r| r.f_bar >= 0.0 && r.v_bar >= 0.0));
        assert!(sweep(&small_base(), &[0.0], 1, 1).is_err());
        assert!(sweep(&small_base(), &[1.2], 1, 1).is_err());
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let a = sweep(&small_base(), &[0.1, 0.3, 0.6], 3, 1).unwrap();
        let b = sweep(&small_base(), &[0.1, 0.3, 0.6], 3, 4).unwrap();
        let strip = |s: &Sweep| {
            s.rows
                .iter()
                .map(|r| (r.seed, r.f_bar.to_bits(), r.v_bar.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn velocity_identity_holds_exactly() {
        let mut cfg = small_base();
        cfg.n_cars = 20;
        cfg.jump = 2;
        let mut sim = Simulation::new(cfg).unwrap();
        let s = sim.run();
        let expected = 2.0 * s.window.executed as f64 / (20.0 * s.window.measure_time);
        assert_eq!(s.v_bar, expected);
    }
}
