//! `traffic-kmc` command line: run, sweep, bench and validate.
//!
//! Settings come from an optional `--config` file of `key=value` lines, then
//! from flags, which win. Every subcommand writes a `manifest.txt` holding the
//! resolved settings; it can be passed back through `--config`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchConfig};
use crate::engine::{DtConvention, EngineKind, SimConfig, Simulation, DEFAULT_REFRESH_EVERY};
use crate::kernel::KernelSpec;
use crate::slowdown::Slowdown;
use crate::stats::{self, SimSummary, Sweep};
use crate::validate;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "traffic-kmc", version, about = "Kinetic Monte Carlo for look-ahead traffic on a ring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One simulation; writes summary.csv.
    Run(RunArgs),
    /// Fundamental diagram over a density grid; writes diagram.csv and aggregate.csv.
    Sweep(SweepArgs),
    /// Wall time per engine and size at a fixed event budget; writes bench.csv and slopes.csv.
    Bench(BenchArgs),
    /// Oracle checks; exits 1 if any fails.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// key=value file; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long, conflicts_with = "cars")]
    pub density: Option<String>,
    #[arg(long)]
    pub cars: Option<String>,
    #[arg(long)]
    pub jump: Option<String>,
    /// constant:L | linear:L | exponential:LAMBDA
    #[arg(long)]
    pub kernel: Option<String>,
    /// arrhenius:C | linear | quadratic
    #[arg(long)]
    pub g: Option<String>,
    /// standard | accelerated | list
    #[arg(long)]
    pub engine: Option<String>,
    #[arg(long)]
    pub omega0: Option<String>,
    #[arg(long)]
    pub t_final: Option<String>,
    #[arg(long)]
    pub burn_in: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    #[arg(long)]
    pub refresh_every: Option<String>,
    /// pre | post
    #[arg(long)]
    pub dt_rate_convention: Option<String>,
    #[arg(long)]
    pub detector: Option<String>,
    /// Record measured wall time instead of NA.
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write events.csv with every step.
    #[arg(long)]
    pub events: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated densities; overrides the rho-min/max/step grid.
    #[arg(long)]
    pub densities: Option<String>,
    #[arg(long)]
    pub rho_min: Option<String>,
    #[arg(long)]
    pub rho_max: Option<String>,
    #[arg(long)]
    pub rho_step: Option<String>,
    /// Replicates per density.
    #[arg(long)]
    pub seeds: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated lattice sizes.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Comma-separated engines.
    #[arg(long)]
    pub engines: Option<String>,
    /// Executed events per timing run.
    #[arg(long = "budget")]
    pub budget: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    /// Replace the kernel lookup in the incremental check with one that
    /// ignores periodicity.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

const COMMON_KEYS: &[&str] = &[
    "cells",
    "density",
    "cars",
    "jump",
    "kernel",
    "g",
    "engine",
    "omega0",
    "t_final",
    "burn_in",
    "seed",
    "out",
    "threads",
    "refresh_every",
    "dt_rate_convention",
    "detector",
    "wall_time",
];

/// Keys written into manifests for reference only.
const INFO_KEYS: &[&str] = &["subcommand", "outputs"];

/// Resolved `key=value` settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    allowed: Vec<&'static str>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    fn new(allowed: Vec<&'static str>) -> Self {
        Self {
            values: BTreeMap::new(),
            allowed,
        }
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize(key);
        if INFO_KEYS.contains(&key.as_str()) {
            return Ok(());
        }
        if !self.allowed.contains(&key.as_str()) {
            return Err(Error::Config {
                key,
                message: "unknown key".into(),
            });
        }
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn load_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                key: format!("line {}", i + 1),
                message: format!("expected key=value, got `{line}`"),
            })?;
            self.insert(k, v)?;
        }
        Ok(())
    }

    fn overlay(&mut self, key: &str, value: &Option<String>) -> Result<()> {
        match value {
            Some(v) => self.insert(key, v),
            None => Ok(()),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| Error::Config {
                key: key.to_string(),
                message: format!("cannot parse `{v}`: {e}"),
            }),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.values.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim().parse::<T>().map_err(|e| Error::Config {
                    key: key.to_string(),
                    message: format!("cannot parse `{}`: {e}", s.trim()),
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn flag(&self, key: &str) -> Result<bool> {
        self.get_or(key, false)
    }
}

fn load_common(common: &Common, extra: &[&'static str]) -> Result<Settings> {
    let mut s = Settings::new(COMMON_KEYS.iter().chain(extra).copied().collect());
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            key: "config".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        s.load_str(&text)?;
    }
    let flags = [
        ("cells", &common.cells),
        ("density", &common.density),
        ("cars", &common.cars),
        ("jump", &common.jump),
        ("kernel", &common.kernel),
        ("g", &common.g),
        ("engine", &common.engine),
        ("omega0", &common.omega0),
        ("t_final", &common.t_final),
        ("burn_in", &common.burn_in),
        ("seed", &common.seed),
        ("out", &common.out),
        ("threads", &common.threads),
        ("refresh_every", &common.refresh_every),
        ("dt_rate_convention", &common.dt_rate_convention),
        ("detector", &common.detector),
    ];
    for (k, v) in flags {
        s.overlay(k, v)?;
    }
    // a density flag displaces a car count from the file, and vice versa
    if common.density.is_some() {
        s.values.remove("cars");
    }
    if common.cars.is_some() {
        s.values.remove("density");
    }
    if common.wall_time {
        s.insert("wall_time", "true")?;
    }
    Ok(s)
}

fn config_err(key: &str, e: impl std::fmt::Display) -> Error {
    Error::Config {
        key: key.into(),
        message: e.to_string(),
    }
}

/// Everything except the car count, which the caller fills in.
fn sim_config(s: &Settings) -> Result<SimConfig> {
    let n: usize = s.get_or("cells", 1000)?;
    let kernel: KernelSpec = s.get_or("kernel", KernelSpec::Exponential { lambda: 10.0 })?;
    let g: Slowdown = s.get_or("g", Slowdown::default())?;
    let mut cfg = SimConfig::new(n, 0, kernel, g);
    cfg.jump = s.get_or("jump", 1)?;
    cfg.omega0 = s.get_or("omega0", cfg.omega0)?;
    cfg.t_final = s.get_or("t_final", cfg.t_final)?;
    cfg.burn_in = s.get_or("burn_in", 0.1 * cfg.t_final)?;
    cfg.seed = s.get_or("seed", 0)?;
    cfg.engine = s.get_or("engine", EngineKind::Accelerated)?;
    cfg.refresh_every = s.get_or("refresh_every", DEFAULT_REFRESH_EVERY)?;
    cfg.dt_convention = s.get_or("dt_rate_convention", DtConvention::PostUpdate)?;
    cfg.detector = s.get_or("detector", 0)?;
    if !(cfg.omega0 > 0.0 && cfg.omega0.is_finite()) {
        return Err(config_err("omega0", "must be positive"));
    }
    if !(cfg.t_final >= 0.0) {
        return Err(config_err("t_final", "must be non-negative"));
    }
    if !(cfg.burn_in >= 0.0) {
        return Err(config_err("burn_in", "must be non-negative"));
    }
    if cfg.n_cells < 2 {
        return Err(config_err("cells", "need at least 2 cells"));
    }
    if cfg.jump == 0 || cfg.jump >= cfg.n_cells {
        return Err(config_err("jump", format!("must lie in [1, {})", cfg.n_cells)));
    }
    if cfg.detector >= cfg.n_cells {
        return Err(config_err("detector", "outside the lattice"));
    }
    if let Err(e) = cfg.kernel.build(cfg.n_cells) {
        return Err(config_err("kernel", e));
    }
    if cfg.engine == EngineKind::ListBased && !matches!(cfg.kernel, KernelSpec::Constant { .. }) {
        return Err(config_err("engine", "the list engine requires a constant kernel"));
    }
    Ok(cfg)
}

fn density_in_range(key: &str, rho: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&rho) {
        Ok(rho)
    } else {
        Err(config_err(key, format!("{rho} outside [0, 1]")))
    }
}

fn out_dir(s: &Settings) -> Result<PathBuf> {
    let dir = PathBuf::from(s.raw("out").unwrap_or("out"));
    fs::create_dir_all(&dir).map_err(|e| config_err("out", format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn threads(s: &Settings, default: usize) -> Result<usize> {
    s.get_or("threads", default)
}

struct Manifest(String);

impl Manifest {
    fn new(subcommand: &str) -> Self {
        Self(format!(
            "# traffic-kmc {}\nsubcommand={subcommand}\n",
            env!("CARGO_PKG_VERSION")
        ))
    }

    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key}={value}");
    }

    fn put_sim(&mut self, cfg: &SimConfig) {
        self.put("cells", cfg.n_cells);
        self.put("jump", cfg.jump);
        self.put("kernel", cfg.kernel);
        self.put("g", cfg.slowdown);
        self.put("engine", cfg.engine);
        self.put("omega0", cfg.omega0);
        self.put("t_final", cfg.t_final);
        self.put("burn_in", cfg.burn_in);
        self.put("seed", cfg.seed);
        self.put("refresh_every", cfg.refresh_every);
        self.put("dt_rate_convention", cfg.dt_convention);
        self.put("detector", cfg.detector);
    }

    fn write(self, dir: &Path) -> Result<()> {
        fs::write(dir.join("manifest.txt"), self.0)?;
        Ok(())
    }
}

fn wall(measured: bool, secs: f64) -> String {
    if measured {
        format!("{secs}")
    } else {
        "NA".into()
    }
}

pub const SUMMARY_HEADER: &str = "n_cells,n_cars,jump,kernel,lambda_or_L,g,engine,seed,t_final,burn_in,F_bar_per_s,F_bar_per_h,v_bar_cells_per_s,null_fraction,frozen,wall_time_s";

fn summary_line(cfg: &SimConfig, s: &SimSummary, wall_time: bool) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        s.n_cells,
        s.n_cars,
        cfg.jump,
        cfg.kernel.name(),
        cfg.kernel.parameter(),
        cfg.slowdown,
        cfg.engine,
        cfg.seed,
        cfg.t_final,
        cfg.burn_in,
        s.f_bar,
        s.f_bar_per_hour(),
        s.v_bar,
        s.null_fraction(),
        s.frozen,
        wall(wall_time, s.wall_time),
    )
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let s = load_common(&args.common, &[])?;
    let mut cfg = sim_config(&s)?;
    cfg.n_cars = match (s.get::<usize>("cars")?, s.get::<f64>("density")?) {
        (Some(c), _) => c,
        (None, Some(rho)) => SimConfig::cars_for_density(cfg.n_cells, density_in_range("density", rho)?),
        (None, None) => SimConfig::cars_for_density(cfg.n_cells, 0.3),
    };
    if cfg.n_cars > cfg.n_cells {
        return Err(config_err("cars", format!("{} cars on {} cells", cfg.n_cars, cfg.n_cells)));
    }
    if !(cfg.t_final > cfg.burn_in) {
        return Err(config_err(
            "t_final",
            format!("t_final ({}) must exceed burn_in ({})", cfg.t_final, cfg.burn_in),
        ));
    }
    let wall_time = s.flag("wall_time")?;
    let dir = out_dir(&s)?;

    let mut sim = Simulation::new(cfg.clone())?;
    let summary = if args.events {
        let mut w = BufWriter::new(fs::File::create(dir.join("events.csv"))?);
        let mut io_err = None;
        writeln!(w, "time_before,dt,car,old_cell,new_cell,executed")?;
        let opt = |c: Option<usize>| c.map_or_else(String::new, |c| c.to_string());
        let summary = sim.run_observed(|r| {
            if io_err.is_none() {
                if let Err(e) = writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    r.time_before,
                    r.dt,
                    r.car,
                    opt(r.old_cell),
                    opt(r.new_cell),
                    r.executed
                ) {
                    io_err = Some(e);
                }
            }
        });
        if let Some(e) = io_err {
            return Err(e.into());
        }
        w.flush()?;
        summary
    } else {
        sim.run()
    };

    let mut csv = format!("{SUMMARY_HEADER}\n");
    csv.push_str(&summary_line(&cfg, &summary, wall_time));
    fs::write(dir.join("summary.csv"), csv)?;

    let mut m = Manifest::new("run");
    m.put_sim(&cfg);
    m.put("cars", cfg.n_cars);
    m.put("wall_time", wall_time);
    m.put("out", dir.display());
    let mut outputs = "summary.csv".to_string();
    if args.events {
        outputs.push_str(";events.csv");
    }
    m.put("outputs", outputs);
    m.write(&dir)?;

    println!(
        "F_bar = {:.6} cars/s ({:.1} cars/h), v_bar = {:.6} cells/s, frozen = {}",
        summary.f_bar,
        summary.f_bar_per_hour(),
        summary.v_bar,
        summary.frozen
    );
    Ok(EXIT_OK)
}

/// `min, min + step, ..., max`, rounded to 12 decimals so that printed
/// values are clean.
pub fn density_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(config_err("rho_step", "must be positive"));
    }
    if !(max >= min) {
        return Err(config_err("rho_max", "must not be below rho_min"));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub const DIAGRAM_HEADER: &str = "rho_bar,replicate,seed,n_cars,F_bar_per_s,F_bar_per_h,v_bar_cells_per_s,null_fraction,engine,frozen,wall_time_s";
pub const AGGREGATE_HEADER: &str = "rho_bar,n_cars,replicates,F_mean_per_s,F_stderr_per_s,F_mean_per_h,v_mean_cells_per_s,v_stderr_cells_per_s";

pub fn diagram_csv(sweep: &Sweep, wall_time: bool) -> String {
    let mut out = format!("{DIAGRAM_HEADER}\n");
    for r in &sweep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.rho_bar,
            r.replicate,
            r.seed,
            r.n_cars,
            r.f_bar,
            r.f_bar_per_hour(),
            r.v_bar,
            r.null_fraction,
            r.engine,
            r.frozen,
            wall(wall_time, r.wall_time)
        );
    }
    out
}

pub fn aggregate_csv(sweep: &Sweep) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for a in &sweep.aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.rho_bar,
            a.n_cars,
            a.replicates,
            a.f_mean,
            a.f_stderr,
            a.f_mean * 3600.0,
            a.v_mean,
            a.v_stderr
        );
    }
    out
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let mut s = load_common(
        &args.common,
        &["densities", "rho_min", "rho_max", "rho_step", "seeds"],
    )?;
    s.overlay("densities", &args.densities)?;
    s.overlay("rho_min", &args.rho_min)?;
    s.overlay("rho_max", &args.rho_max)?;
    s.overlay("rho_step", &args.rho_step)?;
    s.overlay("seeds", &args.seeds)?;
    if s.has("cars") {
        return Err(config_err("cars", "sweep takes densities, not a car count"));
    }
    let cfg = sim_config(&s)?;
    if !(cfg.t_final > cfg.burn_in) {
        return Err(config_err(
            "t_final",
            format!("t_final ({}) must exceed burn_in ({})", cfg.t_final, cfg.burn_in),
        ));
    }
    let densities = match (s.list::<f64>("densities")?, s.get::<f64>("density")?) {
        (Some(d), _) => d,
        (None, Some(rho)) => vec![rho],
        (None, None) => density_grid(
            s.get_or("rho_min", 0.05)?,
            s.get_or("rho_max", 0.95)?,
            s.get_or("rho_step", 0.05)?,
        )?,
    };
    if densities.is_empty() {
        return Err(config_err("densities", "empty grid"));
    }
    if let Some(bad) = densities.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(config_err("densities", format!("{bad} outside (0, 1]")));
    }
    let seeds: usize = s.get_or("seeds", 10)?;
    if seeds == 0 {
        return Err(config_err("seeds", "need at least one"));
    }
    let threads = threads(&s, 0)?;
    let wall_time = s.flag("wall_time")?;
    let dir = out_dir(&s)?;

    let sweep = stats::sweep(&cfg, &densities, seeds, threads)?;
    fs::write(dir.join("diagram.csv"), diagram_csv(&sweep, wall_time))?;
    fs::write(dir.join("aggregate.csv"), aggregate_csv(&sweep))?;

    let mut m = Manifest::new("sweep");
    m.put_sim(&cfg);
    m.put(
        "densities",
        densities.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );
    m.put("seeds", seeds);
    m.put("threads", threads);
    m.put("wall_time", wall_time);
    m.put("out", dir.display());
    m.put("outputs", "diagram.csv;aggregate.csv");
    m.write(&dir)?;

    if let Some(rho) = sweep.argmax_density() {
        println!(
            "{} runs; maximum mean flow at rho_bar = {rho}",
            sweep.rows.len()
        );
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let mut s = load_common(&args.common, &["sizes", "engines", "budget"])?;
    s.overlay("sizes", &args.sizes)?;
    s.overlay("engines", &args.engines)?;
    s.overlay("budget", &args.budget)?;
    for key in ["kernel", "cars", "t_final", "burn_in", "detector", "dt_rate_convention", "refresh_every", "cells"] {
        if s.has(key) {
            return Err(config_err(key, "not used by bench"));
        }
    }
    let mut cfg = BenchConfig::default();
    if let Some(sizes) = s.list::<usize>("sizes")? {
        cfg.sizes = sizes;
    }
    if cfg.sizes.len() < 3 {
        return Err(config_err("sizes", "need at least 3 sizes"));
    }
    if cfg.sizes.iter().any(|&n| n < 4) {
        return Err(config_err("sizes", "sizes must be at least 4"));
    }
    if let Some(engines) = s.list::<EngineKind>("engines")? {
        cfg.engines = engines;
    }
    if cfg.engines.contains(&EngineKind::ListBased) {
        return Err(config_err("engines", "the list engine needs a constant kernel"));
    }
    cfg.events = s.get_or("budget", cfg.events)?;
    cfg.density = density_in_range("density", s.get_or("density", cfg.density)?)?;
    cfg.jump = s.get_or("jump", cfg.jump)?;
    if cfg.jump == 0 || cfg.sizes.iter().any(|&n| cfg.jump >= n) {
        return Err(config_err("jump", "must lie in [1, min size)"));
    }
    cfg.omega0 = s.get_or("omega0", cfg.omega0)?;
    cfg.slowdown = s.get_or("g", cfg.slowdown)?;
    cfg.seed = s.get_or("seed", cfg.seed)?;
    cfg.threads = threads(&s, 1)?;
    let dir = out_dir(&s)?;

    let report = bench::run_bench(&cfg)?;
    let mut csv = String::from("engine,n_cells,n_cars,events,wall_time_s,time_per_event_s\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.engine,
            r.n_cells,
            r.n_cars,
            r.events,
            r.wall_time,
            r.wall_time / r.events.max(1) as f64
        );
    }
    fs::write(dir.join("bench.csv"), csv)?;
    let mut slopes = String::from("engine,slope\n");
    for sl in &report.slopes {
        let _ = writeln!(slopes, "{},{}", sl.engine, sl.slope);
    }
    let diff = match (
        report.slope(EngineKind::Standard),
        report.slope(EngineKind::Accelerated),
    ) {
        (Some(a), Some(b)) => {
            let _ = writeln!(slopes, "standard_minus_accelerated,{}", a - b);
            Some(a - b)
        }
        _ => None,
    };
    fs::write(dir.join("slopes.csv"), slopes)?;

    let mut m = Manifest::new("bench");
    m.put(
        "sizes",
        cfg.sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    m.put(
        "engines",
        cfg.engines.iter().map(|e| e.name()).collect::<Vec<_>>().join(","),
    );
    m.put("budget", cfg.events);
    m.put("density", cfg.density);
    m.put("jump", cfg.jump);
    m.put("omega0", cfg.omega0);
    m.put("g", cfg.slowdown);
    m.put("seed", cfg.seed);
    m.put("threads", cfg.threads);
    m.put("out", dir.display());
    m.put("outputs", "bench.csv;slopes.csv");
    m.write(&dir)?;

    for sl in &report.slopes {
        println!("{}: slope {:.3}", sl.engine, sl.slope);
    }
    if let Some(d) = diff {
        println!("slope difference {d:.3}");
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let threads: usize = match &args.threads {
        Some(t) => t.parse().map_err(|e| config_err("threads", e))?,
        None => 0,
    };
    let report = validate::run_suite(threads, args.inject_fault)?;
    let csv = report.to_csv();
    print!("{csv}");
    if let Some(out) = &args.out {
        let dir = PathBuf::from(out);
        fs::create_dir_all(&dir).map_err(|e| config_err("out", e))?;
        fs::write(dir.join("validate.csv"), &csv)?;
        let mut m = Manifest::new("validate");
        m.put("threads", threads);
        m.put("out", dir.display());
        m.put("outputs", "validate.csv");
        m.write(&dir)?;
    }
    if report.passed() {
        println!("all checks passed");
        Ok(EXIT_OK)
    } else {
        println!("validation failed");
        Ok(EXIT_VALIDATION)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
