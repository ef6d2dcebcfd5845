//! C ABI for `traffic-kmc`.
//!
//! Simulations are opaque `TkmcSim` handles created by [`tkmc_sim_new`] and
//! released by [`tkmc_sim_free`]. Every fallible call returns a
//! [`TkmcStatus`]; on failure [`tkmc_last_error`] describes what went wrong
//! on the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use traffic_kmc::analytic::{self, Limit};
use traffic_kmc::{
    DtConvention, EngineKind, Error, KernelSpec, SimConfig, Simulation, Slowdown, StepOutcome,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Unsupported = 4,
    /// The total rate is zero; nothing more can happen.
    Frozen = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkmcKernelKind {
    Constant = 0,
    Linear = 1,
    Exponential = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkmcSlowdownKind {
    Arrhenius = 0,
    Linear = 1,
    Quadratic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkmcEngine {
    Standard = 0,
    Accelerated = 1,
    List = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkmcLimit {
    LambdaToZero = 0,
    LambdaToInfinity = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkmcDtConvention {
    Post = 0,
    Pre = 1,
}

/// Plain-data run configuration. Fill with [`tkmc_config_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TkmcConfig {
    pub n_cells: usize,
    pub n_cars: usize,
    pub jump: usize,
    pub omega0: f64,
    pub kernel: TkmcKernelKind,
    /// Look-ahead L for constant/linear kernels, lambda for exponential.
    pub kernel_param: f64,
    pub slowdown: TkmcSlowdownKind,
    /// Arrhenius coefficient; ignored by the other slowdowns.
    pub slowdown_c: f64,
    pub t_final: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub engine: TkmcEngine,
    pub refresh_every: u64,
    pub detector: usize,
    pub dt_convention: TkmcDtConvention,
}

/// One step. `old_cell` and `new_cell` are -1 for a null event.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TkmcEvent {
    pub time_before: f64,
    pub dt: f64,
    pub car: usize,
    pub old_cell: i64,
    pub new_cell: i64,
    pub executed: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TkmcSummary {
    pub f_bar: f64,
    pub v_bar: f64,
    pub crossings: u64,
    pub cells_advanced: u64,
    pub measure_time: f64,
    pub executed: u64,
    pub null_events: u64,
    pub frozen: bool,
    pub final_clock: f64,
}

/// Opaque simulation handle.
pub struct TkmcSim {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: TkmcStatus, msg: impl AsRef<str>) -> TkmcStatus {
    set_error(msg.as_ref());
    status
}

fn from_core(e: Error) -> TkmcStatus {
    let status = match e {
        Error::UnsupportedLimit(_) => TkmcStatus::Unsupported,
        Error::NoEvents => TkmcStatus::Frozen,
        _ => TkmcStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> TkmcStatus) -> TkmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == TkmcStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(TkmcStatus::Panic, "internal panic"),
    }
}

fn slowdown(kind: TkmcSlowdownKind, c: f64) -> Result<Slowdown, Error> {
    match kind {
        TkmcSlowdownKind::Arrhenius => Slowdown::arrhenius(c),
        TkmcSlowdownKind::Linear => Ok(Slowdown::LinearClamped),
        TkmcSlowdownKind::Quadratic => Ok(Slowdown::QuadraticClamped),
    }
}

fn look_ahead(param: f64) -> Result<usize, Error> {
    if param.fract() == 0.0 && param >= 1.0 && param <= usize::MAX as f64 {
        Ok(param as usize)
    } else {
        Err(Error::InvalidParameter(format!("look-ahead must be a positive integer, got {param}")))
    }
}

impl TkmcConfig {
    fn to_core(self) -> Result<SimConfig, Error> {
        let kernel = match self.kernel {
            TkmcKernelKind::Constant => KernelSpec::Constant { look_ahead: look_ahead(self.kernel_param)? },
            TkmcKernelKind::Linear => KernelSpec::Linear { look_ahead: look_ahead(self.kernel_param)? },
            TkmcKernelKind::Exponential => KernelSpec::Exponential { lambda: self.kernel_param },
        };
        let mut cfg = SimConfig::new(self.n_cells, self.n_cars, kernel, slowdown(self.slowdown, self.slowdown_c)?);
        cfg.jump = self.jump;
        cfg.omega0 = self.omega0;
        cfg.t_final = self.t_final;
        cfg.burn_in = self.burn_in;
        cfg.seed = self.seed;
        cfg.engine = match self.engine {
            TkmcEngine::Standard => EngineKind::Standard,
            TkmcEngine::Accelerated => EngineKind::Accelerated,
            TkmcEngine::List => EngineKind::ListBased,
        };
        cfg.refresh_every = self.refresh_every;
        cfg.detector = self.detector;
        cfg.dt_convention = match self.dt_convention {
            TkmcDtConvention::Post => DtConvention::PostUpdate,
            TkmcDtConvention::Pre => DtConvention::PreUpdate,
        };
        Ok(cfg)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tkmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or "" after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn tkmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Defaults: 1000 cells, 300 cars, J = 1, omega0 = 4, exponential kernel
/// with lambda = 10, Arrhenius slowdown with c = 1, one hour with 360 s
/// burn-in, accelerated engine.
///
/// # Safety
/// `out` must be null or point to writable memory for a `TkmcConfig`.
#[no_mangle]
pub unsafe extern "C" fn tkmc_config_default(out: *mut TkmcConfig) -> TkmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TkmcStatus::NullPointer, "out is null");
        }
        let cfg = TkmcConfig {
            n_cells: 1000,
            n_cars: 300,
            jump: 1,
            omega0: 4.0,
            kernel: TkmcKernelKind::Exponential,
            kernel_param: 10.0,
            slowdown: TkmcSlowdownKind::Arrhenius,
            slowdown_c: 1.0,
            t_final: 3600.0,
            burn_in: 360.0,
            seed: 0,
            engine: TkmcEngine::Accelerated,
            refresh_every: traffic_kmc::engine::DEFAULT_REFRESH_EVERY,
            detector: 0,
            dt_convention: TkmcDtConvention::Post,
        };
        unsafe { out.write(cfg) };
        TkmcStatus::Ok
    })
}

/// Builds a simulation with randomly placed cars.
///
/// # Safety
/// `config` must be null or point to a valid `TkmcConfig`; `out` must be
/// null or writable. On success `*out` owns a handle for `tkmc_sim_free`.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_new(config: *const TkmcConfig, out: *mut *mut TkmcSim) -> TkmcStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(TkmcStatus::NullPointer, "config or out is null");
        }
        unsafe { out.write(ptr::null_mut()) };
        let cfg = match unsafe { config.read() }.to_core() {
            Ok(c) => c,
            Err(e) => return from_core(e),
        };
        if let Err(e) = cfg.validate_horizon() {
            return from_core(e);
        }
        match Simulation::new(cfg) {
            Ok(sim) => {
                unsafe { out.write(Box::into_raw(Box::new(TkmcSim { sim }))) };
                TkmcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `sim` must be null or a handle from `tkmc_sim_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_free(sim: *mut TkmcSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

unsafe fn with_sim<'a>(sim: *mut TkmcSim) -> Option<&'a mut TkmcSim> {
    unsafe { sim.as_mut() }
}

/// One step. Returns `TKMC_STATUS_FROZEN` (and leaves `*event` untouched)
/// once no event can fire.
///
/// # Safety
/// `sim` must be a live handle; `event` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_step(sim: *mut TkmcSim, event: *mut TkmcEvent) -> TkmcStatus {
    guard(|| {
        let Some(h) = (unsafe { with_sim(sim) }) else {
            return fail(TkmcStatus::NullPointer, "sim is null");
        };
        match h.sim.step() {
            StepOutcome::Frozen => fail(TkmcStatus::Frozen, "total rate is zero"),
            StepOutcome::Event(rec) => {
                if !event.is_null() {
                    let cell = |c: Option<usize>| c.map_or(-1, |c| c as i64);
                    unsafe {
                        event.write(TkmcEvent {
                            time_before: rec.time_before,
                            dt: rec.dt,
                            car: rec.car,
                            old_cell: cell(rec.old_cell),
                            new_cell: cell(rec.new_cell),
                            executed: rec.executed,
                        })
                    };
                }
                TkmcStatus::Ok
            }
        }
    })
}

/// Runs to `t_final` (or until frozen) and reports the measured averages.
///
/// # Safety
/// `sim` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_run(sim: *mut TkmcSim, out: *mut TkmcSummary) -> TkmcStatus {
    guard(|| {
        let Some(h) = (unsafe { with_sim(sim) }) else {
            return fail(TkmcStatus::NullPointer, "sim is null");
        };
        if let Err(e) = h.sim.config().validate_horizon() {
            return from_core(e);
        }
        let s = h.sim.run();
        if !out.is_null() {
            unsafe {
                out.write(TkmcSummary {
                    f_bar: s.f_bar,
                    v_bar: s.v_bar,
                    crossings: s.window.crossings,
                    cells_advanced: s.window.cells_advanced,
                    measure_time: s.window.measure_time,
                    executed: s.executed,
                    null_events: s.null_events,
                    frozen: s.frozen,
                    final_clock: s.final_clock,
                })
            };
        }
        TkmcStatus::Ok
    })
}

/// # Safety
/// `sim` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_clock(sim: *const TkmcSim, out: *mut f64) -> TkmcStatus {
    guard(|| {
        let (Some(h), false) = (unsafe { sim.as_ref() }, out.is_null()) else {
            return fail(TkmcStatus::NullPointer, "sim or out is null");
        };
        unsafe { out.write(h.sim.clock()) };
        TkmcStatus::Ok
    })
}

/// # Safety
/// `sim` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_total_rate(sim: *const TkmcSim, out: *mut f64) -> TkmcStatus {
    guard(|| {
        let (Some(h), false) = (unsafe { sim.as_ref() }, out.is_null()) else {
            return fail(TkmcStatus::NullPointer, "sim or out is null");
        };
        unsafe { out.write(h.sim.total_rate()) };
        TkmcStatus::Ok
    })
}

/// Number of cells; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_n_cells(sim: *const TkmcSim) -> usize {
    unsafe { sim.as_ref() }.map_or(0, |h| h.sim.lattice().n_cells())
}

/// Number of cars; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_n_cars(sim: *const TkmcSim) -> usize {
    unsafe { sim.as_ref() }.map_or(0, |h| h.sim.lattice().n_cars())
}

/// Writes 1 for occupied and 0 for vacant cells into `buf[0..n_cells]`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_occupancy(sim: *const TkmcSim, buf: *mut u8, len: usize) -> TkmcStatus {
    guard(|| {
        let (Some(h), false) = (unsafe { sim.as_ref() }, buf.is_null()) else {
            return fail(TkmcStatus::NullPointer, "sim or buf is null");
        };
        let occ = h.sim.lattice().occupancy();
        if len < occ.len() {
            return fail(TkmcStatus::BufferTooSmall, format!("need {} bytes", occ.len()));
        }
        let out = unsafe { std::slice::from_raw_parts_mut(buf, occ.len()) };
        for (o, &b) in out.iter_mut().zip(occ) {
            *o = b as u8;
        }
        TkmcStatus::Ok
    })
}

/// Writes each car's cell, indexed by car, into `buf[0..n_cars]`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must be writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn tkmc_sim_car_cells(sim: *const TkmcSim, buf: *mut usize, len: usize) -> TkmcStatus {
    guard(|| {
        let (Some(h), false) = (unsafe { sim.as_ref() }, buf.is_null()) else {
            return fail(TkmcStatus::NullPointer, "sim or buf is null");
        };
        let cells = h.sim.lattice().car_cells();
        if len < cells.len() {
            return fail(TkmcStatus::BufferTooSmall, format!("need {} elements", cells.len()));
        }
        unsafe { ptr::copy_nonoverlapping(cells.as_ptr(), buf, cells.len()) };
        TkmcStatus::Ok
    })
}

fn limit(l: TkmcLimit) -> Limit {
    match l {
        TkmcLimit::LambdaToZero => Limit::LambdaToZero,
        TkmcLimit::LambdaToInfinity => Limit::LambdaToInfinity,
    }
}

/// Limiting flux in cars/s.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tkmc_flux_limit(
    rho: f64,
    jump: usize,
    omega0: f64,
    lim: TkmcLimit,
    g: TkmcSlowdownKind,
    slowdown_c: f64,
    out: *mut f64,
) -> TkmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TkmcStatus::NullPointer, "out is null");
        }
        let r = slowdown(g, slowdown_c).and_then(|g| analytic::flux_limit(rho, jump, omega0, limit(lim), g));
        match r {
            Ok(v) => {
                unsafe { out.write(v) };
                TkmcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Density of maximal limiting flux. `TKMC_STATUS_UNSUPPORTED` for the
/// Arrhenius slowdown as lambda -> 0.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tkmc_critical_density(
    jump: usize,
    lim: TkmcLimit,
    g: TkmcSlowdownKind,
    slowdown_c: f64,
    out: *mut f64,
) -> TkmcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TkmcStatus::NullPointer, "out is null");
        }
        let r = slowdown(g, slowdown_c).and_then(|g| analytic::critical_density(jump, limit(lim), g));
        match r {
            Ok(v) => {
                unsafe { out.write(v) };
                TkmcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}
