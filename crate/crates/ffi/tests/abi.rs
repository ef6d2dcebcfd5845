use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use traffic_kmc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tkmc_last_error()) }.to_string_lossy().into_owned()
}

fn config() -> TkmcConfig {
    let mut cfg = std::mem::MaybeUninit::<TkmcConfig>::uninit();
    assert_eq!(unsafe { tkmc_config_default(cfg.as_mut_ptr()) }, TkmcStatus::Ok);
    let mut cfg = unsafe { cfg.assume_init() };
    cfg.n_cells = 100;
    cfg.n_cars = 30;
    cfg.t_final = 50.0;
    cfg.burn_in = 5.0;
    cfg
}

struct Handle(*mut TkmcSim);

impl Handle {
    fn new(cfg: &TkmcConfig) -> Self {
        let mut sim = ptr::null_mut();
        assert_eq!(unsafe { tkmc_sim_new(cfg, &mut sim) }, TkmcStatus::Ok, "{}", last_error());
        assert!(!sim.is_null());
        Handle(sim)
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { tkmc_sim_free(self.0) }
    }
}

fn zero_event() -> TkmcEvent {
    TkmcEvent { time_before: 0.0, dt: 0.0, car: 0, old_cell: 0, new_cell: 0, executed: false }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(tkmc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { tkmc_config_default(ptr::null_mut()) }, TkmcStatus::NullPointer);
    assert!(!last_error().is_empty());
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { tkmc_sim_new(ptr::null(), &mut sim) }, TkmcStatus::NullPointer);
    assert_eq!(unsafe { tkmc_sim_new(&config(), ptr::null_mut()) }, TkmcStatus::NullPointer);
    let mut ev = zero_event();
    assert_eq!(unsafe { tkmc_sim_step(ptr::null_mut(), &mut ev) }, TkmcStatus::NullPointer);
    let mut t = 0.0;
    assert_eq!(unsafe { tkmc_sim_clock(ptr::null(), &mut t) }, TkmcStatus::NullPointer);
    assert_eq!(unsafe { tkmc_sim_n_cells(ptr::null()) }, 0);
    assert_eq!(unsafe { tkmc_sim_n_cars(ptr::null()) }, 0);
    unsafe { tkmc_sim_free(ptr::null_mut()) };
}

#[test]
fn success_clears_last_error() {
    let mut x = 0.0;
    let s = unsafe {
        tkmc_flux_limit(2.0, 1, 4.0, TkmcLimit::LambdaToInfinity, TkmcSlowdownKind::Linear, 0.0, &mut x)
    };
    assert_eq!(s, TkmcStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    let s = unsafe {
        tkmc_flux_limit(0.5, 1, 4.0, TkmcLimit::LambdaToInfinity, TkmcSlowdownKind::Linear, 0.0, &mut x)
    };
    assert_eq!(s, TkmcStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn invalid_configs_are_rejected() {
    let mut sim = ptr::null_mut();
    let mut cfg = config();
    cfg.n_cars = 101;
    assert_eq!(unsafe { tkmc_sim_new(&cfg, &mut sim) }, TkmcStatus::InvalidArgument);
    assert!(sim.is_null());

    let mut cfg = config();
    cfg.kernel = TkmcKernelKind::Linear;
    cfg.kernel_param = 2.5;
    assert_eq!(unsafe { tkmc_sim_new(&cfg, &mut sim) }, TkmcStatus::InvalidArgument);
    assert!(last_error().contains("look-ahead"), "{}", last_error());

    let mut cfg = config();
    cfg.burn_in = cfg.t_final;
    assert_eq!(unsafe { tkmc_sim_new(&cfg, &mut sim) }, TkmcStatus::InvalidArgument);
}

#[test]
fn step_and_run_advance_the_clock() {
    let h = Handle::new(&config());
    let mut ev = zero_event();
    assert_eq!(unsafe { tkmc_sim_step(h.0, &mut ev) }, TkmcStatus::Ok);
    assert!(ev.dt > 0.0);
    if ev.executed {
        assert!(ev.old_cell >= 0 && ev.new_cell >= 0);
        assert_eq!((ev.old_cell + 1) % 100, ev.new_cell);
    } else {
        assert_eq!((ev.old_cell, ev.new_cell), (-1, -1));
    }
    let mut t = 0.0;
    assert_eq!(unsafe { tkmc_sim_clock(h.0, &mut t) }, TkmcStatus::Ok);
    assert!((t - ev.time_before - ev.dt).abs() < 1e-12);

    let mut s = std::mem::MaybeUninit::<TkmcSummary>::uninit();
    assert_eq!(unsafe { tkmc_sim_run(h.0, s.as_mut_ptr()) }, TkmcStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert!(s.final_clock >= 50.0);
    assert!(s.f_bar > 0.0 && !s.frozen);
    assert!((s.measure_time - 45.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_summary() {
    let run = || {
        let h = Handle::new(&config());
        let mut s = std::mem::MaybeUninit::<TkmcSummary>::uninit();
        assert_eq!(unsafe { tkmc_sim_run(h.0, s.as_mut_ptr()) }, TkmcStatus::Ok);
        let s = unsafe { s.assume_init() };
        (s.f_bar.to_bits(), s.executed, s.final_clock.to_bits())
    };
    assert_eq!(run(), run());
}

#[test]
fn buffers_are_checked() {
    let h = Handle::new(&config());
    let mut occ = vec![0u8; 100];
    assert_eq!(unsafe { tkmc_sim_occupancy(h.0, occ.as_mut_ptr(), 99) }, TkmcStatus::BufferTooSmall);
    assert_eq!(unsafe { tkmc_sim_occupancy(h.0, occ.as_mut_ptr(), 100) }, TkmcStatus::Ok);
    assert_eq!(occ.iter().map(|&b| b as usize).sum::<usize>(), 30);

    let mut cells = vec![0usize; 30];
    assert_eq!(unsafe { tkmc_sim_car_cells(h.0, cells.as_mut_ptr(), 29) }, TkmcStatus::BufferTooSmall);
    assert_eq!(unsafe { tkmc_sim_car_cells(h.0, cells.as_mut_ptr(), 30) }, TkmcStatus::Ok);
    for &c in &cells {
        assert_eq!(occ[c], 1);
    }
    assert_eq!(unsafe { tkmc_sim_car_cells(h.0, ptr::null_mut(), 30) }, TkmcStatus::NullPointer);
}

#[test]
fn empty_lattice_is_frozen() {
    let mut cfg = config();
    cfg.n_cars = 0;
    let h = Handle::new(&cfg);
    let mut r = 1.0;
    assert_eq!(unsafe { tkmc_sim_total_rate(h.0, &mut r) }, TkmcStatus::Ok);
    assert_eq!(r, 0.0);
    let mut ev = zero_event();
    assert_eq!(unsafe { tkmc_sim_step(h.0, &mut ev) }, TkmcStatus::Frozen);
    assert_eq!(ev.dt, 0.0);
    let mut s = std::mem::MaybeUninit::<TkmcSummary>::uninit();
    assert_eq!(unsafe { tkmc_sim_run(h.0, s.as_mut_ptr()) }, TkmcStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert!(s.frozen);
    assert_eq!(s.f_bar, 0.0);
}

#[test]
fn full_lattice_only_has_null_events() {
    let mut cfg = config();
    cfg.n_cars = 100;
    cfg.kernel = TkmcKernelKind::Constant;
    cfg.kernel_param = 5.0;
    cfg.slowdown = TkmcSlowdownKind::Linear;
    let h = Handle::new(&cfg);
    let mut r = 0.0;
    assert_eq!(unsafe { tkmc_sim_total_rate(h.0, &mut r) }, TkmcStatus::Ok);
    assert!((r - 100.0 * 4.0 * 0.95).abs() < 1e-9, "{r}");
    let mut ev = zero_event();
    assert_eq!(unsafe { tkmc_sim_step(h.0, &mut ev) }, TkmcStatus::Ok);
    assert!(!ev.executed);
    assert_eq!((ev.old_cell, ev.new_cell), (-1, -1));
    let mut s = std::mem::MaybeUninit::<TkmcSummary>::uninit();
    assert_eq!(unsafe { tkmc_sim_run(h.0, s.as_mut_ptr()) }, TkmcStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert_eq!((s.executed, s.f_bar), (0, 0.0));
    assert!(s.null_events > 0 && !s.frozen);
}

#[test]
fn engines_agree_on_first_steps() {
    let mut cfg = config();
    let mut trace = |engine| {
        cfg.engine = engine;
        let h = Handle::new(&cfg);
        (0..200)
            .map(|_| {
                let mut ev = zero_event();
                assert_eq!(unsafe { tkmc_sim_step(h.0, &mut ev) }, TkmcStatus::Ok);
                (ev.car, ev.new_cell)
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(trace(TkmcEngine::Standard), trace(TkmcEngine::Accelerated));
}

#[test]
fn analytic_limits() {
    let mut f = 0.0;
    let s = unsafe {
        tkmc_flux_limit(0.5, 2, 4.0, TkmcLimit::LambdaToInfinity, TkmcSlowdownKind::Linear, 0.0, &mut f)
    };
    assert_eq!(s, TkmcStatus::Ok);
    assert!((f - 0.5).abs() < 1e-15);

    let mut rc = 0.0;
    let s = unsafe {
        tkmc_critical_density(1, TkmcLimit::LambdaToZero, TkmcSlowdownKind::Quadratic, 0.0, &mut rc)
    };
    assert_eq!(s, TkmcStatus::Ok);
    assert!((rc - 0.25).abs() < 1e-15);

    let s = unsafe {
        tkmc_critical_density(1, TkmcLimit::LambdaToZero, TkmcSlowdownKind::Arrhenius, 1.0, &mut rc)
    };
    assert_eq!(s, TkmcStatus::Unsupported);
    assert!(!last_error().is_empty());
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|deps| deps.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let lib = target_dir().join("libtraffic_kmc_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "smoke exited with {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with("version="), "{stdout}");
}
