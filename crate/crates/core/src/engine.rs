//! The rejection-free simulation loop.
//!
//! Each step draws `xi1` and selects a car with probability `r_k / R`. If
//! the `J` cells ahead of it are vacant the car moves and the rates are
//! updated; otherwise the step is a null event. Either way the clock
//! advances by `-ln(xi2) / R`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fenwick::PrefixIndex;
use crate::kernel::{Kernel, KernelLookup, KernelSpec};
use crate::lattice::{CarId, LatticeState};
use crate::rates::{cars_behind, RateParams, RateState};
use crate::slowdown::Slowdown;
use crate::stats::{MeasureAccumulator, SimSummary};
use crate::{Error, Result};

/// Default base hop frequency, 1 / (0.25 s).
pub const DEFAULT_OMEGA0: f64 = 4.0;

/// Default number of executed events between full weight refreshes.
pub const DEFAULT_REFRESH_EVERY: u64 = 10_000;

/// Runs stop once `R` falls below this multiple of `omega0`.
pub const FROZEN_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Standard,
    Accelerated,
    ListBased,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Standard => "standard",
            EngineKind::Accelerated => "accelerated",
            EngineKind::ListBased => "list",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "standard" => Ok(EngineKind::Standard),
            "accelerated" => Ok(EngineKind::Accelerated),
            "list" | "list_based" => Ok(EngineKind::ListBased),
            other => Err(format!("unknown engine '{other}' (standard|accelerated|list)")),
        }
    }
}

/// Which total rate sets the waiting time of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DtConvention {
    /// `R` as it was when the event was selected.
    PreUpdate,
    /// `R` after the move's rate update.
    #[default]
    PostUpdate,
}

impl fmt::Display for DtConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DtConvention::PreUpdate => "pre",
            DtConvention::PostUpdate => "post",
        })
    }
}

impl FromStr for DtConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "pre" => Ok(DtConvention::PreUpdate),
            "post" => Ok(DtConvention::PostUpdate),
            other => Err(format!("unknown dt convention '{other}' (pre|post)")),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_cells: usize,
    pub n_cars: usize,
    pub jump: usize,
    /// 1/s
    pub omega0: f64,
    pub kernel: KernelSpec,
    pub slowdown: Slowdown,
    /// s
    pub t_final: f64,
    /// s
    pub burn_in: f64,
    pub seed: u64,
    pub engine: EngineKind,
    /// Executed events between full refreshes; 0 disables refreshing.
    pub refresh_every: u64,
    pub detector: usize,
    pub dt_convention: DtConvention,
}

impl SimConfig {
    /// Defaults: `J = 1`, `omega0 = 4`, one hour with 10% burn-in,
    /// accelerated engine.
    pub fn new(n_cells: usize, n_cars: usize, kernel: KernelSpec, slowdown: Slowdown) -> Self {
        Self {
            n_cells,
            n_cars,
            jump: 1,
            omega0: DEFAULT_OMEGA0,
            kernel,
            slowdown,
            t_final: 3600.0,
            burn_in: 360.0,
            seed: 0,
            engine: EngineKind::Accelerated,
            refresh_every: DEFAULT_REFRESH_EVERY,
            detector: 0,
            dt_convention: DtConvention::PostUpdate,
        }
    }

    /// Sets the horizon with the default 10% burn-in.
    pub fn with_horizon(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self.burn_in = 0.1 * t_final;
        self
    }

    /// `round(rho * N)` cars.
    pub fn cars_for_density(n_cells: usize, rho: f64) -> usize {
        (rho * n_cells as f64).round().clamp(0.0, n_cells as f64) as usize
    }

    pub fn density(&self) -> f64 {
        self.n_cars as f64 / self.n_cells as f64
    }

    /// Structural checks needed to build an engine.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_cells < 2 {
            return bad(format!("need at least 2 cells, got {}", self.n_cells));
        }
        if self.n_cars > self.n_cells {
            return Err(Error::TooManyCars {
                n_cars: self.n_cars,
                n_cells: self.n_cells,
            });
        }
        if self.jump == 0 || self.jump >= self.n_cells {
            return bad(format!(
                "jump must be in [1, {}), got {}",
                self.n_cells, self.jump
            ));
        }
        if self.detector >= self.n_cells {
            return bad(format!("detector cell {} outside lattice", self.detector));
        }
        if !(self.burn_in >= 0.0) || !(self.t_final >= 0.0) {
            return bad("times must be non-negative".into());
        }
        if self.engine == EngineKind::ListBased
            && !matches!(self.kernel, KernelSpec::Constant { .. })
        {
            return bad("the list engine requires a constant kernel".into());
        }
        RateParams::new(self.omega0, self.jump, self.slowdown)?;
        self.kernel.build(self.n_cells)?;
        Ok(())
    }

    /// Measurement window must be nonempty.
    pub fn validate_horizon(&self) -> Result<()> {
        if !(self.t_final > self.burn_in) {
            return Err(Error::InvalidParameter(format!(
                "t_final ({}) must exceed burn_in ({})",
                self.t_final, self.burn_in
            )));
        }
        Ok(())
    }
}

/// One step of the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    /// Clock before the step, s.
    pub time_before: f64,
    /// Waiting time, s. Infinite if the move left the system frozen.
    pub dt: f64,
    pub car: CarId,
    pub old_cell: Option<usize>,
    pub new_cell: Option<usize>,
    /// False for a null event: the selected car was blocked.
    pub executed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Event(EventRecord),
    /// `R` is zero: nothing can ever happen again.
    Frozen,
}

/// The uniforms consumed by one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniforms {
    /// Event selection, `[0, 1)`.
    pub xi1: f64,
    /// Member choice within a list (list engine only), `[0, 1)`.
    pub pick: f64,
    /// Waiting time, `(0, 1)`.
    pub xi2: f64,
}

/// Cars grouped by their look-ahead count under a constant kernel.
///
/// With `k_i = 1` on `1..=L` a car's weight is `c / N` where `c` counts the
/// occupied cells among the `L` ahead, so there are only `L + 1` distinct
/// rates. Selection first picks a list with probability `n_c r_c / R`, then
/// a member uniformly.
#[derive(Debug, Clone)]
pub struct ListTable {
    window: usize,
    n_cells: usize,
    counts: Vec<u32>,
    lists: Vec<Vec<CarId>>,
    slot: Vec<usize>,
    list_rates: Vec<f64>,
    index: PrefixIndex,
}

impl ListTable {
    pub fn new(state: &LatticeState, window: usize, params: &RateParams) -> Self {
        let n = state.n_cells();
        let list_rates: Vec<f64> = (0..=window)
            .map(|c| params.rate(c as f64 / n as f64))
            .collect();
        let mut table = Self {
            window,
            n_cells: n,
            counts: vec![0; state.n_cars()],
            lists: vec![Vec::new(); window + 1],
            slot: vec![0; state.n_cars()],
            list_rates,
            index: PrefixIndex::default(),
        };
        table.refresh(state);
        table
    }

    /// Recounts every car and rebuilds the list index.
    pub fn refresh(&mut self, state: &LatticeState) {
        for list in &mut self.lists {
            list.clear();
        }
        for car in 0..state.n_cars() {
            let c = self.count_ahead(state, car);
            self.counts[car] = c;
            self.slot[car] = self.lists[c as usize].len();
            self.lists[c as usize].push(car);
        }
        let totals: Vec<f64> = self
            .lists
            .iter()
            .zip(&self.list_rates)
            .map(|(l, r)| l.len() as f64 * r)
            .collect();
        self.index.rebuild(&totals);
    }

    fn count_ahead(&self, state: &LatticeState, car: CarId) -> u32 {
        let cell = state.car_cell(car);
        (1..=self.window)
            .filter(|d| state.is_occupied((cell + d) % self.n_cells))
            .count() as u32
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.lists.iter().map(Vec::len).collect()
    }

    pub fn list_rates(&self) -> &[f64] {
        &self.list_rates
    }

    pub fn lists(&self) -> &[Vec<CarId>] {
        &self.lists
    }

    pub fn count(&self, car: CarId) -> u32 {
        self.counts[car]
    }

    pub fn weight(&self, car: CarId) -> f64 {
        self.counts[car] as f64 / self.n_cells as f64
    }

    pub fn rate(&self, car: CarId) -> f64 {
        self.list_rates[self.counts[car] as usize]
    }

    pub fn total(&self) -> f64 {
        self.index.total()
    }

    /// List `l` with `sum_{j<l} n_j r_j / R < xi1 <= sum_{j<=l} n_j r_j / R`,
    /// then member `floor(pick * n_l)` of it.
    pub fn select_event(&self, xi1: f64, pick: f64) -> Result<CarId> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::NoEvents);
        }
        let l = self.index.search(xi1 * total).ok_or(Error::NoEvents)?;
        let members = &self.lists[l];
        let i = ((pick * members.len() as f64) as usize).min(members.len() - 1);
        Ok(members[i])
    }

    /// Adjusts counts after `moved` jumped from `old_cell`.
    pub fn update(&mut self, state: &LatticeState, jump: usize, moved: CarId, old_cell: usize) {
        let (n, window) = (self.n_cells, self.window);
        let new_cell = state.car_cell(moved);
        let in_window = |from: usize, to: usize| {
            let d = (to + n - from) % n;
            d >= 1 && d <= window
        };
        let behind: Vec<CarId> = cars_behind(state, moved, self.window + jump).collect();
        for car in behind {
            let cell = state.car_cell(car);
            let c = self.counts[car] as i64 + in_window(cell, new_cell) as i64
                - in_window(cell, old_cell) as i64;
            self.relist(car, c as u32);
        }
        let c = self.count_ahead(state, moved);
        self.relist(moved, c);
    }

    fn relist(&mut self, car: CarId, count: u32) {
        let from = self.counts[car] as usize;
        let to = count as usize;
        if from == to {
            return;
        }
        let pos = self.slot[car];
        self.lists[from].swap_remove(pos);
        if let Some(&shifted) = self.lists[from].get(pos) {
            self.slot[shifted] = pos;
        }
        self.slot[car] = self.lists[to].len();
        self.lists[to].push(car);
        self.counts[car] = count;
        for l in [from, to] {
            self.index
                .set(l, self.lists[l].len() as f64 * self.list_rates[l]);
        }
    }
}

#[derive(Debug, Clone)]
enum Book {
    Standard(RateState),
    Accelerated(RateState),
    List(ListTable),
}

/// One simulation run: lattice, rate bookkeeping, clock and generator.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    lattice: LatticeState,
    kernel: Kernel,
    params: RateParams,
    book: Book,
    rng: ChaCha8Rng,
    clock: f64,
    frozen: bool,
    executed: u64,
    null_events: u64,
    since_refresh: u64,
}

impl Simulation {
    /// Seeds the generator, places cars at random, initializes rates.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let lattice = LatticeState::init_random_with(config.n_cells, config.n_cars, &mut rng)?;
        Self::assemble(config, lattice, rng)
    }

    /// Starts from a given configuration; `config.n_cells` and
    /// `config.n_cars` are taken from it.
    pub fn with_lattice(mut config: SimConfig, lattice: LatticeState) -> Result<Self> {
        config.n_cells = lattice.n_cells();
        config.n_cars = lattice.n_cars();
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::assemble(config, lattice, rng)
    }

    fn assemble(config: SimConfig, lattice: LatticeState, rng: ChaCha8Rng) -> Result<Self> {
        let kernel = config.kernel.build(config.n_cells)?;
        let params = RateParams::new(config.omega0, config.jump, config.slowdown)?;
        let book = match config.engine {
            EngineKind::Standard => Book::Standard(RateState::init(&lattice, &kernel, &params)),
            EngineKind::Accelerated => {
                Book::Accelerated(RateState::init(&lattice, &kernel, &params))
            }
            EngineKind::ListBased => {
                Book::List(ListTable::new(&lattice, kernel.look_ahead(), &params))
            }
        };
        Ok(Self {
            config,
            lattice,
            kernel,
            params,
            book,
            rng,
            clock: 0.0,
            frozen: false,
            executed: 0,
            null_events: 0,
            since_refresh: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn lattice(&self) -> &LatticeState {
        &self.lattice
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn params(&self) -> &RateParams {
        &self.params
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn executed_events(&self) -> u64 {
        self.executed
    }

    pub fn null_events(&self) -> u64 {
        self.null_events
    }

    pub fn total_rate(&self) -> f64 {
        match &self.book {
            Book::Standard(rs) | Book::Accelerated(rs) => rs.total(),
            Book::List(t) => t.total(),
        }
    }

    /// Current weight of every car.
    pub fn weights(&self) -> Vec<f64> {
        match &self.book {
            Book::Standard(rs) | Book::Accelerated(rs) => rs.weights().to_vec(),
            Book::List(t) => (0..self.lattice.n_cars()).map(|c| t.weight(c)).collect(),
        }
    }

    /// Current rate of every car, 1/s.
    pub fn rates(&self) -> Vec<f64> {
        match &self.book {
            Book::Standard(rs) | Book::Accelerated(rs) => rs.rates().to_vec(),
            Book::List(t) => (0..self.lattice.n_cars()).map(|c| t.rate(c)).collect(),
        }
    }

    pub fn rate_state(&self) -> Option<&RateState> {
        match &self.book {
            Book::Standard(rs) | Book::Accelerated(rs) => Some(rs),
            Book::List(_) => None,
        }
    }

    pub fn list_table(&self) -> Option<&ListTable> {
        match &self.book {
            Book::List(t) => Some(t),
            _ => None,
        }
    }

    /// Draws `xi1`, then `pick` (list engine only), then `xi2`; a raw zero
    /// for `xi2` is redrawn.
    pub fn draw_uniforms(&mut self) -> Uniforms {
        let xi1 = self.rng.random::<f64>();
        let pick = match self.book {
            Book::List(_) => self.rng.random::<f64>(),
            _ => 0.0,
        };
        let xi2 = loop {
            let x = self.rng.random::<f64>();
            if x > 0.0 {
                break x;
            }
        };
        Uniforms { xi1, pick, xi2 }
    }

    /// Selects a car among the current rates without advancing anything.
    pub fn select(&self, xi1: f64, pick: f64) -> Result<CarId> {
        match &self.book {
            Book::Standard(rs) | Book::Accelerated(rs) => rs.select_event(xi1),
            Book::List(t) => t.select_event(xi1, pick),
        }
    }

    pub fn step(&mut self) -> StepOutcome {
        if self.frozen {
            return StepOutcome::Frozen;
        }
        let u = self.draw_uniforms();
        self.step_with(u)
    }

    /// One step driven by explicit uniforms.
    pub fn step_with(&mut self, u: Uniforms) -> StepOutcome {
        let threshold = FROZEN_THRESHOLD * self.params.omega0;
        let total_before = self.total_rate();
        if self.frozen || total_before < threshold {
            self.frozen = true;
            return StepOutcome::Frozen;
        }
        let car = match self.select(u.xi1, u.pick) {
            Ok(car) => car,
            Err(_) => {
                self.frozen = true;
                return StepOutcome::Frozen;
            }
        };
        let jump = self.params.jump;
        let time_before = self.clock;
        let (old_cell, new_cell, executed) = if self.lattice.span_vacant_unchecked(car, jump) {
            let m = self.lattice.apply_move(car, jump);
            self.update_rates(car, m.old_cell);
            self.executed += 1;
            (Some(m.old_cell), Some(m.new_cell), true)
        } else {
            self.null_events += 1;
            (None, None, false)
        };
        let total = match self.config.dt_convention {
            DtConvention::PreUpdate => total_before,
            DtConvention::PostUpdate => self.total_rate(),
        };
        let dt = if total < threshold {
            self.frozen = true;
            f64::INFINITY
        } else {
            -u.xi2.ln() / total
        };
        self.clock += dt;
        StepOutcome::Event(EventRecord {
            time_before,
            dt,
            car,
            old_cell,
            new_cell,
            executed,
        })
    }

    fn update_rates(&mut self, car: CarId, old_cell: usize) {
        self.since_refresh += 1;
        let refresh =
            self.config.refresh_every > 0 && self.since_refresh >= self.config.refresh_every;
        if refresh {
            self.since_refresh = 0;
        }
        let (lattice, kernel, params) = (&self.lattice, &self.kernel, &self.params);
        match &mut self.book {
            Book::Standard(rs) => {
                rs.update_direct(lattice, kernel, params, car, old_cell);
                if refresh {
                    rs.refresh(lattice, kernel, params);
                }
            }
            Book::Accelerated(rs) => {
                if refresh {
                    rs.refresh(lattice, kernel, params);
                } else {
                    rs.update_accelerated(lattice, kernel, params, car, old_cell);
                }
            }
            Book::List(t) => {
                t.update(lattice, params.jump, car, old_cell);
                if refresh {
                    t.refresh(lattice);
                }
            }
        }
    }

    /// Steps until the clock reaches `t_final` or the system freezes.
    /// Events selected at or after `burn_in` are measured.
    pub fn run(&mut self) -> SimSummary {
        self.run_observed(|_| {})
    }

    /// [`Simulation::run`], handing every event to `observe`.
    pub fn run_observed(&mut self, mut observe: impl FnMut(&EventRecord)) -> SimSummary {
        let start = Instant::now();
        let (t_final, burn_in) = (self.config.t_final, self.config.burn_in);
        let mut acc = MeasureAccumulator::default();
        while self.clock < t_final {
            match self.step() {
                StepOutcome::Frozen => break,
                StepOutcome::Event(rec) => {
                    if rec.time_before >= burn_in {
                        acc.record(&rec, self.params.jump, self.config.detector, self.config.n_cells);
                    }
                    observe(&rec);
                }
            }
        }
        acc.measure_time = (t_final - burn_in).max(0.0);
        SimSummary::new(&acc, self, start.elapsed().as_secs_f64())
    }

    /// Steps until `budget` moves have executed or the system freezes.
    /// Returns the wall time spent stepping, in seconds.
    pub fn run_executed(&mut self, budget: u64) -> f64 {
        let start = Instant::now();
        let target = self.executed + budget;
        while self.executed < target {
            if let StepOutcome::Frozen = self.step() {
                break;
            }
        }
        start.elapsed().as_secs_f64()
    }
}
