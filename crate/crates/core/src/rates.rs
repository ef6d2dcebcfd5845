//! Per-car look-ahead weights and hop rates.
//!
//! The weight of the car at cell `i` is `w_i = (1/N) sum_j k_{j-i} sigma_j`
//! and its rate is `r_i = (omega0 / J) g(w_i)`. Rates are kept in a
//! [`PrefixIndex`] keyed by car identity so that selecting an event with
//! probability `r_k / R` is a logarithmic search.
//!
//! After car `k` moves from `i_k` to `i_k + J`, only two cells changed, so
//! every other weight shifts by `(k_{i_k + J - i_j} - k_{i_k - i_j}) / N`.
//! [`RateState::update_accelerated`] applies that correction;
//! [`RateState::update_direct`] recomputes the same weights from scratch.

use crate::fenwick::PrefixIndex;
use crate::kernel::KernelLookup;
use crate::lattice::{CarId, LatticeState};
use crate::slowdown::Slowdown;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Base hop frequency in 1/s.
    pub omega0: f64,
    /// Cells advanced per move.
    pub jump: usize,
    pub slowdown: Slowdown,
}

impl RateParams {
    pub fn new(omega0: f64, jump: usize, slowdown: Slowdown) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be positive, got {omega0}"
            )));
        }
        if jump == 0 {
            return Err(Error::InvalidParameter("jump must be at least 1".into()));
        }
        Ok(Self {
            omega0,
            jump,
            slowdown,
        })
    }

    pub fn rate_of(&self, weight: f64) -> Result<f64> {
        if weight < 0.0 || weight.is_nan() {
            return Err(Error::NegativeWeight(weight));
        }
        Ok(self.rate(weight))
    }

    #[inline]
    pub(crate) fn rate(&self, weight: f64) -> f64 {
        self.omega0 / self.jump as f64 * self.slowdown.value(weight)
    }
}

/// Look-ahead weight seen from `cell`, summed over the kernel support.
pub fn weight_direct<K: KernelLookup + ?Sized>(state: &LatticeState, kernel: &K, cell: usize) -> f64 {
    let n = state.n_cells();
    let occ = state.occupancy();
    let mut sum = 0.0;
    for m in 1..=kernel.look_ahead() {
        let j = cell + m;
        let j = if j >= n { j - n } else { j };
        if occ[j] {
            sum += kernel.value(m);
        }
    }
    sum / n as f64
}

#[derive(Debug, Clone)]
pub struct RateState {
    weights: Vec<f64>,
    index: PrefixIndex,
}

impl RateState {
    /// Computes every weight from the configuration.
    pub fn init<K: KernelLookup + ?Sized>(
        state: &LatticeState,
        kernel: &K,
        params: &RateParams,
    ) -> Self {
        let weights: Vec<f64> = state
            .car_cells()
            .iter()
            .map(|&cell| weight_direct(state, kernel, cell))
            .collect();
        let rates: Vec<f64> = weights.iter().map(|&w| params.rate(w)).collect();
        Self {
            weights,
            index: PrefixIndex::from_values(&rates),
        }
    }

    /// Full recomputation; bounds the round-off accumulated by incremental
    /// updates.
    pub fn refresh<K: KernelLookup + ?Sized>(
        &mut self,
        state: &LatticeState,
        kernel: &K,
        params: &RateParams,
    ) {
        *self = Self::init(state, kernel, params);
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        self.index.values()
    }

    /// Total rate `R`.
    pub fn total(&self) -> f64 {
        self.index.total()
    }

    /// Car `k` with `sum_{j<k} r_j / R < xi1 <= sum_{j<=k} r_j / R`.
    pub fn select_event(&self, xi1: f64) -> Result<CarId> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::NoEvents);
        }
        self.index.search(xi1 * total).ok_or(Error::NoEvents)
    }

    /// Incremental update after `moved` jumped from `old_cell`.
    ///
    /// Every other car's weight is corrected by the two kernel terms that
    /// changed; the moved car's weight is recomputed from the configuration.
    pub fn update_accelerated<K: KernelLookup + ?Sized>(
        &mut self,
        state: &LatticeState,
        kernel: &K,
        params: &RateParams,
        moved: CarId,
        old_cell: usize,
    ) {
        let n = state.n_cells();
        let inv_n = 1.0 / n as f64;
        let old = old_cell as isize;
        let new = old + params.jump as isize;
        debug_assert_eq!(new.rem_euclid(n as isize) as usize, state.car_cell(moved));

        let mut touched = Vec::new();
        for car in cars_behind(state, moved, kernel.look_ahead() + params.jump) {
            let cell = state.car_cell(car) as isize;
            let delta = (kernel.at(new - cell) - kernel.at(old - cell)) * inv_n;
            if delta != 0.0 {
                self.weights[car] += delta;
                touched.push(car);
            }
        }
        self.weights[moved] = weight_direct(state, kernel, state.car_cell(moved));
        touched.push(moved);
        self.commit(params, &touched);
    }

    /// Reference update: recomputes from the configuration every weight
    /// that the move can have changed.
    pub fn update_direct<K: KernelLookup + ?Sized>(
        &mut self,
        state: &LatticeState,
        kernel: &K,
        params: &RateParams,
        moved: CarId,
        old_cell: usize,
    ) {
        debug_assert_eq!((old_cell + params.jump) % state.n_cells(), state.car_cell(moved));
        let mut touched: Vec<CarId> =
            cars_behind(state, moved, kernel.look_ahead() + params.jump).collect();
        touched.push(moved);
        for &car in &touched {
            self.weights[car] = weight_direct(state, kernel, state.car_cell(car));
        }
        self.commit(params, &touched);
    }

    fn commit(&mut self, params: &RateParams, touched: &[CarId]) {
        let n_cars = self.weights.len();
        // point updates cost log(Nc) each; past that, a bulk rebuild is cheaper
        let log = (usize::BITS - n_cars.leading_zeros()) as usize;
        if touched.len() * log > n_cars {
            let rates: Vec<f64> = self.weights.iter().map(|&w| params.rate(w)).collect();
            self.index.rebuild(&rates);
        } else {
            for &car in touched {
                self.index.set(car, params.rate(self.weights[car]));
            }
        }
    }
}

/// Cars behind `car` whose distance to it is at most `reach` cells, nearest
/// first. Relies on cars keeping their cyclic order.
pub(crate) fn cars_behind(
    state: &LatticeState,
    car: CarId,
    reach: usize,
) -> impl Iterator<Item = CarId> + '_ {
    let n = state.n_cells();
    let n_cars = state.n_cars();
    let front = state.car_cell(car);
    (1..n_cars)
        .map(move |back| if back <= car { car - back } else { car + n_cars - back })
        .take_while(move |&other| {
            let cell = state.car_cell(other);
            let gap = if cell <= front { front - cell } else { front + n - cell };
            gap <= reach
        })
}
