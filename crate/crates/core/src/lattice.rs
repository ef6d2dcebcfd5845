//! Periodic cell configuration and the car registry.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Dense car identity, assigned once at construction.
pub type CarId = usize;

const VACANT: u32 = u32::MAX;

/// Cells touched by one executed move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub car: CarId,
    pub old_cell: usize,
    pub new_cell: usize,
}

/// Occupancy of a ring of `n_cells` cells plus a stable car registry.
///
/// Car `k` sits at `car_cells()[k]`. Since a move needs every cell it jumps
/// over to be vacant, cars never overtake and the cyclic order of identities
/// is preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeState {
    occupancy: Vec<bool>,
    car_cells: Vec<usize>,
    cell_to_car: Vec<u32>,
}

impl LatticeState {
    /// Places `n_cars` cars uniformly at random, driven by `seed`.
    pub fn init_random(n_cells: usize, n_cars: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_random_with(n_cells, n_cars, &mut rng)
    }

    /// Fisher-Yates shuffle of all cell indices, keeping the first `n_cars`.
    pub fn init_random_with<R: rand::Rng + ?Sized>(
        n_cells: usize,
        n_cars: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::EmptyLattice);
        }
        if n_cars > n_cells {
            return Err(Error::TooManyCars { n_cars, n_cells });
        }
        let mut cells: Vec<usize> = (0..n_cells).collect();
        cells.shuffle(rng);
        let mut bits = vec![false; n_cells];
        for &c in &cells[..n_cars] {
            bits[c] = true;
        }
        Self::from_occupancy(&bits)
    }

    /// Builds the state from explicit occupancy bits. Car identities are
    /// assigned in increasing cell order starting at cell 0.
    pub fn from_occupancy(bits: &[bool]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::EmptyLattice);
        }
        assert!(bits.len() < VACANT as usize, "lattice too large");
        let mut car_cells = Vec::new();
        let mut cell_to_car = vec![VACANT; bits.len()];
        for (cell, &occupied) in bits.iter().enumerate() {
            if occupied {
                cell_to_car[cell] = car_cells.len() as u32;
                car_cells.push(cell);
            }
        }
        Ok(Self {
            occupancy: bits.to_vec(),
            car_cells,
            cell_to_car,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.occupancy.len()
    }

    pub fn n_cars(&self) -> usize {
        self.car_cells.len()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    #[inline]
    pub fn is_occupied(&self, cell: usize) -> bool {
        self.occupancy[cell]
    }

    /// Cell of each car, indexed by car identity.
    pub fn car_cells(&self) -> &[usize] {
        &self.car_cells
    }

    #[inline]
    pub fn car_cell(&self, car: CarId) -> usize {
        self.car_cells[car]
    }

    #[inline]
    pub fn car_at(&self, cell: usize) -> Option<CarId> {
        match self.cell_to_car[cell] {
            VACANT => None,
            id => Some(id as CarId),
        }
    }

    /// True iff the `jump` cells ahead of `car` are all vacant.
    pub fn span_vacant(&self, car: CarId, jump: usize) -> Result<bool> {
        if car >= self.n_cars() {
            return Err(Error::UnknownCar(car));
        }
        Ok(self.span_vacant_unchecked(car, jump))
    }

    #[inline]
    pub(crate) fn span_vacant_unchecked(&self, car: CarId, jump: usize) -> bool {
        let n = self.n_cells();
        let cell = self.car_cells[car];
        (1..=jump).all(|d| !self.occupancy[(cell + d) % n])
    }

    /// Moves `car` forward by `jump` cells.
    ///
    /// # Panics
    ///
    /// If the target span is not vacant.
    pub fn apply_move(&mut self, car: CarId, jump: usize) -> Move {
        assert!(
            jump >= 1 && self.span_vacant_unchecked(car, jump),
            "illegal move of car {car} by {jump} cells"
        );
        let n = self.n_cells();
        let old_cell = self.car_cells[car];
        let new_cell = (old_cell + jump) % n;
        self.occupancy[old_cell] = false;
        self.occupancy[new_cell] = true;
        self.cell_to_car[old_cell] = VACANT;
        self.cell_to_car[new_cell] = car as u32;
        self.car_cells[car] = new_cell;
        Move {
            car,
            old_cell,
            new_cell,
        }
    }

    /// Checks the registry against the occupancy bits.
    pub fn is_consistent(&self) -> bool {
        let count = self.occupancy.iter().filter(|&&b| b).count();
        count == self.car_cells.len()
            && self
                .car_cells
                .iter()
                .enumerate()
                .all(|(car, &cell)| self.occupancy[cell] && self.cell_to_car[cell] as usize == car)
            && self
                .cell_to_car
                .iter()
                .enumerate()
                .all(|(cell, &id)| (id == VACANT) != self.occupancy[cell])
    }
}
