//! Rejection-free kinetic Monte Carlo for one-dimensional cellular-automata
//! traffic with nonlocal look-ahead interactions.
//!
//! Cars live on a periodic ring of `N` cells and advance `J` cells at a time
//! when the `J` cells ahead are vacant. Each car hops with rate
//! `(omega0 / J) * g(w)`, where the weight `w` sums the occupancy ahead of
//! the car through a look-ahead [`Kernel`] and `g` is a [`Slowdown`].
//!
//! Three interchangeable engines are provided (see [`EngineKind`]):
//!
//! - `standard`: after each move, every weight that may have changed is
//!   recomputed from the configuration.
//! - `accelerated`: weights are updated from their previous values with a
//!   two-term kernel correction, so a step costs `O(Nc + L)`.
//! - `list_based`: constant kernels only; cars are grouped by their (few)
//!   distinct rates and selection searches over groups.

pub mod analytic;
pub mod bench;
pub mod cli;
pub mod engine;
mod error;
pub mod fenwick;
pub mod kernel;
pub mod lattice;
pub mod rates;
pub mod slowdown;
pub mod stats;
pub mod validate;

pub use engine::{DtConvention, EngineKind, EventRecord, ListTable, SimConfig, Simulation, StepOutcome, Uniforms};
pub use error::{Error, Result};
pub use kernel::{Kernel, KernelLookup, KernelSpec};
pub use lattice::{CarId, LatticeState, Move};
pub use rates::{RateParams, RateState};
pub use slowdown::Slowdown;
pub use stats::{DiagramRow, MeasureAccumulator, SimSummary};
