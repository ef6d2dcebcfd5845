//! Discrete N-periodic look-ahead kernels.
//!
//! `values[m]` is the weight given to a car `m` cells ahead. Offset 0 is the
//! observer itself and is always zero.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Read access to a periodic kernel, as needed by the weight computations.
pub trait KernelLookup {
    fn n_cells(&self) -> usize;

    /// Kernel value at an offset already reduced to `[0, n_cells)`.
    fn value(&self, offset: usize) -> f64;

    /// Kernel value at any integer offset, reduced periodically.
    fn at(&self, offset: isize) -> f64;

    /// Largest offset in `[1, n_cells)` with a nonzero value, 0 if none.
    fn look_ahead(&self) -> usize;
}

/// How a kernel is constructed; also the `--kernel` CLI syntax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `constant:L`
    Constant { look_ahead: usize },
    /// `linear:L`
    Linear { look_ahead: usize },
    /// `exponential:LAMBDA`
    Exponential { lambda: f64 },
}

impl KernelSpec {
    pub fn build(&self, n_cells: usize) -> Result<Kernel> {
        match *self {
            KernelSpec::Constant { look_ahead } => Kernel::constant(n_cells, look_ahead),
            KernelSpec::Linear { look_ahead } => Kernel::linear(n_cells, look_ahead),
            KernelSpec::Exponential { lambda } => Kernel::exponential(n_cells, lambda),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Constant { .. } => "constant",
            KernelSpec::Linear { .. } => "linear",
            KernelSpec::Exponential { .. } => "exponential",
        }
    }

    /// Look-ahead distance or lambda, as a display string.
    pub fn parameter(&self) -> String {
        match self {
            KernelSpec::Constant { look_ahead } | KernelSpec::Linear { look_ahead } => {
                look_ahead.to_string()
            }
            KernelSpec::Exponential { lambda } => lambda.to_string(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name(), self.parameter())
    }
}

impl FromStr for KernelSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| format!("expected KIND:PARAM, got '{s}'"))?;
        let int = || {
            param
                .trim()
                .parse::<usize>()
                .map_err(|e| format!("bad look-ahead '{param}': {e}"))
        };
        match kind.trim() {
            "constant" => Ok(KernelSpec::Constant { look_ahead: int()? }),
            "linear" => Ok(KernelSpec::Linear { look_ahead: int()? }),
            "exponential" => {
                let lambda = param
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad lambda '{param}': {e}"))?;
                Ok(KernelSpec::Exponential { lambda })
            }
            other => Err(format!("unknown kernel '{other}' (constant|linear|exponential)")),
        }
    }
}

/// Dense kernel table of length `n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    values: Vec<f64>,
    bound: f64,
    look_ahead: usize,
}

impl Kernel {
    /// `k_i = 1` for `i = 1..=L`.
    ///
    /// `L` may equal `n_cells`, in which case offset `N` coincides with the
    /// observer's own cell and stays zero.
    pub fn constant(n_cells: usize, look_ahead: usize) -> Result<Self> {
        check_look_ahead(n_cells, look_ahead)?;
        Self::tabulate(n_cells, look_ahead, |_| 1.0)
    }

    /// `k_i = 2 (1 - (i - 1/2) / L)` for `i = 1..=L`.
    pub fn linear(n_cells: usize, look_ahead: usize) -> Result<Self> {
        check_look_ahead(n_cells, look_ahead)?;
        let l = look_ahead as f64;
        Self::tabulate(n_cells, look_ahead, |i| 2.0 * (1.0 - (i as f64 - 0.5) / l))
    }

    /// `k_i = N (e^{lambda/N} - 1) / (1 - e^{-lambda}) * e^{-lambda i / N}`
    /// for `i = 1..=N`, normalized so the mean over a period is one.
    pub fn exponential(n_cells: usize, lambda: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::EmptyLattice);
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        Self::tabulate(n_cells, n_cells, |i| exponential_entry(n_cells, lambda, i))
    }

    /// Kernel from an explicit table; `values[0]` must be zero.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyLattice);
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidKernel(format!(
                "offset 0 must be zero, got {}",
                values[0]
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidKernel(format!(
                "value at offset {i} must be finite and non-negative, got {v}"
            )));
        }
        let bound = values.iter().copied().fold(0.0, f64::max);
        let look_ahead = values.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        Ok(Self {
            values,
            bound,
            look_ahead,
        })
    }

    fn tabulate(n_cells: usize, upto: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; n_cells];
        for i in 1..=upto.min(n_cells - 1) {
            values[i] = f(i);
        }
        Self::from_values(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Upper bound `max_i k_i`.
    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// One entry of the exponential kernel, evaluated without overflow for
/// large `lambda / N`.
pub(crate) fn exponential_entry(n_cells: usize, lambda: f64, i: usize) -> f64 {
    let n = n_cells as f64;
    // N (e^{l/N} - 1) e^{-l i/N} == N (1 - e^{-l/N}) e^{-l (i-1)/N}
    let head = -(-lambda / n).exp_m1();
    n * head * (-lambda * (i as f64 - 1.0) / n).exp() / -(-lambda).exp_m1()
}

fn check_look_ahead(n_cells: usize, look_ahead: usize) -> Result<()> {
    if n_cells < 2 || look_ahead == 0 || look_ahead > n_cells {
        return Err(Error::LookAheadOutOfRange {
            look_ahead,
            n_cells,
        });
    }
    Ok(())
}

impl KernelLookup for Kernel {
    #[inline]
    fn n_cells(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn value(&self, offset: usize) -> f64 {
        self.values[offset]
    }

    #[inline]
    fn at(&self, offset: isize) -> f64 {
        let n = self.values.len() as isize;
        let o = if offset < 0 {
            offset + n
        } else if offset >= n {
            offset - n
        } else {
            offset
        };
        let o = if (0..n).contains(&o) { o } else { offset.rem_euclid(n) };
        self.values[o as usize]
    }

    #[inline]
    fn look_ahead(&self) -> usize {
        self.look_ahead
    }
}
