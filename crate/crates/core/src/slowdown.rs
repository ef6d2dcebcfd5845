//! Slowdown factor `g`: maps a look-ahead weight to a factor in `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slowdown {
    /// `e^{-c x}`
    Arrhenius { c: f64 },
    /// `max(1 - x, 0)`
    LinearClamped,
    /// `max(1 - x, 0)^2`
    QuadraticClamped,
}

impl Default for Slowdown {
    fn default() -> Self {
        Slowdown::Arrhenius { c: 1.0 }
    }
}

impl Slowdown {
    pub fn arrhenius(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "arrhenius coefficient must be positive, got {c}"
            )));
        }
        Ok(Slowdown::Arrhenius { c })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeWeight(x));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation for the hot path. Tiny negative weights left by
    /// round-off are treated as zero.
    #[inline]
    pub(crate) fn value(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            Slowdown::Arrhenius { c } => (-c * x).exp(),
            Slowdown::LinearClamped => (1.0 - x).max(0.0),
            Slowdown::QuadraticClamped => {
                let y = (1.0 - x).max(0.0);
                y * y
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Slowdown::Arrhenius { .. } => "arrhenius",
            Slowdown::LinearClamped => "linear",
            Slowdown::QuadraticClamped => "quadratic",
        }
    }
}

impl fmt::Display for Slowdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slowdown::Arrhenius { c } => write!(f, "arrhenius:{c}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Slowdown {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        match s.split_once(':') {
            Some(("arrhenius", c)) => {
                let c = c
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad arrhenius coefficient '{c}': {e}"))?;
                Slowdown::arrhenius(c).map_err(|e| e.to_string())
            }
            None if s == "arrhenius" => Ok(Slowdown::default()),
            None if s == "linear" => Ok(Slowdown::LinearClamped),
            None if s == "quadratic" => Ok(Slowdown::QuadraticClamped),
            _ => Err(format!(
                "unknown slowdown '{s}' (arrhenius:C | linear | quadratic)"
            )),
        }
    }
}
