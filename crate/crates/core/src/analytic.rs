//! Closed-form fluxes and critical densities in the two extreme kernel
//! limits. Used as test oracles only.

use std::fmt;
use std::str::FromStr;

use crate::slowdown::Slowdown;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Limit {
    /// Kernel spread over the whole ring: `w` tends to the mean density.
    LambdaToZero,
    /// Kernel concentrated on the next cell: no slowdown.
    LambdaToInfinity,
}

impl Limit {
    pub fn name(&self) -> &'static str {
        match self {
            Limit::LambdaToZero => "lambda_to_zero",
            Limit::LambdaToInfinity => "lambda_to_infinity",
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Limit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lambda_to_zero" | "zero" | "0" => Ok(Limit::LambdaToZero),
            "lambda_to_infinity" | "infinity" | "inf" => Ok(Limit::LambdaToInfinity),
            other => Err(Error::InvalidParameter(format!("unknown limit `{other}`"))),
        }
    }
}

fn check(rho: f64, jump: usize, omega0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("density {rho} outside [0, 1]")));
    }
    if jump == 0 {
        return Err(Error::InvalidParameter("jump must be at least 1".into()));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!("omega0 must be positive, got {omega0}")));
    }
    Ok(())
}

/// Ensemble-averaged velocity in cells/s.
///
/// `lambda -> inf`: `omega0 (1 - rho)^J` for every `g`.
/// `lambda -> 0`: `omega0 (1 - rho)^J g(rho)`.
pub fn velocity_limit(rho: f64, jump: usize, omega0: f64, limit: Limit, g: Slowdown) -> Result<f64> {
    check(rho, jump, omega0)?;
    let free = (1.0 - rho).powi(jump as i32);
    let v = match limit {
        Limit::LambdaToInfinity => omega0 * free,
        Limit::LambdaToZero => omega0 * free * g.value(rho),
    };
    Ok(v)
}

/// Flux in cars/s, `rho * velocity_limit`.
pub fn flux_limit(rho: f64, jump: usize, omega0: f64, limit: Limit, g: Slowdown) -> Result<f64> {
    Ok(rho * velocity_limit(rho, jump, omega0, limit, g)?)
}

/// Density maximizing [`flux_limit`].
pub fn critical_density(jump: usize, limit: Limit, g: Slowdown) -> Result<f64> {
    if jump == 0 {
        return Err(Error::InvalidParameter("jump must be at least 1".into()));
    }
    let j = jump as f64;
    match (limit, g) {
        (Limit::LambdaToInfinity, _) => Ok(1.0 / (j + 1.0)),
        (Limit::LambdaToZero, Slowdown::LinearClamped) => Ok(1.0 / (j + 2.0)),
        (Limit::LambdaToZero, Slowdown::QuadraticClamped) => Ok(1.0 / (j + 3.0)),
        (Limit::LambdaToZero, g) => Err(Error::UnsupportedLimit(format!(
            "no closed-form critical density for g = {g}"
        ))),
    }
}
