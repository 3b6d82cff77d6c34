//! Error type shared by all modules of the crate.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Everything that can go wrong while regularizing, stepping, or verifying.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on caller-supplied data was violated. The message names
    /// the violated condition in mathematical terms.
    InvalidInput(String),
    /// `‖v₀‖_∞` does not satisfy the strict smallness condition
    /// `0 < ‖v₀‖_∞ < 2/(3nχ)`.
    SmallnessViolated { vmax: f64, threshold: f64 },
    /// The implicit-diffusion solve left a residual above its tolerance.
    SolverFailure { residual: f64, tolerance: f64 },
    /// A fixed time step exceeded the positivity-preserving CFL bound.
    CflViolation { dt: f64, cfl: f64 },
    /// A runtime invariant of the scheme failed (mass, positivity, or the
    /// maximum principle), reported with the offending quantity.
    InvariantViolated { what: String, value: f64 },
    /// An error raised while advancing the solution, tagged with the
    /// simulation time at which it occurred.
    AtTime { t: f64, source: Box<Error> },
}

impl Error {
    /// Wraps an error with the simulation time at which it occurred.
    pub fn at_time(self, t: f64) -> Error {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SmallnessViolated { vmax, threshold } => write!(
                f,
                "smallness condition violated: ‖v0‖∞ = {vmax} is not strictly below 2/(3nχ) = {threshold}"
            ),
            Error::SolverFailure {
                residual,
                tolerance,
            } => write!(
                f,
                "implicit diffusion solve failed: residual {residual:e} exceeds tolerance {tolerance:e}"
            ),
            Error::CflViolation { dt, cfl } => write!(
                f,
                "time step {dt:e} exceeds the positivity-preserving CFL bound {cfl:e}"
            ),
            Error::InvariantViolated { what, value } => {
                write!(f, "scheme invariant violated: {what} (value {value:e})")
            }
            Error::AtTime { t, source } => write!(f, "at t = {t}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtTime { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
