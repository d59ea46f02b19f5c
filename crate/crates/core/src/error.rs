use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("gamma function has a pole at x = {0}")]
    Pole(f64),

    #[error("result overflows f64 at x = {0}")]
    Overflow(f64),

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("quadrature error estimate {estimate:.3e} exceeds relative tolerance {tolerance:.1e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("first derivative callback is required")]
    MissingDerivative,

    #[error("indeterminate form at t = {0}")]
    IndeterminateForm(f64),

    #[error("cannot build a contracting subinterval starting at t = {0}")]
    NonContraction(f64),

    #[error("fixed-point iteration did not converge within {iterations} iterations (last update {last_update:.3e})")]
    MaxIterations { iterations: usize, last_update: f64 },

    #[error("ODE step produced a non-finite state at t = {0}")]
    StepFailure(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
