//! Numerical tools for the Caputo-Katugampola fractional derivative.
//!
//! - [`specfun`]: Gamma, Beta, Mittag-Leffler and the binomial coefficient sequences.
//! - [`operators`]: Katugampola integrals, CK derivatives and their closed forms.
//! - [`decomposition`]: expansion of the CK derivative into `x'` and moment
//!   functions, with truncation error bounds.
//! - [`solver`]: Cauchy problems solved by Picard iteration, by the ODE system
//!   obtained from the decomposition, and by product integration.
//! - [`problems`]: the built-in test problems used by the CLI and test suites.

pub mod decomposition;
pub mod error;
pub mod operators;
pub mod problems;
pub mod quadrature;
pub mod selftest;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use operators::{Func1, Interval, OrderParams, Side};
pub use quadrature::QuadSpec;
