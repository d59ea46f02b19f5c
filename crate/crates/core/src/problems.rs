//! Built-in test problems with known solutions.
//!
//! - `example1`: `x(t) = (t^rho - 1)^2` on `[1, 2]`, whose CK derivative is
//!   `2 rho^alpha / Gamma(3 - alpha) (t^rho - 1)^(2 - alpha)`.
//! - `example2`: the Cauchy problem on `[1, 2]` with `x(1) = 0` built so that
//!   `(t^rho - 1)^2` is its solution.
//! - `example3`: `D x = rho^alpha x` on `[0, 1]` with `x(0) = 1`, solved by
//!   `E_alpha(t^(rho alpha))`.

use std::sync::Arc;

use crate::error::Result;
use crate::operators::{Func1, Interval, OrderParams};
use crate::solver::CauchyProblem;
use crate::specfun;

pub fn example1_interval() -> Interval {
    Interval { a: 1.0, b: 2.0 }
}

pub fn example2_interval() -> Interval {
    Interval { a: 1.0, b: 2.0 }
}

pub fn example3_interval() -> Interval {
    Interval { a: 0.0, b: 1.0 }
}

/// `(t^rho - 1)^2` with its first two derivatives.
pub fn example1_function(p: &OrderParams) -> Func1 {
    let rho = p.rho;
    Func1::new(move |t: f64| (t.powf(rho) - 1.0).powi(2))
        .with_deriv1(move |t: f64| 2.0 * rho * (t.powf(rho) - 1.0) * t.powf(rho - 1.0))
        .with_deriv2(move |t: f64| {
            2.0 * rho * rho * t.powf(2.0 * rho - 2.0)
                + 2.0 * rho * (rho - 1.0) * (t.powf(rho) - 1.0) * t.powf(rho - 2.0)
        })
}

/// Exact CK derivative of [`example1_function`] (base point 1).
pub fn example1_derivative(p: &OrderParams, t: f64) -> f64 {
    let g = specfun::gamma(3.0 - p.alpha).expect("3 - alpha is positive");
    2.0 * p.rho.powf(p.alpha) / g * (t.powf(p.rho) - 1.0).max(0.0).powf(2.0 - p.alpha)
}

/// Exact Katugampola integral of [`example1_function`] (base point 1).
pub fn example1_integral(p: &OrderParams, t: f64) -> f64 {
    let g = specfun::gamma(3.0 + p.alpha).expect("3 + alpha is positive");
    2.0 * p.rho.powf(-p.alpha) / g * (t.powf(p.rho) - 1.0).max(0.0).powf(2.0 + p.alpha)
}

/// Cauchy problem whose solution is `(t^rho - 1)^2`; Lipschitz constant 1.
pub fn example2_problem(p: &OrderParams) -> Result<CauchyProblem> {
    let (alpha, rho) = (p.alpha, p.rho);
    let coef = 2.0 * rho.powf(alpha) / specfun::gamma(3.0 - alpha)?;
    let f = move |t: f64, x: f64| {
        let s = (t.powf(rho) - 1.0).max(0.0);
        x + coef * s.powf(2.0 - alpha) - s * s
    };
    CauchyProblem::new(Arc::new(f), *p, example2_interval(), 0.0, 1.0)
}

pub fn example2_exact(p: &OrderParams, t: f64) -> f64 {
    (t.powf(p.rho) - 1.0).powi(2)
}

/// `D x = rho^alpha x`, `x(0) = 1` on `[0, 1]`; Lipschitz constant `rho^alpha`.
pub fn example3_problem(p: &OrderParams) -> Result<CauchyProblem> {
    let lam = p.rho.powf(p.alpha);
    CauchyProblem::new(Arc::new(move |_t: f64, x: f64| lam * x), *p, example3_interval(), 1.0, lam)
}

/// `E_alpha(t^(rho alpha))`.
pub fn example3_exact(p: &OrderParams, t: f64) -> Result<f64> {
    specfun::ml(p.alpha, 1.0, t.powf(p.rho * p.alpha))
}

/// `E_alpha(t^(rho alpha))` with its first derivative
/// `rho alpha t^(rho alpha - 1) E'_alpha`, the latter from the series
/// `E'_alpha(z) = E_{alpha,alpha}(z) / alpha`.
pub fn example3_function(p: &OrderParams) -> Func1 {
    let (alpha, rho) = (p.alpha, p.rho);
    Func1::new(move |t: f64| specfun::ml(alpha, 1.0, t.powf(rho * alpha)).unwrap_or(f64::NAN)).with_deriv1(
        move |t: f64| {
            if t == 0.0 {
                return if rho * alpha > 1.0 { 0.0 } else { f64::INFINITY };
            }
            let z = t.powf(rho * alpha);
            let e = specfun::ml(alpha, alpha, z).unwrap_or(f64::NAN);
            rho * t.powf(rho * alpha - 1.0) * e
        },
    )
}

/// Katugampola integral of the exact solution: `(x(t) - 1) / rho^alpha`.
pub fn example3_integral(p: &OrderParams, t: f64) -> Result<f64> {
    Ok((example3_exact(p, t)? - 1.0) / p.rho.powf(p.alpha))
}
