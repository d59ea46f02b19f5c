//! Special functions used throughout the crate.
//!
//! Gamma and Beta functions, the two-parameter Mittag-Leffler function and the
//! Gamma-ratio coefficient sequences that drive the series decomposition of the
//! Caputo-Katugampola derivative.
//!
//! The coefficient sequences are the Taylor coefficients of `(1 - u)^(1 - alpha)`
//! (derivative mode) and `(1 - u)^alpha` (solution mode). Both are generated by
//! their three-term ratio recurrence so that no Gamma function is ever evaluated at
//! the negative arguments `alpha - 1` and `-alpha`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest argument for which `gamma` is representable as an `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Controls truncation of the power series evaluated in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::Domain(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
        }
        if max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-14, max_terms: 500 }
    }
}

/// Which binomial expansion a coefficient sequence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoeffMode {
    /// Coefficients of `(1 - u)^(1 - alpha)`: `Gamma(k - 1 + alpha) / (Gamma(alpha - 1) k!)`.
    Derivative,
    /// Coefficients of `(1 - u)^alpha`: `Gamma(k - alpha) / (Gamma(-alpha) k!)`.
    Solution,
}

/// Coefficients `c_0..=c_N` of a truncated binomial series.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq {
    pub alpha: f64,
    pub mode: CoeffMode,
    pub c: Vec<f64>,
}

impl CoeffSeq {
    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// `sum_{k=0}^{N} c_k`.
    pub fn partial_sum(&self) -> f64 {
        self.c.iter().sum()
    }
}

/// `sin(pi x)` with exact argument reduction, so that integer `x` gives exactly zero.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

fn check_gamma_arg(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma argument must be finite, got {x}")));
    }
    if x <= 0.0 && x == x.round() {
        return Err(Error::Pole(x));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::Overflow(x));
    }
    Ok(())
}

/// Above this argument the Stirling series replaces the Lanczos sum, whose
/// leading coefficient limits it to about 1e-13 relative accuracy for large x.
const STIRLING_MIN: f64 = 20.0;

/// `ln Gamma(x) - ((x - 1/2) ln x - x + ln sqrt(2 pi))` for `x >= STIRLING_MIN`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

// Gamma(x) for x >= 0.5.
fn gamma_positive(x: f64) -> f64 {
    if x >= STIRLING_MIN {
        // x^(x - 1/2) is split in two halves so that it stays finite up to GAMMA_MAX_ARG.
        let half = x.powf(0.5 * (x - 0.5));
        return (2.0 * PI).sqrt() * half * ((-x).exp() * half) * stirling_correction(x).exp();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * acc
}

/// The Gamma function for real arguments.
///
/// Uses a Lanczos approximation on `[1/2, 20)`, the Stirling series above and
/// the reflection formula below `1/2`.
pub fn gamma(x: f64) -> Result<f64> {
    check_gamma_arg(x)?;
    if x == x.round() && x <= 20.0 {
        // exact factorials
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    if x >= 0.5 {
        Ok(gamma_positive(x))
    } else {
        let s = sin_pi(x);
        let g = gamma_positive(1.0 - x);
        Ok(PI / (s * g))
    }
}

/// Natural logarithm of the Gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires a positive finite argument, got {x}")));
    }
    if x < 0.5 {
        // reflection: ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x)
        return Ok((PI / sin_pi(x)).ln() - ln_gamma(1.0 - x)?);
    }
    if x < STIRLING_MIN {
        return Ok(gamma_positive(x).ln());
    }
    Ok((x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_correction(x))
}

/// The Beta function `Gamma(p) Gamma(q) / Gamma(p + q)`.
pub fn beta(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("beta requires p > 0 and q > 0, got ({p}, {q})")));
    }
    if p + q < GAMMA_MAX_ARG {
        Ok(gamma(p)? * gamma(q)? / gamma(p + q)?)
    } else {
        Ok((ln_gamma(p)? + ln_gamma(q)? - ln_gamma(p + q)?).exp())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("order alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Binomial-series coefficients `c_0..=c_N` generated by recurrence.
///
/// Derivative mode: `c_0 = 1`, `c_1 = alpha - 1`, `c_k = c_{k-1} (k - 2 + alpha) / k`.
/// Solution mode: `c_0 = 1`, `c_1 = -alpha`, `c_k = c_{k-1} (k - 1 - alpha) / k`.
pub fn coeff_seq(alpha: f64, n: usize, mode: CoeffMode) -> Result<CoeffSeq> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::Domain("truncation order N must be at least 1".into()));
    }
    let (first, shift) = match mode {
        CoeffMode::Derivative => (alpha - 1.0, alpha - 2.0),
        CoeffMode::Solution => (-alpha, -1.0 - alpha),
    };
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    c.push(first);
    for k in 2..=n {
        let kf = k as f64;
        let prev = c[k - 1];
        c.push(prev * (kf + shift) / kf);
    }
    Ok(CoeffSeq { alpha, mode, c })
}

/// `x^k / Gamma(mu k + beta)`, switching to logarithms once the Gamma value
/// would overflow.
fn ml_term(mu: f64, beta: f64, x: f64, k: usize) -> Result<f64> {
    let arg = mu * k as f64 + beta;
    if arg < 170.0 {
        let p = x.powi(k as i32);
        if p.is_finite() {
            return Ok(p / gamma(arg)?);
        }
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * (k as f64 * x.abs().ln() - ln_gamma(arg)?).exp())
}

/// Two-parameter Mittag-Leffler function `E_{mu,beta}(x) = sum_k x^k / Gamma(mu k + beta)`.
///
/// Summation stops once two consecutive terms fall below `ctl.rel_tol` times the
/// magnitude of the running sum. Direct summation is accurate for moderate
/// arguments (`|x|` up to a few tens); large negative arguments suffer cancellation.
pub fn mittag_leffler(mu: f64, beta: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(mu > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!("Mittag-Leffler requires mu > 0 and beta > 0, got ({mu}, {beta})")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("Mittag-Leffler argument must be finite, got {x}")));
    }
    let mut sum = 0.0;
    let mut small_run = 0;
    for k in 0..ctl.max_terms {
        let term = ml_term(mu, beta, x, k)?;
        sum += term;
        if term.abs() <= ctl.rel_tol * sum.abs() {
            small_run += 1;
            if small_run == 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence { terms: ctl.max_terms })
}

/// `E_{mu,beta}` with default series control.
pub fn ml(mu: f64, beta: f64, x: f64) -> Result<f64> {
    mittag_leffler(mu, beta, x, &SeriesControl::default())
}
