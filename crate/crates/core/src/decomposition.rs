//! Expansion of the Caputo-Katugampola derivative into a first-derivative term
//! and moment functions.
//!
//! For the left operator on `[a, b]`, with `S = t^rho - a^rho`,
//!
//! ```text
//! D x(t) ~ A S^(1-alpha) t^(1-rho) x'(t) - sum_k B_k S^(1-alpha-k) V_k(t)
//! V_k(t) = int_a^t (tau^rho - a^rho)^(k-1) x'(tau) dtau
//! ```
//!
//! and for the right operator, with `S = b^rho - t^rho`,
//!
//! ```text
//! D x(t) ~ -A S^(1-alpha) t^(1-rho) x'(t) + sum_k B_k S^(1-alpha-k) W_k(t)
//! W_k(t) = int_t^b (b^rho - tau^rho)^(k-1) x'(tau) dtau
//! ```
//!
//! Moments are integrated in the scaled variable `u`, so `S^(-k) V_k` is
//! obtained directly and the products above never form `0 * inf` near the
//! base point.

use crate::error::{Error, Result};
use crate::operators::{scaled_distance, Func1, Interval, OrderParams, Side};
use crate::quadrature::{GaussLegendre, Layout, QuadSpec, UnitPoint, QUAD_REL_TOL};
use crate::specfun::{self, coeff_seq, CoeffMode};

/// Number of sample points used to estimate `M(t)`.
const M_SAMPLES: usize = 64;

/// Truncated expansion coefficients `A_N` and `B_{N,1..N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompCoeffs {
    pub n: usize,
    pub mode: CoeffMode,
    pub a: f64,
    /// `b[k - 1]` holds `B_{N,k}`.
    pub b: Vec<f64>,
    pub alpha: f64,
    pub rho: f64,
}

pub fn decomp_coeffs(p: &OrderParams, n: usize, mode: CoeffMode) -> Result<DecompCoeffs> {
    if n == 0 {
        return Err(Error::Config("truncation order N must be >= 1".into()));
    }
    let seq = coeff_seq(p.alpha, n, mode)?;
    let (a_pre, b_pre) = match mode {
        CoeffMode::Derivative => {
            let g = specfun::gamma(2.0 - p.alpha)?;
            (p.rho.powf(p.alpha - 1.0) / g, p.rho.powf(p.alpha) / g)
        }
        CoeffMode::Solution => {
            let g = specfun::gamma(1.0 + p.alpha)?;
            (p.rho.powf(-p.alpha) / g, p.rho.powf(1.0 - p.alpha) / g)
        }
    };
    let b = (1..=n).map(|k| b_pre * seq.c[k] * k as f64).collect();
    Ok(DecompCoeffs { n, mode, a: a_pre * seq.partial_sum(), b, alpha: p.alpha, rho: p.rho })
}

/// Frame for the moment integrals: `tau(u)` and the span `S`.
struct MomentFrame {
    rho: f64,
    side: Side,
    base_pow: f64,
    span: f64,
}

impl MomentFrame {
    fn new(p: &OrderParams, iv: &Interval, t: f64, side: Side) -> Self {
        let base_pow = match side {
            Side::Left => iv.a.powf(p.rho),
            Side::Right => iv.b.powf(p.rho),
        };
        Self { rho: p.rho, side, base_pow, span: scaled_distance(p, iv, t, side) }
    }

    fn tau(&self, u: f64) -> f64 {
        match self.side {
            Side::Left => (self.base_pow + u * self.span).powf(1.0 / self.rho),
            Side::Right => (self.base_pow - u * self.span).powf(1.0 / self.rho),
        }
    }
}

/// `m_k = (1/rho) int_0^1 u^(k-1) tau^(1-rho) x'(tau) du` for `k = 1..n`, so that
/// `V_k = S^k m_k` (or `W_k` on the right).
fn scaled_moments(xprime: &dyn Fn(f64) -> f64, frame: &MomentFrame, n: usize, q: &QuadSpec) -> Result<Vec<f64>> {
    let rule = GaussLegendre::new(q.nodes_per_panel);
    let pass = |panels: usize| {
        let mut sum = vec![0.0; n];
        let mut abs = vec![0.0; n];
        Layout::new(panels, q.grading_levels, 0).for_each_node(&rule, |w: UnitPoint, wt| {
            let tau = frame.tau(w.x);
            let g = wt * tau.powf(1.0 - frame.rho) * xprime(tau);
            let mut uk = 1.0;
            for k in 0..n {
                sum[k] += g * uk;
                abs[k] += (g * uk).abs();
                uk *= w.x;
            }
        });
        (sum, abs)
    };
    let (coarse, _) = pass(q.panels);
    let (fine, abs) = pass(2 * q.panels);
    for k in 0..n {
        if !fine[k].is_finite() {
            return Err(Error::QuadratureFailure { estimate: f64::INFINITY, tolerance: QUAD_REL_TOL });
        }
        let err = (fine[k] - coarse[k]).abs();
        if err > QUAD_REL_TOL * abs[k] {
            return Err(Error::QuadratureFailure { estimate: err / abs[k], tolerance: QUAD_REL_TOL });
        }
    }
    Ok(fine.into_iter().map(|v| v / frame.rho).collect())
}

/// Moment functions `V_1..V_N` (left) or `W_1..W_N` (right) at `t`.
pub fn moments(
    xprime: &dyn Fn(f64) -> f64,
    p: &OrderParams,
    iv: &Interval,
    t: f64,
    n: usize,
    side: Side,
    q: &QuadSpec,
) -> Result<Vec<f64>> {
    if !iv.contains(t) {
        return Err(Error::Domain(format!("t = {t} lies outside [{}, {}]", iv.a, iv.b)));
    }
    let frame = MomentFrame::new(p, iv, t, side);
    if frame.span == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let m = scaled_moments(xprime, &frame, n, q)?;
    Ok(m.iter().enumerate().map(|(k, v)| v * frame.span.powi(k as i32 + 1)).collect())
}

/// Truncated expansion of the CK derivative together with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxDerivative {
    pub value: f64,
    pub bound: f64,
}

/// Evaluates the truncated expansion of order `n` at `t`.
///
/// The bound uses `x.deriv2` when available; otherwise `M(t)` is estimated by
/// central differences of `tau^(1-rho) x'(tau)` and is not certified.
pub fn approx_derivative(
    x: &Func1,
    p: &OrderParams,
    iv: &Interval,
    t: f64,
    n: usize,
    side: Side,
    q: &QuadSpec,
) -> Result<ApproxDerivative> {
    let dx = x.deriv1_fn()?;
    if !iv.contains(t) {
        return Err(Error::Domain(format!("t = {t} lies outside [{}, {}]", iv.a, iv.b)));
    }
    let coeffs = decomp_coeffs(p, n, CoeffMode::Derivative)?;
    let frame = MomentFrame::new(p, iv, t, side);
    let dist = match side {
        Side::Left => t - iv.a,
        Side::Right => iv.b - t,
    };
    if frame.span == 0.0 || dist <= 1e-12 * iv.len() {
        return Ok(ApproxDerivative { value: 0.0, bound: 0.0 });
    }
    let m = scaled_moments(dx.as_ref(), &frame, n, q)?;
    let tail: f64 = coeffs.b.iter().zip(&m).map(|(b, v)| b * v).sum();
    let head = coeffs.a * t.powf(1.0 - p.rho) * dx(t);
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    let value = sign * frame.span.powf(1.0 - p.alpha) * (head - tail);
    let mt = derivative_mode_m(x, p, iv, t, side);
    let bound = error_bound(mt, p, iv, t, n, CoeffMode::Derivative, side);
    Ok(ApproxDerivative { value, bound })
}

/// `max |d/dtau (tau^(1-rho) x'(tau))|` over the range between the base point and `t`.
fn derivative_mode_m(x: &Func1, p: &OrderParams, iv: &Interval, t: f64, side: Side) -> f64 {
    let (lo, hi) = match side {
        Side::Left => (iv.a, t),
        Side::Right => (t, iv.b),
    };
    let g = |tau: f64| tau.powf(1.0 - p.rho) * x.deriv1(tau).unwrap_or(f64::NAN);
    let h = 1e-5 * iv.len();
    let mut best: f64 = 0.0;
    for i in 0..M_SAMPLES {
        let tau = lo + (hi - lo) * i as f64 / (M_SAMPLES - 1) as f64;
        let d = match (x.deriv1(tau), x.deriv2(tau)) {
            (Some(d1), Some(d2)) => (1.0 - p.rho) * tau.powf(-p.rho) * d1 + tau.powf(1.0 - p.rho) * d2,
            _ => {
                let l = (tau - h).max(iv.a);
                let r = (tau + h).min(iv.b);
                (g(r) - g(l)) / (r - l)
            }
        };
        if d.is_nan() {
            continue;
        }
        best = best.max(d.abs());
    }
    best
}

/// Truncation error bound at `t`.
///
/// Derivative mode:
/// `M exp((1-alpha)^2 + 1 - alpha) rho^(alpha-1) / (N^(1-alpha) (1-alpha) Gamma(2-alpha)) S^(1-alpha) d`;
/// solution mode:
/// `M exp(alpha^2 + alpha) rho^(-alpha) / (alpha N^alpha Gamma(1+alpha)) S^alpha d`,
/// where `d` is the distance from `t` to the base point.
pub fn error_bound(mt: f64, p: &OrderParams, iv: &Interval, t: f64, n: usize, mode: CoeffMode, side: Side) -> f64 {
    let s = scaled_distance(p, iv, t, side);
    let d = match side {
        Side::Left => t - iv.a,
        Side::Right => iv.b - t,
    }
    .max(0.0);
    let a = p.alpha;
    let nf = n as f64;
    match mode {
        CoeffMode::Derivative => {
            let g = specfun::gamma(2.0 - a).expect("2 - alpha is positive");
            let b = 1.0 - a;
            mt * (b * b + b).exp() * p.rho.powf(a - 1.0) / (nf.powf(b) * b * g) * s.powf(b) * d
        }
        CoeffMode::Solution => {
            let g = specfun::gamma(1.0 + a).expect("1 + alpha is positive");
            mt * (a * a + a).exp() * p.rho.powf(-a) / (a * nf.powf(a) * g) * s.powf(a) * d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{ck_derivative, power_closed_form};

    fn params(alpha: f64, rho: f64) -> OrderParams {
        OrderParams::new(alpha, rho).unwrap()
    }

    fn example1(rho: f64) -> Func1 {
        Func1::new(move |t: f64| (t.powf(rho) - 1.0).powi(2))
            .with_deriv1(move |t: f64| 2.0 * rho * (t.powf(rho) - 1.0) * t.powf(rho - 1.0))
            .with_deriv2(move |t: f64| {
                2.0 * rho * rho * t.powf(2.0 * rho - 2.0)
                    + 2.0 * rho * (rho - 1.0) * (t.powf(rho) - 1.0) * t.powf(rho - 2.0)
            })
    }

    fn example1_exact(p: &OrderParams, t: f64) -> f64 {
        2.0 * p.rho.powf(p.alpha) / specfun::gamma(3.0 - p.alpha).unwrap() * (t.powf(p.rho) - 1.0).powf(2.0 - p.alpha)
    }

    #[test]
    fn first_order_derivative_coefficients() {
        let c = decomp_coeffs(&params(0.5, 1.0), 1, CoeffMode::Derivative).unwrap();
        let g = specfun::gamma(1.5).unwrap();
        assert!((c.a - 0.5 / g).abs() < 1e-15);
        assert!((c.b[0] + 0.5 / g).abs() < 1e-15);
        assert!(decomp_coeffs(&params(0.5, 1.0), 0, CoeffMode::Derivative).is_err());
    }

    #[test]
    fn solution_mode_head_matches_reflection_form() {
        for &alpha in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for &rho in &[0.4, 1.0, 2.5] {
                let p = params(alpha, rho);
                for n in [1, 4, 17, 40] {
                    let c = decomp_coeffs(&p, n, CoeffMode::Solution).unwrap();
                    let nf = n as f64;
                    let expect = rho.powf(-alpha)
                        / (specfun::gamma(1.0 + alpha).unwrap() * specfun::gamma(-alpha).unwrap().abs())
                        * specfun::gamma(nf + 1.0 - alpha).unwrap()
                        / (alpha * specfun::gamma(nf + 1.0).unwrap());
                    assert!((c.a.abs() - expect).abs() < 1e-12 * expect, "alpha={alpha} n={n}");
                }
            }
        }
    }

    #[test]
    fn derivative_coefficients_follow_their_closed_forms() {
        let p = params(0.35, 1.0);
        let c = decomp_coeffs(&p, 12, CoeffMode::Derivative).unwrap();
        let seq = coeff_seq(0.35, 12, CoeffMode::Derivative).unwrap();
        let g2 = specfun::gamma(2.0 - 0.35).unwrap();
        for k in 1..=12 {
            assert!(seq.c[k] < 0.0);
            let ratio = c.b[k - 1] / seq.c[k];
            assert!((ratio - k as f64 / g2).abs() < 1e-13);
            let direct = specfun::gamma(k as f64 - 1.0 + 0.35).unwrap()
                / (g2 * specfun::gamma(0.35 - 1.0).unwrap() * specfun::gamma(k as f64).unwrap());
            assert!((c.b[k - 1] - direct).abs() < 1e-12 * direct.abs(), "k={k}");
        }
    }

    #[test]
    fn moments_of_simple_functions() {
        let p = params(0.5, 1.0);
        let iv = Interval::new(0.0, 2.0).unwrap();
        let q = QuadSpec::default();
        let one = |_: f64| 1.0;
        assert_eq!(moments(&one, &p, &iv, 0.0, 4, Side::Left, &q).unwrap(), vec![0.0; 4]);
        let v = moments(&one, &p, &iv, 1.5, 6, Side::Left, &q).unwrap();
        for (k, vk) in v.iter().enumerate() {
            let k = k as f64 + 1.0;
            let exact = 1.5f64.powf(k) / k;
            assert!((vk - exact).abs() < 1e-13 * exact);
        }
    }

    #[test]
    fn first_moment_is_the_increment() {
        let q = QuadSpec::default();
        let iv = Interval::new(1.0, 2.0).unwrap();
        for &rho in &[0.2, 0.6, 1.5] {
            let p = params(0.5, rho);
            let x = example1(rho);
            let dx = |t: f64| x.deriv1(t).unwrap();
            for &t in &[1.1, 1.5, 2.0] {
                let v = moments(&dx, &p, &iv, t, 3, Side::Left, &q).unwrap();
                assert!((v[0] - (x.value(t) - x.value(1.0))).abs() < 1e-12);
                let w = moments(&dx, &p, &iv, t, 3, Side::Right, &q).unwrap();
                assert!((w[0] - (x.value(2.0) - x.value(t))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_function_has_zero_expansion() {
        let x = Func1::new(|_| 3.0).with_deriv1(|_| 0.0).with_deriv2(|_| 0.0);
        let p = params(0.4, 0.7);
        let iv = Interval::new(1.0, 3.0).unwrap();
        for n in [1, 5, 20] {
            for &t in &[1.0, 1.7, 3.0] {
                let r = approx_derivative(&x, &p, &iv, t, n, Side::Left, &QuadSpec::default()).unwrap();
                assert_eq!(r.value, 0.0);
                assert_eq!(r.bound, 0.0);
            }
        }
    }

    #[test]
    fn example_function_is_contained_in_the_bound() {
        let p = params(0.5, 0.6);
        let iv = Interval::new(1.0, 2.0).unwrap();
        let x = example1(0.6);
        for &t in &[1.25, 1.5, 1.75, 2.0] {
            let r = approx_derivative(&x, &p, &iv, t, 15, Side::Left, &QuadSpec::default()).unwrap();
            let err = (r.value - example1_exact(&p, t)).abs();
            assert!(err <= r.bound, "t={t} err={err} bound={}", r.bound);
            assert!(err < 1e-2);
        }
    }

    #[test]
    fn approximation_needs_first_derivative() {
        let x = Func1::new(|t| t);
        let p = params(0.5, 1.0);
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(
            approx_derivative(&x, &p, &iv, 0.5, 3, Side::Left, &QuadSpec::default()),
            Err(Error::MissingDerivative)
        );
    }

    #[test]
    fn bound_shrinks_with_order() {
        let p = params(0.3, 1.2);
        let iv = Interval::new(0.5, 2.0).unwrap();
        let x = Func1::new(|t: f64| t.exp()).with_deriv1(|t: f64| t.exp());
        let q = QuadSpec::default();
        let b5 = approx_derivative(&x, &p, &iv, 1.4, 5, Side::Left, &q).unwrap().bound;
        let b9 = approx_derivative(&x, &p, &iv, 1.4, 9, Side::Left, &q).unwrap().bound;
        assert!(b9 < b5);
        let e1 = error_bound(2.0, &p, &iv, 1.4, 10, CoeffMode::Derivative, Side::Left);
        let e4 = error_bound(2.0, &p, &iv, 1.4, 40, CoeffMode::Derivative, Side::Left);
        assert!((e4 / e1 - 4f64.powf(-0.7)).abs() < 1e-14);
        let s1 = error_bound(2.0, &p, &iv, 1.4, 10, CoeffMode::Solution, Side::Left);
        let s4 = error_bound(2.0, &p, &iv, 1.4, 40, CoeffMode::Solution, Side::Left);
        assert!((s4 / s1 - 4f64.powf(-0.3)).abs() < 1e-14);
    }

    #[test]
    fn bound_vanishes_trivially() {
        let p = params(0.6, 0.8);
        let iv = Interval::new(1.0, 2.0).unwrap();
        for mode in [CoeffMode::Derivative, CoeffMode::Solution] {
            assert_eq!(error_bound(0.0, &p, &iv, 1.5, 7, mode, Side::Left), 0.0);
            assert_eq!(error_bound(3.0, &p, &iv, 1.0, 7, mode, Side::Left), 0.0);
            assert_eq!(error_bound(3.0, &p, &iv, 2.0, 7, mode, Side::Right), 0.0);
        }
    }

    #[test]
    fn right_side_expansion_converges_to_closed_form() {
        let p = params(0.5, 0.8);
        let iv = Interval::new(1.0, 2.0).unwrap();
        let rho = p.rho;
        let bp = 2f64.powf(rho);
        let x = Func1::new(move |t: f64| ((bp - t.powf(rho)) / rho).powi(2))
            .with_deriv1(move |t: f64| -2.0 * (bp - t.powf(rho)) / rho * t.powf(rho - 1.0))
            .with_deriv2(move |t: f64| {
                2.0 * t.powf(2.0 * rho - 2.0) - 2.0 * (rho - 1.0) * (bp - t.powf(rho)) / rho * t.powf(rho - 2.0)
            });
        let q = QuadSpec::default();
        let t = 1.3;
        let exact = power_closed_form(2.0, &p, &iv, t, Side::Right).unwrap();
        let direct = ck_derivative(&x, &p, &iv, t, Side::Right, &q).unwrap();
        assert!((direct - exact).abs() < 1e-9 * exact.abs());
        let mut last = f64::INFINITY;
        for n in [2, 8, 32] {
            let r = approx_derivative(&x, &p, &iv, t, n, Side::Right, &q).unwrap();
            let err = (r.value - exact).abs();
            assert!(err <= r.bound, "n={n} err={err} bound={}", r.bound);
            assert!(err < last);
            last = err;
        }
    }
}
