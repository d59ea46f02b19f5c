//! Cauchy problems `D x = f(t, x)`, `x(a) = x_a` for the left CK derivative.
//!
//! Three solvers are provided:
//!
//! - [`solve_picard`] iterates the equivalent Volterra equation
//!   `x(t) = x_a + rho^(1-alpha)/Gamma(alpha) int_a^t tau^(rho-1) (t^rho - tau^rho)^(alpha-1) f(tau, x(tau)) dtau`
//!   on consecutive subintervals short enough for the integral operator to
//!   contract;
//! - [`solve_decomposition`] replaces the derivative by its truncated expansion
//!   and integrates the resulting system of `N + 1` ordinary differential
//!   equations with classical RK4;
//! - [`solve_reference`] is a product-trapezoid discretization of the Volterra
//!   equation, used as an independent oracle.
//!
//! The Volterra integrals are discretized in `sigma = tau^rho`, where the kernel
//! becomes `(t^rho - sigma)^(alpha-1) / rho` and can be integrated exactly
//! against a piecewise-linear interpolant of `f`.

use std::sync::Arc;

use crate::decomposition::decomp_coeffs;
use crate::error::{Error, Result};
use crate::operators::{Interval, OrderParams};
use crate::specfun::{self, CoeffMode};

/// Right-hand side `f(t, x)`.
pub type RhsFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Upper limit on the number of Picard subintervals; the history sums grow
/// quadratically with the grid, so longer chains are rejected as non-contracting.
pub const MAX_SUBINTERVALS: usize = 1_000;

#[derive(Clone)]
pub struct CauchyProblem {
    pub f: RhsFn,
    pub p: OrderParams,
    pub iv: Interval,
    pub x_a: f64,
    /// Lipschitz constant of `f` in `x`.
    pub lipschitz: f64,
}

impl std::fmt::Debug for CauchyProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CauchyProblem")
            .field("p", &self.p)
            .field("iv", &self.iv)
            .field("x_a", &self.x_a)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl CauchyProblem {
    pub fn new(f: RhsFn, p: OrderParams, iv: Interval, x_a: f64, lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0) {
            return Err(Error::Domain(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        if !x_a.is_finite() {
            return Err(Error::Domain(format!("initial value must be finite, got {x_a}")));
        }
        Ok(Self { f, p, iv, x_a, lipschitz })
    }
}

/// Solution values on an increasing grid starting at `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub abs_err: Option<Vec<f64>>,
}

impl SolutionGrid {
    fn new(t: Vec<f64>, x: Vec<f64>) -> Self {
        Self { t, x, exact: None, abs_err: None }
    }

    /// Fills the `exact` and `abs_err` columns.
    pub fn with_exact(mut self, exact: impl Fn(f64) -> f64) -> Self {
        let e: Vec<f64> = self.t.iter().map(|&t| exact(t)).collect();
        self.abs_err = Some(self.x.iter().zip(&e).map(|(x, e)| (x - e).abs()).collect());
        self.exact = Some(e);
        self
    }

    /// Largest `|x - exact|` over grid points with `t <= t_max`.
    pub fn sup_error(&self, exact: impl Fn(f64) -> f64, t_max: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.x)
            .filter(|(t, _)| **t <= t_max)
            .map(|(&t, &x)| (x - exact(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolation; clamps outside the grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.x[0];
        }
        if t >= self.t[n - 1] {
            return self.x[n - 1];
        }
        let j = self.t.partition_point(|&s| s <= t);
        let (t0, t1) = (self.t[j - 1], self.t[j]);
        let w = (t - t0) / (t1 - t0);
        self.x[j - 1] * (1.0 - w) + self.x[j] * w
    }

    /// Linear resampling onto `n + 1` uniform points of `[t[0], t[last]]`.
    pub fn resample(&self, n: usize) -> SolutionGrid {
        let (a, b) = (self.t[0], self.t[self.t.len() - 1]);
        let t: Vec<f64> = (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect();
        let x = t.iter().map(|&s| self.interpolate(s)).collect();
        SolutionGrid::new(t, x)
    }
}

/// `(a^rho + rho (Gamma(1+alpha)/L)^(1/alpha))^(1/rho)`, clamped to `b`.
pub fn convergence_horizon(prob: &CauchyProblem) -> f64 {
    let p = &prob.p;
    let g = specfun::gamma(1.0 + p.alpha).expect("1 + alpha is positive");
    let reach = p.rho * (g / prob.lipschitz).powf(1.0 / p.alpha);
    let h = (prob.iv.a.powf(p.rho) + reach).powf(1.0 / p.rho);
    if h.is_nan() {
        prob.iv.b
    } else {
        h.min(prob.iv.b)
    }
}

/// Product-trapezoid weights for row `i` on nodes `sigma[0..=i]`:
/// `int_{sigma_0}^{sigma_i} (sigma_i - s)^(alpha-1) phi(s) ds ~ sum_j w_j phi(sigma_j)`
/// for piecewise-linear `phi`. Writes `i + 1` weights into `out`.
fn trapezoid_row(sigma: &[f64], i: usize, alpha: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(i + 1, 0.0);
    let s = sigma[i];
    let mut d0a = (s - sigma[0]).powf(alpha);
    for j in 0..i {
        let d0 = s - sigma[j];
        let d1 = s - sigma[j + 1];
        let d1a = d1.max(0.0).powf(alpha);
        let width = sigma[j + 1] - sigma[j];
        let i0 = (d0a - d1a) / alpha;
        let jj = (d0a * d0 - d1a * d1) / (alpha + 1.0);
        out[j] += (jj - d1 * i0) / width;
        out[j + 1] += (d0 * i0 - jj) / width;
        d0a = d1a;
    }
}

fn volterra_scale(p: &OrderParams) -> f64 {
    p.rho.powf(-p.alpha) / specfun::gamma(p.alpha).expect("alpha is positive")
}

/// Product-trapezoid solution on `nodes` uniform steps of `[a, b]`.
pub fn solve_reference(prob: &CauchyProblem, nodes: usize) -> Result<SolutionGrid> {
    if nodes < 16 {
        return Err(Error::Config(format!("reference solver needs at least 16 nodes, got {nodes}")));
    }
    let iv = prob.iv;
    let p = &prob.p;
    let t = iv.uniform_grid(nodes);
    let sigma: Vec<f64> = t.iter().map(|s| s.powf(p.rho)).collect();
    let c = volterra_scale(p);
    let mut x = vec![prob.x_a; nodes + 1];
    let mut fv = vec![0.0; nodes + 1];
    fv[0] = (prob.f)(t[0], prob.x_a);
    let mut w = Vec::with_capacity(nodes + 1);
    for i in 1..=nodes {
        trapezoid_row(&sigma, i, p.alpha, &mut w);
        let history: f64 = w[..i].iter().zip(&fv[..i]).map(|(a, b)| a * b).sum();
        let base = prob.x_a + c * history;
        let mut xi = x[i - 1];
        let mut converged = false;
        let mut update = f64::INFINITY;
        for _ in 0..50 {
            let next = base + c * w[i] * (prob.f)(t[i], xi);
            update = (next - xi).abs();
            xi = next;
            if update <= 1e-12 * (1.0 + next.abs()) {
                converged = true;
                break;
            }
        }
        if !converged || !xi.is_finite() {
            return Err(Error::MaxIterations { iterations: 50, last_update: update });
        }
        x[i] = xi;
        fv[i] = (prob.f)(t[i], xi);
    }
    Ok(SolutionGrid::new(t, x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub contraction_target: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub grid_per_subinterval: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { contraction_target: 0.5, tol: 1e-10, max_iter: 200, grid_per_subinterval: 128 }
    }
}

impl PicardConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.contraction_target > 0.0 && self.contraction_target < 1.0) {
            return Err(Error::Config(format!(
                "contraction target must lie in (0, 1), got {}",
                self.contraction_target
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.max_iter == 0 || self.grid_per_subinterval == 0 {
            return Err(Error::Config("max_iter and grid_per_subinterval must be positive".into()));
        }
        Ok(self)
    }
}

/// Bookkeeping for one Picard subinterval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subinterval {
    pub start: f64,
    pub end: f64,
    /// `L rho^(-alpha) (end^rho - start^rho)^alpha / Gamma(alpha + 1)`.
    pub contraction: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub grid: SolutionGrid,
    pub subintervals: Vec<Subinterval>,
    /// Largest violation of the discrete Volterra equation over the grid.
    pub residual: f64,
}

/// Subinterval end points `t_0 = a < t_1 < ... = b` such that each satisfies the
/// contraction condition with equality (the last one possibly with slack).
fn subinterval_breaks(prob: &CauchyProblem, target: f64) -> Result<Vec<f64>> {
    let p = &prob.p;
    let g = specfun::gamma(1.0 + p.alpha)?;
    // Largest admissible increment of t^rho, from the contraction condition solved for it.
    let dsigma = (target * g * p.rho.powf(p.alpha) / prob.lipschitz).powf(1.0 / p.alpha);
    if !(dsigma > 0.0) || !dsigma.is_finite() {
        return Err(Error::NonContraction(prob.iv.a));
    }
    let mut breaks = vec![prob.iv.a];
    let mut t = prob.iv.a;
    while t < prob.iv.b {
        let next = (t.powf(p.rho) + dsigma).powf(1.0 / p.rho).min(prob.iv.b);
        if !(next > t) || breaks.len() > MAX_SUBINTERVALS {
            return Err(Error::NonContraction(t));
        }
        // Absorb a sliver left by rounding into the previous subinterval's neighbor.
        let next = if prob.iv.b - next < 1e-12 * prob.iv.len() { prob.iv.b } else { next };
        breaks.push(next);
        t = next;
    }
    Ok(breaks)
}

/// Picard iteration on contracting subintervals.
///
/// Each subinterval carries a uniform grid of `grid_per_subinterval` steps; the
/// integral operator uses the product-trapezoid weights over the full history.
pub fn solve_picard(prob: &CauchyProblem, cfg: &PicardConfig) -> Result<PicardSolution> {
    let cfg = cfg.validated()?;
    let p = &prob.p;
    let breaks = subinterval_breaks(prob, cfg.contraction_target)?;
    let m = cfg.grid_per_subinterval;
    let mut t = vec![prob.iv.a];
    for pair in breaks.windows(2) {
        for j in 1..=m {
            t.push(if j == m { pair[1] } else { pair[0] + (pair[1] - pair[0]) * j as f64 / m as f64 });
        }
    }
    let sigma: Vec<f64> = t.iter().map(|s| s.powf(p.rho)).collect();
    let c = volterra_scale(p);
    let g1 = specfun::gamma(1.0 + p.alpha)?;
    let total = t.len();
    let mut x = vec![prob.x_a; total];
    let mut fv = vec![0.0; total];
    fv[0] = (prob.f)(t[0], prob.x_a);
    let mut subintervals = Vec::with_capacity(breaks.len() - 1);
    let mut row = Vec::new();

    for (k, pair) in breaks.windows(2).enumerate() {
        let first = k * m + 1;
        let last = first + m - 1;
        // Weight rows for this subinterval; history part is fixed.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut history = Vec::with_capacity(m);
        for i in first..=last {
            trapezoid_row(&sigma, i, p.alpha, &mut row);
            let h: f64 = row[..first].iter().zip(&fv[..first]).map(|(a, b)| a * b).sum();
            history.push(prob.x_a + c * h);
            rows.push(row[first..].to_vec());
        }
        let start_value = x[first - 1];
        for xi in &mut x[first..=last] {
            *xi = start_value;
        }
        let mut iterations = 0;
        let mut update = f64::INFINITY;
        while update > cfg.tol {
            if iterations == cfg.max_iter {
                return Err(Error::MaxIterations { iterations, last_update: update });
            }
            for i in first..=last {
                fv[i] = (prob.f)(t[i], x[i]);
            }
            update = 0.0;
            let next: Vec<f64> = rows
                .iter()
                .zip(&history)
                .map(|(w, h)| h + c * w.iter().zip(&fv[first..]).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            for (xi, n) in x[first..=last].iter_mut().zip(next) {
                update = update.max((n - *xi).abs());
                *xi = n;
            }
            iterations += 1;
            if !update.is_finite() {
                return Err(Error::MaxIterations { iterations, last_update: update });
            }
        }
        for i in first..=last {
            fv[i] = (prob.f)(t[i], x[i]);
        }
        let contraction =
            prob.lipschitz * p.rho.powf(-p.alpha) * (pair[1].powf(p.rho) - pair[0].powf(p.rho)).powf(p.alpha) / g1;
        subintervals.push(Subinterval { start: pair[0], end: pair[1], contraction, iterations });
    }

    let mut residual: f64 = 0.0;
    for i in 1..total {
        trapezoid_row(&sigma, i, p.alpha, &mut row);
        let s: f64 = row.iter().zip(&fv[..=i]).map(|(a, b)| a * b).sum();
        residual = residual.max((x[i] - prob.x_a - c * s).abs());
    }
    Ok(PicardSolution { grid: SolutionGrid::new(t, x), subintervals, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompSolveConfig {
    pub n: usize,
    pub step: f64,
    /// Offset from `a` where integration starts; `None` means `1e-6 (b - a)`.
    pub delta_start: Option<f64>,
}

impl DecompSolveConfig {
    pub fn new(n: usize, step: f64) -> Self {
        Self { n, step, delta_start: None }
    }

    fn delta(&self, iv: &Interval) -> f64 {
        self.delta_start.unwrap_or(1e-6 * iv.len())
    }

    fn validate(&self, iv: &Interval) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("truncation order N must be >= 1".into()));
        }
        if !(self.step > 0.0 && self.step < iv.len()) {
            return Err(Error::Config(format!("step must lie in (0, b - a), got {}", self.step)));
        }
        let d = self.delta(iv);
        if !(d > 0.0 && d < self.step) {
            return Err(Error::Config(format!("start offset must lie in (0, step), got {d}")));
        }
        Ok(())
    }
}

/// Truncated-expansion solver.
///
/// Unknowns are `x` and the moments `V_1..V_N`:
///
/// ```text
/// A S^(1-alpha) t^(1-rho) x' = f(t, x) + sum_k B_k S^(1-alpha-k) V_k
/// V_k' = S^(k-1) x',    S = t^rho - a^rho
/// ```
///
/// started at `a + delta` with `x = x_a`, `V = 0`. The output grid holds `a`
/// and the uniform nominal steps `a + j h` with `h = (b - a) / round((b - a) / step)`.
/// The moment equations are stiff near `a` (their rate grows like `1/(t - a)`),
/// so each nominal step is split into RK4 substeps no longer than `2 / lambda(t)`,
/// with `lambda` the stiffness estimate below; away from `a` this leaves the
/// nominal step untouched.
pub fn solve_decomposition(prob: &CauchyProblem, cfg: &DecompSolveConfig) -> Result<SolutionGrid> {
    let iv = prob.iv;
    cfg.validate(&iv)?;
    let p = prob.p;
    let n = cfg.n;
    let coeffs = decomp_coeffs(&p, n, CoeffMode::Derivative)?;
    if coeffs.a == 0.0 {
        return Err(Error::Config("leading coefficient vanishes".into()));
    }
    let a_pow = iv.a.powf(p.rho);
    let b_sum: f64 = coeffs.b.iter().sum::<f64>().abs();
    let f = &prob.f;

    let rhs = |t: f64, y: &[f64], out: &mut [f64]| {
        let s = t.powf(p.rho) - a_pow;
        let ls = s.ln();
        let mut sum = 0.0;
        for k in 1..=n {
            let v = y[k];
            if v != 0.0 {
                sum += coeffs.b[k - 1] * v.signum() * (v.abs().ln() + (1.0 - p.alpha - k as f64) * ls).exp();
            }
        }
        let xp = (f(t, y[0]) + sum) / (coeffs.a * s.powf(1.0 - p.alpha) * t.powf(1.0 - p.rho));
        out[0] = xp;
        let mut sk = 1.0;
        for slot in out.iter_mut().skip(1) {
            *slot = sk * xp;
            sk *= s;
        }
    };
    let lambda = |t: f64| {
        let s = t.powf(p.rho) - a_pow;
        let d = coeffs.a.abs() * t.powf(1.0 - p.rho);
        b_sum / (d * s) + prob.lipschitz / (d * s.powf(1.0 - p.alpha))
    };

    let steps = ((iv.len() / cfg.step).round() as usize).max(1);
    let h = iv.len() / steps as f64;
    let mut t = iv.a + cfg.delta(&iv);
    let mut y = vec![0.0; n + 1];
    y[0] = prob.x_a;
    let dim = n + 1;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut ts = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    ts.push(iv.a);
    xs.push(prob.x_a);
    for j in 1..=steps {
        let t_end = if j == steps { iv.b } else { iv.a + h * j as f64 };
        while t < t_end - 1e-15 * iv.len() {
            let dt = (t_end - t).min(2.0 / lambda(t));
            rhs(t, &y, &mut k1);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * dt * k1[i];
            }
            rhs(t + 0.5 * dt, &tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * dt * k2[i];
            }
            rhs(t + 0.5 * dt, &tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = y[i] + dt * k3[i];
            }
            rhs(t + dt, &tmp, &mut k4);
            for i in 0..dim {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t = if t_end - t > dt { t + dt } else { t_end };
            if !y[0].is_finite() {
                return Err(Error::StepFailure(t));
            }
        }
        ts.push(t_end);
        xs.push(y[0]);
    }
    Ok(SolutionGrid::new(ts, xs))
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `log(sup_error)` against `log(N)`.
    pub slope: f64,
    /// Right end of the comparison range.
    pub t_max: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sup-norm error of the decomposition solver for each `N` over
/// `[a, min(b, horizon)]`. Without an exact solution the baseline is
/// [`solve_reference`] with `64 * max(N)` steps, interpolated linearly.
/// Distinct `N` values are solved on separate threads.
pub fn convergence_study(
    prob: &CauchyProblem,
    exact: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    ns: &[usize],
    cfg: &DecompSolveConfig,
) -> Result<StudyTable> {
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Config("a study needs at least three distinct N values".into()));
    }
    let t_max = convergence_horizon(prob);
    let baseline = match exact {
        Some(_) => None,
        None => Some(solve_reference(prob, 64 * distinct[distinct.len() - 1])?),
    };
    let reference = |t: f64| match (exact, &baseline) {
        (Some(e), _) => e(t),
        (None, Some(g)) => g.interpolate(t),
        (None, None) => unreachable!(),
    };
    let results: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ns
            .iter()
            .map(|&n| {
                let reference = &reference;
                scope.spawn(move || {
                    let grid = solve_decomposition(prob, &DecompSolveConfig { n, ..*cfg })?;
                    Ok(grid.sup_error(reference, t_max))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(ns.len());
    for (&n, r) in ns.iter().zip(results) {
        rows.push(StudyRow { n, sup_error: r? });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    Ok(StudyTable { slope: loglog_slope(&xs, &ys), rows, t_max })
}
