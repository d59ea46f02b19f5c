//! Quick invariant checks run by `ckfrac selftest`.

use crate::decomposition::approx_derivative;
use crate::error::Result;
use crate::operators::{ck_derivative, katugampola_integral, Interval, OrderParams, Side};
use crate::problems::{self, example1_derivative, example1_function, example2_exact, example2_problem};
use crate::quadrature::QuadSpec;
use crate::solver::{
    convergence_horizon, solve_decomposition, solve_picard, solve_reference, DecompSolveConfig, PicardConfig,
};
use crate::specfun::{self, coeff_seq, CoeffMode};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match run() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

const PAIRS: [(f64, f64); 3] = [(0.5, 0.6), (0.7, 0.2), (0.4, 1.5)];

pub fn run_all() -> Vec<CheckResult> {
    let q = QuadSpec::default();
    vec![
        check("gamma_values", || {
            let e = (specfun::gamma(0.5)? - std::f64::consts::PI.sqrt()).abs().max((specfun::gamma(5.0)? - 24.0).abs());
            Ok((e < 1e-14, format!("max error {e:.2e}")))
        }),
        check("solution_coefficient_identity", || {
            let mut worst: f64 = 0.0;
            for alpha in [0.1, 0.5, 0.9] {
                let g = specfun::gamma(-alpha)?.abs();
                for n in [1, 10, 40] {
                    let s = coeff_seq(alpha, n, CoeffMode::Solution)?.partial_sum().abs();
                    let nf = n as f64;
                    let e = specfun::gamma(nf + 1.0 - alpha)? / (alpha * specfun::gamma(nf + 1.0)? * g);
                    worst = worst.max((s - e).abs());
                }
            }
            Ok((worst < 1e-10, format!("max error {worst:.2e}")))
        }),
        check("closed_form_derivative", || {
            let iv = problems::example1_interval();
            let mut worst: f64 = 0.0;
            for (alpha, rho) in PAIRS {
                let p = OrderParams::new(alpha, rho)?;
                let x = example1_function(&p);
                for t in [1.1, 1.5, 1.9] {
                    let exact = example1_derivative(&p, t);
                    worst = worst.max((ck_derivative(&x, &p, &iv, t, Side::Left, &q)? - exact).abs() / exact);
                }
            }
            Ok((worst < 1e-7, format!("max relative error {worst:.2e}")))
        }),
        check("endpoint_law", || {
            let iv = Interval::new(1.0, 2.0)?;
            let mut ok = true;
            for (alpha, rho) in PAIRS {
                let p = OrderParams::new(alpha, rho)?;
                let x = example1_function(&p);
                ok &= ck_derivative(&x, &p, &iv, 1.0, Side::Left, &q)? == 0.0;
                ok &= ck_derivative(&x, &p, &iv, 2.0, Side::Right, &q)? == 0.0;
            }
            Ok((ok, String::new()))
        }),
        check("integral_closed_form", || {
            let p = OrderParams::new(0.5, 0.6)?;
            let x = example1_function(&p);
            let iv = problems::example1_interval();
            let v = katugampola_integral(&x, &p, &iv, 1.7, Side::Left, &q)?;
            let e = (v - problems::example1_integral(&p, 1.7)).abs();
            Ok((e < 1e-10, format!("error {e:.2e}")))
        }),
        check("decomposition_bound", || {
            let iv = problems::example1_interval();
            let mut ok = true;
            for (alpha, rho) in PAIRS {
                let p = OrderParams::new(alpha, rho)?;
                let x = example1_function(&p);
                for t in [1.25, 1.5, 2.0] {
                    let r = approx_derivative(&x, &p, &iv, t, 10, Side::Left, &q)?;
                    ok &= (r.value - example1_derivative(&p, t)).abs() <= r.bound;
                }
            }
            Ok((ok, String::new()))
        }),
        check("picard_polynomial_problem", || {
            let p = OrderParams::new(0.5, 0.6)?;
            let sol = solve_picard(&example2_problem(&p)?, &PicardConfig::default())?;
            let e = sol.grid.sup_error(|t| example2_exact(&p, t), 2.0);
            Ok((e <= 1e-6, format!("sup error {e:.2e}")))
        }),
        check("reference_polynomial_problem", || {
            let p = OrderParams::new(0.5, 0.6)?;
            let g = solve_reference(&example2_problem(&p)?, 1024)?;
            let e = g.sup_error(|t| example2_exact(&p, t), 2.0);
            Ok((e <= 1e-5, format!("sup error {e:.2e}")))
        }),
        check("decomposition_polynomial_problem", || {
            let p = OrderParams::new(0.5, 0.6)?;
            let prob = example2_problem(&p)?;
            let g = solve_decomposition(&prob, &DecompSolveConfig::new(15, 1e-3))?;
            let e = g.sup_error(|t| example2_exact(&p, t), convergence_horizon(&prob));
            Ok((e <= 5e-3, format!("sup error {e:.2e}")))
        }),
    ]
}
