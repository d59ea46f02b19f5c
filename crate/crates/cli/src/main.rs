use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use ckfrac::decomposition::approx_derivative;
use ckfrac::operators::{ck_derivative, katugampola_integral};
use ckfrac::problems::{self, example1_derivative, example1_function, example1_integral};
use ckfrac::solver::{
    convergence_study, loglog_slope, solve_decomposition, solve_picard, solve_reference, CauchyProblem,
    DecompSolveConfig, PicardConfig, SolutionGrid,
};
use ckfrac::{Func1, Interval, OrderParams, QuadSpec, Side};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Output grids for `deriv`, `integ` and `solve` have this many intervals.
const OUTPUT_INTERVALS: usize = 200;

#[derive(Parser, Debug)]
#[command(name = "ckfrac", version, about = "Caputo-Katugampola fractional calculus toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CK derivative of a built-in function, exact or by the truncated expansion (--N).
    Deriv(RunArgs),
    /// Katugampola integral of a built-in function.
    Integ(RunArgs),
    /// Solve a built-in Cauchy problem.
    Solve(RunArgs),
    /// Sup-norm error against N, with the fitted log-log slope.
    Study(RunArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Example1,
    Example2,
    Example3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Picard,
    Decomp,
    Reference,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: Problem,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    rho: f64,
    /// Left end point; defaults to the problem's own.
    #[arg(long)]
    a: Option<f64>,
    /// Right end point; defaults to the problem's own.
    #[arg(long)]
    b: Option<f64>,
    /// Truncation order; repeat for `study`.
    #[arg(long = "N", value_name = "N")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed-point tolerance of `solve --method picard`.
    #[arg(long)]
    tol: Option<f64>,
}

enum Failure {
    Usage(String),
    Solver(String),
    Selftest(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Selftest(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Solver(m) | Failure::Selftest(m) => m,
        }
    }
}

fn solver_err(e: ckfrac::Error) -> Failure {
    Failure::Solver(e.to_string())
}

fn io_err(e: io::Error) -> Failure {
    Failure::Solver(format!("cannot write output: {e}"))
}

/// Resolved parameters shared by all commands.
struct Setup {
    p: OrderParams,
    iv: Interval,
    /// Closed forms only hold for the problem's own base point.
    default_base: bool,
    q: QuadSpec,
}

fn setup(args: &RunArgs) -> Result<Setup, Failure> {
    let p = OrderParams::new(args.alpha, args.rho).map_err(|e| Failure::Usage(e.to_string()))?;
    let own = match args.problem {
        Problem::Example1 => problems::example1_interval(),
        Problem::Example2 => problems::example2_interval(),
        Problem::Example3 => problems::example3_interval(),
    };
    let a = args.a.unwrap_or(own.a);
    let b = args.b.unwrap_or(own.b);
    let iv = Interval::new(a, b).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(tol) = args.tol {
        if !(tol > 0.0) {
            return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
        }
        if args.method != Some(Method::Picard) {
            return Err(Failure::Usage("--tol applies only to solve --method picard".into()));
        }
    }
    Ok(Setup { p, iv, default_base: a == own.a, q: QuadSpec::default() })
}

fn single_n(args: &RunArgs) -> Result<Option<usize>, Failure> {
    match args.n.as_slice() {
        [] => Ok(None),
        [n] => Ok(Some(*n)),
        _ => Err(Failure::Usage("--N may be given only once for this command".into())),
    }
}

fn function_of(problem: Problem, p: &OrderParams) -> Func1 {
    match problem {
        Problem::Example1 | Problem::Example2 => example1_function(p),
        Problem::Example3 => problems::example3_function(p),
    }
}

fn cauchy_problem(args: &RunArgs, s: &Setup) -> Result<CauchyProblem, Failure> {
    let mut prob = match args.problem {
        Problem::Example1 => {
            return Err(Failure::Usage("example1 is not a Cauchy problem; use example2 or example3".into()))
        }
        Problem::Example2 => problems::example2_problem(&s.p),
        Problem::Example3 => problems::example3_problem(&s.p),
    }
    .map_err(solver_err)?;
    prob.iv = s.iv;
    Ok(prob)
}

fn exact_solution(problem: Problem, p: OrderParams) -> impl Fn(f64) -> f64 + Sync {
    move |t| match problem {
        Problem::Example2 => problems::example2_exact(&p, t),
        _ => problems::example3_exact(&p, t).unwrap_or(f64::NAN),
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_grid(out: &mut dyn Write, g: &SolutionGrid) -> io::Result<()> {
    writeln!(out, "t,x,exact,abs_err")?;
    for (i, (t, x)) in g.t.iter().zip(&g.x).enumerate() {
        match (&g.exact, &g.abs_err) {
            (Some(e), Some(d)) => writeln!(out, "{t:.16e},{x:.16e},{:.16e},{:.16e}", e[i], d[i])?,
            _ => writeln!(out, "{t:.16e},{x:.16e},,")?,
        }
    }
    out.flush()
}

fn emit_grid(args: &RunArgs, g: &SolutionGrid) -> Result<(), Failure> {
    let mut out = open_output(&args.out)?;
    write_grid(&mut *out, g).map_err(io_err)
}

fn deriv(args: &RunArgs) -> Result<(), Failure> {
    let s = setup(args)?;
    let n = single_n(args)?;
    let x = function_of(args.problem, &s.p);
    let t = s.iv.uniform_grid(OUTPUT_INTERVALS);
    let mut v = Vec::with_capacity(t.len());
    for &ti in &t {
        let d = match n {
            Some(n) => approx_derivative(&x, &s.p, &s.iv, ti, n, Side::Left, &s.q).map(|r| r.value),
            None => ck_derivative(&x, &s.p, &s.iv, ti, Side::Left, &s.q),
        };
        v.push(d.map_err(solver_err)?);
    }
    let grid = SolutionGrid { t, x: v, exact: None, abs_err: None };
    let grid = match (args.problem, s.default_base) {
        (_, false) => grid,
        (Problem::Example3, true) => {
            let lam = s.p.rho.powf(s.p.alpha);
            grid.with_exact(|t| lam * problems::example3_exact(&s.p, t).unwrap_or(f64::NAN))
        }
        (_, true) => grid.with_exact(|t| example1_derivative(&s.p, t)),
    };
    emit_grid(args, &grid)
}

fn integ(args: &RunArgs) -> Result<(), Failure> {
    let s = setup(args)?;
    if !args.n.is_empty() {
        return Err(Failure::Usage("--N does not apply to integ".into()));
    }
    let x = function_of(args.problem, &s.p);
    let t = s.iv.uniform_grid(OUTPUT_INTERVALS);
    let v = t
        .iter()
        .map(|&ti| katugampola_integral(&x, &s.p, &s.iv, ti, Side::Left, &s.q))
        .collect::<Result<Vec<_>, _>>()
        .map_err(solver_err)?;
    let grid = SolutionGrid { t, x: v, exact: None, abs_err: None };
    let grid = match (args.problem, s.default_base) {
        (_, false) => grid,
        (Problem::Example3, true) => grid.with_exact(|t| problems::example3_integral(&s.p, t).unwrap_or(f64::NAN)),
        (_, true) => grid.with_exact(|t| example1_integral(&s.p, t)),
    };
    emit_grid(args, &grid)
}

fn solve(args: &RunArgs) -> Result<(), Failure> {
    let s = setup(args)?;
    let prob = cauchy_problem(args, &s)?;
    let method = args.method.ok_or_else(|| Failure::Usage("solve requires --method".into()))?;
    let n = single_n(args)?;
    if method != Method::Decomp && n.is_some() {
        return Err(Failure::Usage("--N applies only to --method decomp".into()));
    }
    let grid = match method {
        Method::Picard => {
            let mut cfg = PicardConfig::default();
            if let Some(tol) = args.tol {
                cfg.tol = tol;
            }
            solve_picard(&prob, &cfg).map(|s| s.grid)
        }
        Method::Reference => {
            let nodes = (s.iv.len() / args.step).round().max(16.0) as usize;
            solve_reference(&prob, nodes)
        }
        Method::Decomp => {
            let n = n.ok_or_else(|| Failure::Usage("--method decomp requires --N".into()))?;
            solve_decomposition(&prob, &DecompSolveConfig::new(n, args.step))
        }
    }
    .map_err(solver_err)?
    .resample(OUTPUT_INTERVALS);
    let grid = if s.default_base { grid.with_exact(exact_solution(args.problem, s.p)) } else { grid };
    emit_grid(args, &grid)
}

fn study(args: &RunArgs) -> Result<(), Failure> {
    let s = setup(args)?;
    let mut distinct = args.n.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct[0] == 0 {
        return Err(Failure::Usage("study needs at least three distinct positive --N values".into()));
    }
    if !s.default_base {
        return Err(Failure::Usage("study compares against closed forms and keeps the problem's own a".into()));
    }
    let rows: Vec<(usize, f64)> = match args.problem {
        // Truncated expansion against the closed-form derivative on the output grid.
        Problem::Example1 => {
            let x = example1_function(&s.p);
            let t = s.iv.uniform_grid(OUTPUT_INTERVALS);
            let mut rows = Vec::with_capacity(args.n.len());
            for &n in &args.n {
                let mut sup: f64 = 0.0;
                for &ti in &t {
                    let r = approx_derivative(&x, &s.p, &s.iv, ti, n, Side::Left, &s.q).map_err(solver_err)?;
                    sup = sup.max((r.value - example1_derivative(&s.p, ti)).abs());
                }
                rows.push((n, sup));
            }
            rows
        }
        _ => {
            let prob = cauchy_problem(args, &s)?;
            let exact = exact_solution(args.problem, s.p);
            let table = convergence_study(&prob, Some(&exact), &args.n, &DecompSolveConfig::new(1, args.step))
                .map_err(solver_err)?;
            table.rows.iter().map(|r| (r.n, r.sup_error)).collect()
        }
    };
    let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let slope = loglog_slope(&xs, &ys);
    let mut out = open_output(&args.out)?;
    let mut body = || -> io::Result<()> {
        writeln!(out, "N,sup_error")?;
        for (n, e) in &rows {
            writeln!(out, "{n},{e:.16e}")?;
        }
        writeln!(out, "# fitted_slope={slope:.16e}")?;
        out.flush()
    };
    body().map_err(io_err)
}

fn selftest() -> Result<(), Failure> {
    let results = ckfrac::selftest::run_all();
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    for r in &results {
        println!("{} {}: {}", if r.passed { "ok  " } else { "FAIL" }, r.name, r.detail);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Selftest(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Deriv(a) => deriv(&a),
        Command::Integ(a) => integ(&a),
        Command::Solve(a) => solve(&a),
        Command::Study(a) => study(&a),
        Command::Selftest => selftest(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rows_use_seventeen_significant_digits() {
        let g = SolutionGrid { t: vec![1.0, 0.1], x: vec![-2.5e-300, 1.0 / 3.0], exact: None, abs_err: None };
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "t,x,exact,abs_err\n1.0000000000000000e0,-2.5000000000000000e-300,,\n\
             1.0000000000000001e-1,3.3333333333333331e-1,,\n"
        );
        let g = g.with_exact(|t| t);
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        let line = String::from_utf8(buf).unwrap().lines().nth(2).unwrap().to_string();
        let back: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, 0.1, (1.0 / 3.0 - 0.1f64).abs()]);
    }

    #[test]
    fn failure_codes() {
        assert_eq!(Failure::Usage(String::new()).code(), 2);
        assert_eq!(Failure::Solver(String::new()).code(), 3);
        assert_eq!(Failure::Selftest(String::new()).code(), 4);
    }
}
