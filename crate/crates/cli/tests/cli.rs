use std::path::Path;
use std::process::{Command, Output};

fn ckfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckfrac")).args(args).output().expect("binary runs")
}

/// Runs with `--out` into `dir` and returns the file contents.
fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let mut all = args.to_vec();
    let p = path.to_str().unwrap();
    all.extend(["--out", p]);
    let out = ckfrac(&all);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::read_to_string(path).unwrap()
}

struct Row {
    t: f64,
    x: f64,
    exact: Option<f64>,
    abs_err: Option<f64>,
}

fn parse_grid(csv: &str) -> Vec<Row> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,exact,abs_err"));
    let opt = |s: &str| if s.is_empty() { None } else { Some(s.parse::<f64>().unwrap()) };
    lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 4, "{l}");
            Row { t: f[0].parse().unwrap(), x: f[1].parse().unwrap(), exact: opt(f[2]), abs_err: opt(f[3]) }
        })
        .collect()
}

fn max_abs_err(rows: &[Row]) -> f64 {
    rows.iter().map(|r| r.abs_err.unwrap()).fold(0.0, f64::max)
}

#[test]
fn decomposition_error_drops_with_order() {
    let dir = tempfile::tempdir().unwrap();
    let base =
        ["solve", "--problem", "example2", "--alpha", "0.5", "--rho", "0.6", "--method", "decomp", "--step", "1e-3"];
    let run = |n: &str| {
        let mut a = base.to_vec();
        a.extend(["--N", n]);
        parse_grid(&run_to_file(dir.path(), &format!("n{n}.csv"), &a))
    };
    let (e5, e15) = (max_abs_err(&run("5")), max_abs_err(&run("15")));
    assert!(e15 < e5, "{e15} vs {e5}");
}

#[test]
fn derivative_output_compares_with_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(
        dir.path(),
        "d.csv",
        &["deriv", "--problem", "example1", "--alpha", "0.7", "--rho", "0.2", "--N", "10"],
    );
    let rows = parse_grid(&csv);
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0].t, 1.0);
    assert_eq!(rows[200].t, 2.0);
    for w in rows.windows(2) {
        assert!((w[1].t - w[0].t - 0.005).abs() < 1e-12);
    }
    for r in &rows {
        let e = r.exact.unwrap();
        assert_eq!(r.abs_err.unwrap(), (r.x - e).abs());
    }
    assert!(max_abs_err(&rows) < 1e-2);
}

#[test]
fn mittag_leffler_exact_column_is_filled() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(
        dir.path(),
        "m.csv",
        &["solve", "--problem", "example3", "--alpha", "0.5", "--rho", "5", "--method", "decomp", "--N", "10"],
    );
    let rows = parse_grid(&csv);
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0].exact, Some(1.0));
    // E_{1/2}(1) = e (1 + erf 1)
    let last = rows.last().unwrap().exact.unwrap();
    assert!((last - 5.0089800807622834663).abs() < 1e-12, "{last}");
    assert!(rows.iter().all(|r| r.exact.is_some() && r.abs_err.is_some()));
}

#[test]
fn moved_base_point_leaves_exact_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(
        dir.path(),
        "i.csv",
        &["integ", "--problem", "example1", "--alpha", "0.5", "--rho", "0.6", "--a", "1.2"],
    );
    assert!(parse_grid(&csv).iter().all(|r| r.exact.is_none() && r.abs_err.is_none()));
    assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
}

#[test]
fn csv_values_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(
        dir.path(),
        "p.csv",
        &["solve", "--problem", "example2", "--alpha", "0.5", "--rho", "0.6", "--method", "picard"],
    );
    let rows = parse_grid(&csv);
    let mut again = String::from("t,x,exact,abs_err\n");
    for r in &rows {
        again += &format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.t, r.x, r.exact.unwrap(), r.abs_err.unwrap());
    }
    assert_eq!(again, csv);
    assert!(max_abs_err(&rows) < 1e-6);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["solve", "--problem", "example3", "--alpha", "0.9", "--rho", "1.5", "--method", "reference"],
        &["deriv", "--problem", "example1", "--alpha", "0.4", "--rho", "1.5"],
        &["study", "--problem", "example2", "--alpha", "0.5", "--rho", "0.6", "--N", "5", "--N", "10", "--N", "15"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let a = run_to_file(dir.path(), &format!("a{i}.csv"), args);
        let b = run_to_file(dir.path(), &format!("b{i}.csv"), args);
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn study_reports_rows_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to_file(
        dir.path(),
        "s.csv",
        &["study", "--problem", "example1", "--alpha", "0.5", "--rho", "0.6", "--N", "5", "--N", "10", "--N", "20"],
    );
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,sup_error");
    let errs: Vec<f64> = lines[1..4].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    let slope: f64 = lines[4].strip_prefix("# fitted_slope=").unwrap().parse().unwrap();
    assert!(slope < 0.0);
    assert_eq!(lines.len(), 5);
}

#[test]
fn stdout_is_used_without_out() {
    let out = ckfrac(&["integ", "--problem", "example3", "--alpha", "0.5", "--rho", "1.5"]);
    assert!(out.status.success());
    let rows = parse_grid(&String::from_utf8(out.stdout).unwrap());
    assert!(max_abs_err(&rows) < 1e-10);
}

fn assert_exit(args: &[&str], code: i32) {
    let out = ckfrac(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_exit(&["deriv", "--alpha", "0.5", "--rho", "0.6"], 2);
    assert_exit(&["frobnicate"], 2);
    assert_exit(&["deriv", "--problem", "example1", "--alpha", "1.5", "--rho", "0.6"], 2);
    assert_exit(&["solve", "--problem", "example2", "--alpha", "0.5", "--rho", "0.6"], 2);
    assert_exit(&["solve", "--problem", "example1", "--alpha", "0.5", "--rho", "0.6", "--method", "picard"], 2);
    assert_exit(&["solve", "--problem", "example2", "--alpha", "0.5", "--rho", "0.6", "--method", "decomp"], 2);
    assert_exit(&["study", "--problem", "example2", "--alpha", "0.5", "--rho", "0.6", "--N", "5", "--N", "10"], 2);
    assert_exit(&["deriv", "--problem", "example1", "--alpha", "0.5", "--rho", "0.6", "--tol", "1e-8"], 2);
}

#[test]
fn solver_errors_exit_with_three() {
    // The contraction condition forces more subintervals than the solver allows.
    assert_exit(
        &["solve", "--problem", "example2", "--alpha", "0.1", "--rho", "0.6", "--b", "20", "--method", "picard"],
        3,
    );
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir.csv");
    assert_exit(
        &["integ", "--problem", "example1", "--alpha", "0.5", "--rho", "0.6", "--out", missing.to_str().unwrap()],
        3,
    );
}

#[test]
fn selftest_passes() {
    let out = ckfrac(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}
