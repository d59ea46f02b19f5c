//! Composite Gauss-Legendre quadrature on the unit interval.
//!
//! Panels are uniform in the interior and geometrically graded toward either
//! endpoint on request. Every abscissa is carried together with its distance to
//! the right endpoint, computed without cancellation, because the fractional
//! kernels in this crate are evaluated through `1 - u` near `u = 1`.

use crate::error::{Error, Result};

/// Ratio between consecutive graded panel widths.
const GRADING_RATIO: f64 = 0.1;

/// Relative tolerance on the panels-versus-doubled-panels error estimate.
pub const QUAD_REL_TOL: f64 = 1e-6;

/// Composite quadrature configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSpec {
    pub nodes_per_panel: usize,
    pub panels: usize,
    /// Number of geometrically shrinking panels placed at an endpoint where the
    /// integrand may carry an algebraic singularity.
    pub grading_levels: usize,
}

impl QuadSpec {
    pub fn new(nodes_per_panel: usize, panels: usize) -> Result<Self> {
        Self { nodes_per_panel, panels, ..Self::default() }.validated()
    }

    pub fn with_grading_levels(mut self, levels: usize) -> Self {
        self.grading_levels = levels;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if self.nodes_per_panel < 2 {
            return Err(Error::Config(format!("nodes_per_panel must be >= 2, got {}", self.nodes_per_panel)));
        }
        if self.panels < 1 {
            return Err(Error::Config("panels must be >= 1".into()));
        }
        Ok(self)
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { nodes_per_panel: 16, panels: 8, grading_levels: 40 }
    }
}

/// A point of `[0, 1]` stored together with its complement `1 - x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub x: f64,
    pub c: f64,
}

impl UnitPoint {
    fn left(x: f64) -> Self {
        Self { x, c: 1.0 - x }
    }

    fn right(c: f64) -> Self {
        Self { x: 1.0 - c, c }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 1 {
        p0 = 1.0;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints of a composite rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Layout {
    breaks: Vec<UnitPoint>,
}

impl Layout {
    /// `panels` uniform panels; the outermost ones are further split into
    /// `left_levels` / `right_levels` geometrically graded panels.
    pub fn new(panels: usize, left_levels: usize, right_levels: usize) -> Self {
        let width = 1.0 / panels as f64;
        let mut breaks = vec![UnitPoint::left(0.0)];
        for j in (1..=left_levels).rev() {
            breaks.push(UnitPoint::left(width * GRADING_RATIO.powi(j as i32)));
        }
        for j in 1..panels {
            let x = j as f64 * width;
            if x <= 0.5 {
                breaks.push(UnitPoint::left(x));
            } else {
                breaks.push(UnitPoint::right((panels - j) as f64 * width));
            }
        }
        for j in 1..=right_levels {
            breaks.push(UnitPoint::right(width * GRADING_RATIO.powi(j as i32)));
        }
        breaks.push(UnitPoint::right(0.0));
        Self { breaks }
    }

    pub fn panel_count(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Visits every quadrature node with its weight.
    pub fn for_each_node(&self, rule: &GaussLegendre, mut visit: impl FnMut(UnitPoint, f64)) {
        for pair in self.breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi.x - lo.x);
            let half_c = 0.5 * (lo.c - hi.c);
            let half = if lo.x < 0.5 { half } else { half_c };
            let mid_x = 0.5 * (lo.x + hi.x);
            let mid_c = 0.5 * (lo.c + hi.c);
            for (&xi, &wi) in rule.nodes().iter().zip(rule.weights()) {
                let p = UnitPoint { x: mid_x + half * xi, c: mid_c - half * xi };
                visit(p, wi * half);
            }
        }
    }

    /// Returns `(integral, integral of |f|)`.
    pub fn integrate(&self, rule: &GaussLegendre, mut f: impl FnMut(UnitPoint) -> f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut abs = 0.0;
        self.for_each_node(rule, |p, w| {
            let v = f(p);
            sum += w * v;
            abs += w * v.abs();
        });
        (sum, abs)
    }
}

/// Outcome of a checked integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checked {
    pub value: f64,
    pub abs_integral: f64,
    pub error_estimate: f64,
}

/// Integrates `f` over `[0, 1]` with `spec.panels` and `2 * spec.panels` panels and
/// fails when the two disagree by more than `QUAD_REL_TOL` relative to the
/// integral of `|f|`.
pub fn integrate_checked(
    spec: &QuadSpec,
    left_levels: usize,
    right_levels: usize,
    mut f: impl FnMut(UnitPoint) -> f64,
) -> Result<Checked> {
    let rule = GaussLegendre::new(spec.nodes_per_panel);
    let coarse = Layout::new(spec.panels, left_levels, right_levels).integrate(&rule, &mut f);
    let fine = Layout::new(2 * spec.panels, left_levels, right_levels).integrate(&rule, &mut f);
    let error_estimate = (fine.0 - coarse.0).abs();
    if !fine.0.is_finite() {
        return Err(Error::QuadratureFailure { estimate: f64::INFINITY, tolerance: QUAD_REL_TOL });
    }
    if error_estimate > QUAD_REL_TOL * fine.1 {
        let estimate = error_estimate / fine.1;
        return Err(Error::QuadratureFailure { estimate, tolerance: QUAD_REL_TOL });
    }
    Ok(Checked { value: fine.0, abs_integral: fine.1, error_estimate })
}

/// Single-pass integration without an error estimate.
pub fn integrate_unchecked(
    spec: &QuadSpec,
    left_levels: usize,
    right_levels: usize,
    f: impl FnMut(UnitPoint) -> f64,
) -> f64 {
    let rule = GaussLegendre::new(spec.nodes_per_panel);
    Layout::new(spec.panels, left_levels, right_levels).integrate(&rule, f).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_high_degree_polynomials() {
        for n in [2, 5, 16, 33] {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let q: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn layout_is_increasing_and_complements_are_consistent() {
        for &(p, l, r) in &[(1, 0, 0), (1, 5, 5), (8, 6, 24), (3, 0, 4)] {
            let lay = Layout::new(p, l, r);
            assert_eq!(lay.panel_count(), p + l + r);
            for w in lay.breaks.windows(2) {
                assert!(w[1].x > w[0].x || w[1].c < w[0].c);
            }
            for b in &lay.breaks {
                assert!((b.x + b.c - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn graded_layout_handles_endpoint_singularities() {
        // A ratio-0.1 grading limits each panel to roughly 1e-9 relative accuracy
        // for an endpoint singularity; far below the checked tolerance.
        let spec = QuadSpec::default();
        // int_0^1 u^(-0.75) du = 4, singular at the left end
        let v = integrate_checked(&spec, spec.grading_levels, 0, |p| p.x.powf(-0.75)).unwrap();
        assert!((v.value - 4.0).abs() < 1e-9 * 4.0, "{}", v.value);
        // int_0^1 (1-u)^(-0.5) du = 2, singular at the right end
        let v = integrate_checked(&spec, 0, spec.grading_levels, |p| p.c.powf(-0.5)).unwrap();
        assert!((v.value - 2.0).abs() < 1e-9 * 2.0, "{}", v.value);
    }

    #[test]
    fn checked_integration_flags_unresolved_integrands() {
        let spec = QuadSpec { nodes_per_panel: 2, panels: 1, grading_levels: 0 };
        let r = integrate_checked(&spec, 0, 0, |p| (40.0 * p.x).sin());
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn quad_spec_validation() {
        assert!(QuadSpec::new(1, 4).is_err());
        assert!(QuadSpec::new(4, 0).is_err());
        let q = QuadSpec::new(8, 2).unwrap();
        assert_eq!(q.grading_levels, QuadSpec::default().grading_levels);
    }
}
