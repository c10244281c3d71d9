//! Composite Gauss–Legendre panel quadrature on finite intervals.
//!
//! Panels are uniform over each smooth piece of the integrand (pieces are
//! delimited by declared breakpoints). The graded scheme additionally splits
//! the two outermost panels of the support geometrically toward the endpoint,
//! which resolves integrable endpoint singularities such as `sqrt(x)` and
//! `log(x)` and exposes non-integrable ones: for `1/x` every dyadic panel
//! contributes the same amount, so the innermost panel does not shrink.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closed interval `[lo, hi]`; bounds may be infinite for real-line supports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T: Real = f64> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid("interval", "need lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: T::zero(),
            hi: T::one(),
        }
    }

    pub fn real_line() -> Self {
        Self {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn length(&self) -> T {
        self.hi - self.lo
    }
}

/// Panel scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Uniform panels with an n-point Gauss–Legendre rule on each.
    GaussLegendre,
    /// As `GaussLegendre`, with dyadic grading of the two outermost panels.
    GradedGaussLegendre,
}

/// A composite quadrature rule. Nodes and weights of the reference rule are
/// computed once at construction.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T: Real = f64> {
    scheme: Scheme,
    panels: usize,
    abs_tol: T,
    grading_levels: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
}

pub const DEFAULT_PANELS: usize = 512;
pub const DEFAULT_POINTS: usize = 8;
pub const DEFAULT_GRADING_LEVELS: usize = 64;

impl<T: Real> Default for QuadratureRule<T> {
    fn default() -> Self {
        Self::new(
            Scheme::GradedGaussLegendre,
            DEFAULT_PANELS,
            T::lit(1e-10).max(T::epsilon() * T::lit(64.0)),
        )
        .expect("default rule is valid")
    }
}

impl<T: Real> QuadratureRule<T> {
    pub fn new(scheme: Scheme, panels: usize, abs_tol: T) -> Result<Self> {
        Self::with_points(scheme, panels, abs_tol, DEFAULT_POINTS)
    }

    pub fn with_points(scheme: Scheme, panels: usize, abs_tol: T, points: usize) -> Result<Self> {
        if panels < 2 {
            return Err(Error::InvalidRule(format!("panels must be >= 2, got {panels}")));
        }
        if !(abs_tol > T::zero()) {
            return Err(Error::InvalidRule("abs_tol must be positive".into()));
        }
        if points == 0 || points > 64 {
            return Err(Error::InvalidRule(format!("points must be in 1..=64, got {points}")));
        }
        let (nodes, weights) = gauss_legendre(points);
        Ok(Self {
            scheme,
            panels,
            abs_tol,
            grading_levels: DEFAULT_GRADING_LEVELS,
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn abs_tol(&self) -> T {
        self.abs_tol
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    /// Same rule with twice as many panels.
    pub fn doubled(&self) -> Self {
        Self {
            panels: self.panels * 2,
            ..self.clone()
        }
    }

    /// Builds the node/weight grid for `support` split at `breaks`.
    pub fn grid(&self, support: Interval<T>, breaks: &[T]) -> Result<QuadratureGrid<T>> {
        QuadratureGrid::build(self, support, breaks)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            deriv = nf * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / deriv;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Result of integrating on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    /// Set when the innermost graded panel at a support endpoint still
    /// contributes more than the rule tolerance.
    pub endpoint_blowup: bool,
}

/// Flattened nodes and weights ready for repeated integration.
#[derive(Debug, Clone)]
pub struct QuadratureGrid<T: Real = f64> {
    nodes: Vec<T>,
    weights: Vec<T>,
    /// Node index ranges of the innermost dyadic panel at each graded end.
    edge_panels: Vec<std::ops::Range<usize>>,
    abs_tol: T,
}

impl<T: Real> QuadratureGrid<T> {
    fn build(rule: &QuadratureRule<T>, support: Interval<T>, breaks: &[T]) -> Result<Self> {
        if !support.is_finite() {
            return Err(Error::invalid(
                "support",
                "quadrature needs a finite interval; real-line masses use the error function",
            ));
        }
        let mut cuts: Vec<T> = breaks
            .iter()
            .copied()
            .filter(|b| *b > support.lo && *b < support.hi)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("breakpoints are not NaN"));
        cuts.dedup();
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(support.lo);
        edges.extend(cuts);
        edges.push(support.hi);

        let total = support.length();
        let graded = rule.scheme == Scheme::GradedGaussLegendre;
        let mut grid = Self {
            nodes: Vec::new(),
            weights: Vec::new(),
            edge_panels: Vec::new(),
            abs_tol: rule.abs_tol,
        };
        let last = edges.len() - 2;
        for (s, pair) in edges.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let frac = ((b - a) / total).as_f64();
            let count = ((rule.panels as f64 * frac).ceil() as usize).max(1);
            let width = (b - a) / T::lit(count as f64);
            for p in 0..count {
                let pa = a + width * T::lit(p as f64);
                let pb = if p + 1 == count { b } else { pa + width };
                let at_left = graded && s == 0 && p == 0;
                let at_right = graded && s == last && p + 1 == count;
                match (at_left, at_right) {
                    (false, false) => grid.push_panel(rule, pa, pb),
                    (true, false) => grid.push_graded(rule, pa, pb, true),
                    (false, true) => grid.push_graded(rule, pa, pb, false),
                    (true, true) => {
                        let mid = (pa + pb) / T::lit(2.0);
                        grid.push_graded(rule, pa, mid, true);
                        grid.push_graded(rule, mid, pb, false);
                    }
                }
            }
        }
        Ok(grid)
    }

    fn push_panel(&mut self, rule: &QuadratureRule<T>, a: T, b: T) {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            self.nodes.push(mid + half * *x);
            self.weights.push(half * *w);
        }
    }

    /// Dyadic panels shrinking toward `a` (when `toward_lo`) or `b`.
    fn push_graded(&mut self, rule: &QuadratureRule<T>, a: T, b: T, toward_lo: bool) {
        let two = T::lit(2.0);
        let width = b - a;
        let mut scale = T::one();
        let levels = rule.grading_levels;
        for level in 0..levels {
            let next = scale / two;
            let (pa, pb) = if toward_lo {
                (a + width * next, a + width * scale)
            } else {
                (b - width * scale, b - width * next)
            };
            let start = self.nodes.len();
            self.push_panel(rule, pa, pb);
            if level + 1 == levels {
                self.edge_panels.push(start..self.nodes.len());
            }
            scale = next;
        }
        let (pa, pb) = if toward_lo {
            (a, a + width * scale)
        } else {
            (b - width * scale, b)
        };
        self.push_panel(rule, pa, pb);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Integrates `f`; any non-finite node value is an error naming the node.
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> Result<Integral<T>> {
        let mut values = Vec::with_capacity(self.nodes.len());
        for &x in &self.nodes {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    node: x.as_f64(),
                    value: v.as_f64(),
                });
            }
            values.push(v);
        }
        let value = values
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (v, w)| acc + *v * *w);
        let endpoint_blowup = self.edge_panels.iter().any(|range| {
            let part = range
                .clone()
                .fold(T::zero(), |acc, i| acc + values[i] * self.weights[i]);
            part.abs() > self.abs_tol
        });
        Ok(Integral {
            value,
            endpoint_blowup,
        })
    }
}

/// Integral of `f` over a finite `support` with `rule`.
pub fn integrate<T: Real>(
    f: impl FnMut(T) -> T,
    support: Interval<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    Ok(rule.grid(support, &[])?.integrate(f)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // degree 2n-1 exactness
            let deg = 2 * n - 2;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn integrate_examples() {
        let rule = QuadratureRule::<f64>::default();
        let unit = Interval::unit();
        assert!((integrate(|_| 1.0, unit, &rule).unwrap() - 1.0).abs() < 1e-13);
        assert!((integrate(|x| 2.0 * x, unit, &rule).unwrap() - 1.0).abs() < 1e-13);
        let v = integrate(|x: f64| (2.0 * x).sqrt(), unit, &rule).unwrap();
        assert!((v - 0.942_809_041_582_063_4).abs() < 1e-10, "{v}");
    }

    #[test]
    fn non_finite_node_is_reported() {
        let rule = QuadratureRule::<f64>::default();
        let err = integrate(|x| if x > 0.5 { f64::NAN } else { 0.0 }, Interval::unit(), &rule)
            .unwrap_err();
        match err {
            Error::NonFiniteIntegrand { node, .. } => assert!(node > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn graded_rule_flags_non_integrable_endpoint() {
        let rule = QuadratureRule::<f64>::default();
        let grid = rule.grid(Interval::unit(), &[]).unwrap();
        assert!(grid.integrate(|x| 1.0 / x).unwrap().endpoint_blowup);
        assert!(!grid.integrate(|x| -x.ln()).unwrap().endpoint_blowup);
        assert!(!grid.integrate(|x| 1.0 / x.sqrt()).unwrap().endpoint_blowup);
    }

    #[test]
    fn rule_validation() {
        assert!(QuadratureRule::<f64>::new(Scheme::GaussLegendre, 1, 1e-9).is_err());
        assert!(QuadratureRule::<f64>::new(Scheme::GaussLegendre, 4, 0.0).is_err());
        assert!(integrate(|_| 1.0, Interval::<f64>::real_line(), &QuadratureRule::default()).is_err());
    }

    #[test]
    fn breakpoints_make_step_functions_exact() {
        let rule = QuadratureRule::<f64>::new(Scheme::GaussLegendre, 4, 1e-12).unwrap();
        let grid = rule.grid(Interval::unit(), &[1.0 / 3.0]).unwrap();
        let v = grid
            .integrate(|x| if x < 1.0 / 3.0 { 3.0 } else { 0.0 })
            .unwrap()
            .value;
        assert!((v - 1.0).abs() < 1e-14);
    }
}
