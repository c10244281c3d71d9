//! Density representation and the divergence functionals `h`, `H`, `D`, `χ²`.

mod divergence;
mod quadrature;

use std::fmt;
use std::sync::Arc;

pub use divergence::{chi_squared, hellinger_affinity, pair_grid, hellinger_distance, hellinger_h, kl_divergence, Divergence, DIVERGENCE_CAP};
pub use quadrature::{
    integrate, Integral, Interval, QuadratureGrid, QuadratureRule, Scheme, DEFAULT_GRADING_LEVELS,
    DEFAULT_PANELS, DEFAULT_POINTS,
};

use crate::error::{Error, Result};
use crate::scalar::Real;

type Evaluator<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// An evaluable probability density with respect to Lebesgue measure.
///
/// Cloning is cheap: the evaluator and breakpoint list are shared.
#[derive(Clone)]
pub struct SupportedDensity<T: Real = f64> {
    support: Interval<T>,
    eval: Evaluator<T>,
    breakpoints: Arc<[T]>,
    positivity_floor: T,
    sup: Option<T>,
    label: Arc<str>,
}

impl<T: Real> fmt::Debug for SupportedDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SupportedDensity")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

impl<T: Real> SupportedDensity<T> {
    pub fn new(support: Interval<T>, eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            support,
            eval: Arc::new(eval),
            breakpoints: Arc::from(Vec::new()),
            positivity_floor: T::zero(),
            sup: None,
            label: Arc::from("custom"),
        }
    }

    /// Density on `[0, 1]`.
    pub fn on_unit(eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self::new(Interval::unit(), eval)
    }

    /// Points where the density (or its derivative) jumps; quadrature splits there.
    pub fn with_breakpoints(mut self, breaks: impl IntoIterator<Item = T>) -> Self {
        self.breakpoints = breaks.into_iter().collect::<Vec<_>>().into();
        self
    }

    pub fn with_positivity_floor(mut self, floor: T) -> Self {
        self.positivity_floor = floor.max(T::zero());
        self
    }

    /// Declares a known finite `sup f`.
    pub fn with_sup(mut self, sup: T) -> Self {
        self.sup = Some(sup);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    pub fn support(&self) -> Interval<T> {
        self.support
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn positivity_floor(&self) -> T {
        self.positivity_floor
    }

    pub fn sup(&self) -> Option<T> {
        self.sup
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Density value; zero outside the support.
    pub fn eval(&self, x: T) -> T {
        if self.support.contains(x) {
            (self.eval)(x)
        } else {
            T::zero()
        }
    }

    /// Density value raised to the positivity floor, for use in denominators.
    pub fn eval_floored(&self, x: T) -> T {
        self.eval(x).max(self.positivity_floor)
    }

    /// Checks `∫ f = 1` within `tol` and returns the measured integral.
    pub fn check_normalized(&self, rule: &QuadratureRule<T>, tol: T) -> Result<T> {
        let grid = rule.grid(self.support, &self.breakpoints)?;
        let mass = grid.integrate(|x| self.eval(x))?.value;
        if (mass - T::one()).abs() > tol {
            return Err(Error::NotNormalized {
                integral: mass.as_f64(),
            });
        }
        Ok(mass)
    }

    /// Uniform density on `[0, 1]`.
    pub fn uniform() -> Self {
        Self::on_unit(|_| T::one()).with_sup(T::one()).with_label("uniform")
    }

    /// Uniform density on the sub-interval `[a, b]` of the unit interval.
    pub fn uniform_on(a: T, b: T) -> Result<Self> {
        let inner = Interval::new(a, b)?;
        if a < T::zero() || b > T::one() {
            return Err(Error::invalid("interval", "must lie in [0, 1]"));
        }
        let height = T::one() / inner.length();
        Ok(Self::on_unit(move |x| if x >= a && x <= b { height } else { T::zero() })
            .with_breakpoints([a, b])
            .with_sup(height)
            .with_label(format!("uniform[{:?},{:?}]", a.as_f64(), b.as_f64())))
    }

    /// `(k + 1) x^k` on `[0, 1]`; `k = 1` gives `2x`, `k = 2` gives `3x²`.
    pub fn power(k: u32) -> Self {
        let c = T::lit(f64::from(k) + 1.0);
        let label = match k {
            0 => "uniform".to_string(),
            1 => "2x".to_string(),
            _ => format!("{}x^{}", k + 1, k),
        };
        Self::on_unit(move |x| c * x.powi(k as i32))
            .with_sup(c)
            .with_label(label)
    }

    /// `2x` on `[0, 1]`.
    pub fn linear() -> Self {
        Self::power(1)
    }

    /// Piecewise-constant density on equal-width bins of `[0, 1]`; heights are
    /// rescaled so the density integrates to one.
    pub fn step(heights: &[T]) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::invalid("heights", "need at least one bin"));
        }
        if heights.iter().any(|h| !(*h >= T::zero()) || !h.is_finite()) {
            return Err(Error::invalid("heights", "must be finite and nonnegative"));
        }
        let m = heights.len();
        let mf = T::lit(m as f64);
        let total = heights.iter().fold(T::zero(), |a, h| a + *h) / mf;
        if !(total > T::zero()) {
            return Err(Error::invalid("heights", "all zero"));
        }
        let heights: Arc<[T]> = heights.iter().map(|h| *h / total).collect::<Vec<_>>().into();
        let sup = heights.iter().copied().fold(T::zero(), T::max);
        let breaks: Vec<T> = (1..m).map(|k| T::lit(k as f64) / mf).collect();
        let hs = heights.clone();
        Ok(Self::on_unit(move |x| {
            let idx = (x * mf).floor().to_usize().unwrap_or(0).min(m - 1);
            hs[idx]
        })
        .with_breakpoints(breaks)
        .with_sup(sup)
        .with_label(format!("step{m}")))
    }

    /// Pointwise mixture `Σ w_i f_i` with nonnegative weights summing to one.
    /// Zero-weight components are dropped.
    pub fn mixture(components: &[SupportedDensity<T>], weights: &[T]) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::invalid("mixture", "components and weights must match and be nonempty"));
        }
        let support = components[0].support;
        if components.iter().any(|c| c.support != support) {
            return Err(Error::invalid("mixture", "components need a common support"));
        }
        let parts: Vec<(T, SupportedDensity<T>)> = weights
            .iter()
            .copied()
            .zip(components.iter().cloned())
            .filter(|(w, _)| *w > T::zero())
            .collect();
        if parts.is_empty() {
            return Err(Error::invalid("mixture", "all weights are zero"));
        }
        let mut breaks: Vec<T> = parts.iter().flat_map(|(_, c)| c.breakpoints.iter().copied()).collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).expect("breakpoints are not NaN"));
        breaks.dedup();
        let sup = parts
            .iter()
            .try_fold(T::zero(), |acc, (w, c)| c.sup.map(|s| acc + *w * s));
        let floor = parts.iter().fold(T::zero(), |acc, (w, c)| acc + *w * c.positivity_floor);
        let parts: Arc<[(T, SupportedDensity<T>)]> = parts.into();
        let mut out = Self::new(support, move |x| {
            parts.iter().fold(T::zero(), |acc, (w, c)| acc + *w * c.eval(x))
        })
        .with_breakpoints(breaks)
        .with_positivity_floor(floor)
        .with_label("mixture");
        out.sup = sup;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn menu_densities_are_normalized() {
        let rule = QuadratureRule::<f64>::default();
        let tol = 1e-10;
        for d in [
            SupportedDensity::uniform(),
            SupportedDensity::linear(),
            SupportedDensity::power(2),
            SupportedDensity::uniform_on(0.0, 0.5).unwrap(),
            SupportedDensity::step(&[1.0, 3.0, 2.0]).unwrap(),
        ] {
            d.check_normalized(&rule, tol).unwrap();
        }
    }

    #[test]
    fn unnormalized_density_is_rejected() {
        let rule = QuadratureRule::<f64>::default();
        let bad = SupportedDensity::on_unit(|_| 2.0);
        assert!(matches!(bad.check_normalized(&rule, 1e-6), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn mixture_evaluates_pointwise() {
        let mix = SupportedDensity::<f64>::mixture(
            &[SupportedDensity::uniform(), SupportedDensity::linear()],
            &[0.5, 0.5],
        )
        .unwrap();
        for x in [0.0, 0.25, 0.9] {
            assert!((mix.eval(x) - (0.5 + x)).abs() < 1e-15);
        }
        assert_eq!(mix.sup(), Some(1.5));
    }

    #[test]
    fn eval_outside_support_is_zero() {
        let d = SupportedDensity::<f64>::linear();
        assert_eq!(d.eval(1.5), 0.0);
        assert_eq!(d.eval(-0.1), 0.0);
        let floored = d.with_positivity_floor(1e-3);
        assert_eq!(floored.eval_floored(0.0), 1e-3);
    }
}
