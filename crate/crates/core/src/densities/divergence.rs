use serde::{Deserialize, Serialize};

use super::{QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Values above this are reported as [`Divergence::Infinite`].
pub const DIVERGENCE_CAP: f64 = 1e12;

/// A nonnegative discrepancy that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence<T = f64> {
    Finite(T),
    Infinite,
}

impl<T: Real> Divergence<T> {
    fn from_value(v: T) -> Self {
        if !v.is_finite() || v.as_f64() > DIVERGENCE_CAP {
            Divergence::Infinite
        } else {
            Divergence::Finite(v.max(T::zero()))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Divergence::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match self {
            Divergence::Finite(v) => Some(*v),
            Divergence::Infinite => None,
        }
    }

    /// Value as `f64`, with `f64::INFINITY` for the infinite case.
    pub fn to_f64(&self) -> f64 {
        match self {
            Divergence::Finite(v) => v.as_f64(),
            Divergence::Infinite => f64::INFINITY,
        }
    }

    /// `self < eps`; an infinite divergence is below no threshold.
    pub fn lt(&self, eps: T) -> bool {
        match self {
            Divergence::Finite(v) => *v < eps,
            Divergence::Infinite => false,
        }
    }
}

/// Quadrature grid over the common support, split at both densities' breakpoints.
pub fn pair_grid<T: Real>(
    f: &SupportedDensity<T>,
    g: &SupportedDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<super::QuadratureGrid<T>> {
    if f.support() != g.support() {
        return Err(Error::invalid("support", "densities must share a support"));
    }
    let breaks: Vec<T> = f
        .breakpoints()
        .iter()
        .chain(g.breakpoints())
        .copied()
        .collect();
    rule.grid(f.support(), &breaks)
}

/// `∫ √(f g)`.
pub fn hellinger_affinity<T: Real>(
    f: &SupportedDensity<T>,
    g: &SupportedDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let grid = pair_grid(f, g, rule)?;
    Ok(grid.integrate(|x| (f.eval(x) * g.eval(x)).sqrt())?.value)
}

/// `h(f, g) = 1 − ∫ √(f g)`, clamped to `[0, 1]`.
///
/// Evaluated as `½ ∫ (√f − √g)²`, which is exactly zero for identical
/// densities and avoids cancellation near zero.
pub fn hellinger_h<T: Real>(
    f: &SupportedDensity<T>,
    g: &SupportedDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let grid = pair_grid(f, g, rule)?;
    let sq = grid
        .integrate(|x| {
            let d = f.eval(x).sqrt() - g.eval(x).sqrt();
            d * d
        })?
        .value;
    Ok((sq / T::lit(2.0)).max(T::zero()).min(T::one()))
}

/// Hellinger distance `H = {∫(√f − √g)²}^{1/2} = √(2h)`, in `[0, √2]`.
pub fn hellinger_distance<T: Real>(
    f: &SupportedDensity<T>,
    g: &SupportedDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    Ok((T::lit(2.0) * hellinger_h(f, g, rule)?).sqrt())
}

/// Integrates an integrand that may legitimately be `+∞` at some nodes.
fn integrate_extended<T: Real>(
    grid: &super::QuadratureGrid<T>,
    integrand: impl Fn(T) -> T,
) -> Result<Divergence<T>> {
    let mut hit_infinity = false;
    let result = grid.integrate(|x| {
        let v = integrand(x);
        if v == T::infinity() {
            hit_infinity = true;
            T::zero()
        } else {
            v
        }
    })?;
    if hit_infinity || result.endpoint_blowup {
        return Ok(Divergence::Infinite);
    }
    Ok(Divergence::from_value(result.value))
}

/// Kullback–Leibler divergence `D = ∫ f0 log(f0 / f)`, with the truth `f0` first.
///
/// Infinite when `f` vanishes on a set where `f0 > 0`.
pub fn kl_divergence<T: Real>(
    f0: &SupportedDensity<T>,
    f: &SupportedDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<Divergence<T>> {
    let grid = pair_grid(f0, f, rule)?;
    integrate_extended(&grid, |x| {
        let p = f0.eval(x);
        if p <= T::zero() {
            return T::zero();
        }
        let q = f.eval_floored(x);
        if q <= T::zero() {
            return T::infinity();
        }
        p * (p.ln() - q.ln())
    })
}

/// χ² distance `∫ f0² / f − 1`.
pub fn chi_squared<T: Real>(
    f0: &SupportedDensity<T>,
    f: &SupportedDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<Divergence<T>> {
    let grid = pair_grid(f0, f, rule)?;
    let integral = integrate_extended(&grid, |x| {
        let p = f0.eval(x);
        if p <= T::zero() {
            return T::zero();
        }
        let q = f.eval_floored(x);
        if q <= T::zero() {
            return T::infinity();
        }
        p * p / q
    })?;
    Ok(match integral {
        Divergence::Finite(v) => Divergence::from_value(v - T::one()),
        Divergence::Infinite => Divergence::Infinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const H_UNIFORM_LINEAR: f64 = 0.057_190_958_417_936_634;

    fn halves() -> (SupportedDensity<f64>, SupportedDensity<f64>) {
        (
            SupportedDensity::uniform_on(0.0, 0.5).unwrap(),
            SupportedDensity::uniform_on(0.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn hellinger_examples() {
        let rule = QuadratureRule::<f64>::default();
        let u = SupportedDensity::uniform();
        let l = SupportedDensity::linear();
        assert!(hellinger_h(&u, &u, &rule).unwrap() < 1e-14);
        assert!((hellinger_h(&u, &l, &rule).unwrap() - H_UNIFORM_LINEAR).abs() < 1e-10);
        let (a, b) = halves();
        assert!((hellinger_h(&a, &b, &rule).unwrap() - 1.0).abs() < 1e-14);
        assert!((hellinger_distance(&a, &b, &rule).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kl_examples_and_asymmetry() {
        let rule = QuadratureRule::<f64>::default();
        let u = SupportedDensity::uniform();
        let l = SupportedDensity::linear();
        assert_eq!(kl_divergence(&u, &u, &rule).unwrap(), Divergence::Finite(0.0));
        let d = kl_divergence(&u, &l, &rule).unwrap().finite().unwrap();
        assert!((d - (1.0 - 2f64.ln())).abs() < 1e-10, "{d}");
        // D(2x || uniform) = ∫ 2x log 2x = log 2 − 1/2
        let r = kl_divergence(&l, &u, &rule).unwrap().finite().unwrap();
        assert!((r - (2f64.ln() - 0.5)).abs() < 1e-10);
        assert!((d - r).abs() > 0.1);
        let right = SupportedDensity::uniform_on(0.5, 1.0).unwrap();
        assert!(kl_divergence(&u, &right, &rule).unwrap().is_infinite());
    }

    #[test]
    fn chi_squared_examples() {
        let rule = QuadratureRule::<f64>::default();
        let u = SupportedDensity::uniform();
        let l = SupportedDensity::linear();
        assert_eq!(chi_squared(&u, &u, &rule).unwrap().finite(), Some(0.0));
        assert!(chi_squared(&u, &l, &rule).unwrap().is_infinite());
        let v = chi_squared(&l, &u, &rule).unwrap().finite().unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn floor_keeps_kl_finite() {
        let rule = QuadratureRule::<f64>::default();
        let u = SupportedDensity::uniform();
        let right = SupportedDensity::uniform_on(0.5, 1.0).unwrap().with_positivity_floor(1e-3);
        assert!(!kl_divergence(&u, &right, &rule).unwrap().is_infinite());
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let rule = QuadratureRule::<f64>::default();
        let u = SupportedDensity::uniform();
        let w = SupportedDensity::new(super::super::Interval::new(0.0, 2.0).unwrap(), |_| 0.5);
        assert!(hellinger_h(&u, &w, &rule).is_err());
    }

    #[test]
    fn divergence_cap() {
        assert!(Divergence::from_value(2e12_f64).is_infinite());
        assert_eq!(Divergence::from_value(-1e-17_f64), Divergence::Finite(0.0));
    }
}
