use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::densities::{QuadratureRule, Scheme, SupportedDensity};
use crate::error::{Error, Result};

/// Truncated infinite-dimensional exponential family on `[0, 1]`:
/// `f(x) = exp{Σ_{j=0}^{J} θ_j φ_j(x) − c(Θ)}` with `φ_0 = 1`,
/// `φ_j(x) = √2 cos(jπx)` and independent `θ_j ~ N(0, σ_j²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamilySpec {
    coord_sds: Vec<f64>,
    decreasing_from: usize,
}

pub const DEFAULT_TRUNCATION: usize = 12;

impl ExpFamilySpec {
    /// `coord_sds[j] = σ_j` for `j = 0..=J`; the σ_j must be nonincreasing from
    /// index `decreasing_from` on.
    pub fn new(coord_sds: Vec<f64>, decreasing_from: usize) -> Result<Self> {
        if coord_sds.is_empty() {
            return Err(Error::invalid("coord_sds", "need at least sigma_0"));
        }
        if coord_sds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("coord_sds", "sigma_j must be positive and finite"));
        }
        if coord_sds
            .windows(2)
            .skip(decreasing_from)
            .any(|w| w[1] > w[0])
        {
            return Err(Error::invalid(
                "coord_sds",
                format!("sigma_j must be nonincreasing from index {decreasing_from}"),
            ));
        }
        Ok(Self {
            coord_sds,
            decreasing_from,
        })
    }

    /// `σ_0 = scale`, `σ_j = scale · j^{−exponent}` for `j = 1..=J`.
    pub fn power_law(truncation: usize, scale: f64, exponent: f64) -> Result<Self> {
        let sds = (0..=truncation)
            .map(|j| if j == 0 { scale } else { scale * (j as f64).powf(-exponent) })
            .collect();
        Self::new(sds, 1)
    }

    pub fn truncation(&self) -> usize {
        self.coord_sds.len() - 1
    }

    pub fn coord_sds(&self) -> &[f64] {
        &self.coord_sds
    }

    pub fn decreasing_from(&self) -> usize {
        self.decreasing_from
    }

    /// Basis function `φ_j(x)`.
    pub fn basis(j: usize, x: f64) -> f64 {
        if j == 0 {
            1.0
        } else {
            std::f64::consts::SQRT_2 * (j as f64 * std::f64::consts::PI * x).cos()
        }
    }

    /// Rule used for the normalizer `c(Θ)`; the integrand is smooth.
    pub fn normalizer_rule() -> QuadratureRule<f64> {
        QuadratureRule::new(Scheme::GaussLegendre, crate::densities::DEFAULT_PANELS, 1e-12)
            .expect("valid rule")
    }

    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.coord_sds
            .iter()
            .map(|s| Normal::new(0.0, *s).expect("sigma is positive").sample(rng))
            .collect()
    }
}

/// `Σ_{j≥1} θ_j φ_j(x)` by the Chebyshev recurrence for `cos(jπx)`.
pub fn cosine_series(theta: &[f64], x: f64) -> f64 {
    if theta.len() <= 1 {
        return 0.0;
    }
    let t = std::f64::consts::PI * x;
    let c1 = t.cos();
    let (mut prev, mut cur) = (1.0, c1);
    let mut acc = 0.0;
    for th in &theta[1..] {
        acc += th * cur;
        let next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
    }
    std::f64::consts::SQRT_2 * acc
}

/// Exponential-family member with its normalizer.
#[derive(Debug, Clone)]
pub struct ExpFamilyDensity {
    pub theta: Arc<[f64]>,
    /// `c(Θ)`, including `θ_0`.
    pub log_normalizer: f64,
    pub density: SupportedDensity<f64>,
}

impl ExpFamilyDensity {
    /// Builds the density for coefficients `θ_0..θ_J`, computing `c(Θ)` by
    /// quadrature and verifying `∫ f = 1` within `1e-6`.
    pub fn from_coefficients(theta: &[f64], rule: &QuadratureRule<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta", "need finite coefficients theta_0..theta_J"));
        }
        let theta: Arc<[f64]> = theta.into();
        let grid = rule.grid(crate::densities::Interval::unit(), &[])?;
        // shift by the max exponent to keep exp() in range
        let shift = grid
            .nodes()
            .iter()
            .map(|&x| cosine_series(&theta, x))
            .fold(f64::NEG_INFINITY, f64::max);
        let z = grid
            .integrate(|x| (cosine_series(&theta, x) - shift).exp())?
            .value;
        let log_normalizer = theta[0] + shift + z.ln();
        let c_rest = log_normalizer - theta[0];
        let th = theta.clone();
        let density = SupportedDensity::on_unit(move |x| (cosine_series(&th, x) - c_rest).exp())
            .with_label("expfam");
        let mass = grid.integrate(|x| density.eval(x))?.value;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized { integral: mass });
        }
        Ok(Self {
            theta,
            log_normalizer,
            density,
        })
    }

    /// `log f(x)`.
    pub fn log_density(&self, x: f64) -> f64 {
        self.theta[0] + cosine_series(&self.theta, x) - self.log_normalizer
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_give_uniform() {
        let rule = ExpFamilySpec::normalizer_rule();
        let d = ExpFamilyDensity::from_coefficients(&[0.0; 5], &rule).unwrap();
        assert!(d.log_normalizer.abs() < 1e-14);
        assert!((d.density.eval(0.3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn theta_zero_cancels() {
        let rule = ExpFamilySpec::normalizer_rule();
        let a = ExpFamilyDensity::from_coefficients(&[0.0, 0.7, -0.2], &rule).unwrap();
        let b = ExpFamilyDensity::from_coefficients(&[3.0, 0.7, -0.2], &rule).unwrap();
        for x in [0.1, 0.5, 0.95] {
            assert!((a.density.eval(x) - b.density.eval(x)).abs() < 1e-12);
            assert!((a.log_density(x) - b.log_density(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_series_matches_direct_sum() {
        let theta = [0.0, 0.3, -0.5, 0.25, 0.1];
        for x in [0.0, 0.17, 0.5, 0.99] {
            let direct: f64 = (1..theta.len()).map(|j| theta[j] * ExpFamilySpec::basis(j, x)).sum();
            assert!((cosine_series(&theta, x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ExpFamilySpec::new(vec![1.0, 0.5, 0.7], 1).is_err());
        assert!(ExpFamilySpec::new(vec![1.0, 0.5, 0.7], 2).is_ok());
        assert!(ExpFamilySpec::new(vec![1.0, 0.0], 0).is_err());
        assert_eq!(ExpFamilySpec::power_law(12, 1.0, 2.0).unwrap().truncation(), 12);
    }
}
