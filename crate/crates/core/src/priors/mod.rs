//! Prior families and the diagnostics defined directly on priors.

mod discrete;
mod expfam;
mod histogram;
mod polya;

pub use discrete::{DiscretePrior, MassSchedule, SqrtMassReport, SQRT_MASS_TERMS};
pub use expfam::{cosine_series, ExpFamilyDensity, ExpFamilySpec, DEFAULT_TRUNCATION};
pub use histogram::{BinLawTail, FirstMoment, RandomHistogramPrior, DEFAULT_MAX_BINS};
pub(crate) use histogram::dirichlet_shifted;
pub use polya::{LevelSchedule, PolyaTreeParams, DEFAULT_POLYA_DEPTH};

use rand::Rng;

use crate::densities::{kl_divergence, QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};
use crate::stats::MonteCarloEstimate;

/// A prior from which random densities can be drawn.
pub trait DensityPrior {
    fn sample_density<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SupportedDensity<f64>>;
}

impl DensityPrior for DiscretePrior<f64> {
    fn sample_density<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SupportedDensity<f64>> {
        Ok(self.atoms()[self.sample_index(rng)].clone())
    }
}

impl DensityPrior for PolyaTreeParams {
    /// Draws the truncated tree: a `2^K`-bin histogram.
    fn sample_density<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SupportedDensity<f64>> {
        let splits = self.sample_splits(rng)?;
        PolyaTreeParams::density_from_splits(&splits)
    }
}

impl DensityPrior for RandomHistogramPrior {
    fn sample_density<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SupportedDensity<f64>> {
        let m = self.sample_bins(rng);
        let p = dirichlet_shifted(&vec![0; m], rng);
        RandomHistogramPrior::histogram_density(&p)
    }
}

impl DensityPrior for ExpFamilySpec {
    fn sample_density<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SupportedDensity<f64>> {
        let theta = self.sample_coefficients(rng);
        Ok(ExpFamilyDensity::from_coefficients(&theta, &ExpFamilySpec::normalizer_rule())?.density)
    }
}

/// Monte-Carlo estimate of `Π({f : D(f0 ‖ f) < ε})` from `samples` prior draws.
///
/// `eps = +∞` counts every draw, including those at infinite divergence.
pub fn kl_neighborhood_mass<P: DensityPrior, R: Rng + ?Sized>(
    prior: &P,
    f0: &SupportedDensity<f64>,
    eps: f64,
    samples: usize,
    rng: &mut R,
    rule: &QuadratureRule<f64>,
) -> Result<MonteCarloEstimate> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "need eps > 0"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one draw"));
    }
    let mut hits = 0;
    for _ in 0..samples {
        let f = prior.sample_density(rng)?;
        if eps == f64::INFINITY || kl_divergence(f0, &f, rule)?.lt(eps) {
            hits += 1;
        }
    }
    Ok(MonteCarloEstimate::proportion(hits, samples))
}

/// Exact `Π({f : D(f0 ‖ f) < ε})` for a discrete prior, by enumeration.
pub fn kl_neighborhood_mass_exact(
    prior: &DiscretePrior<f64>,
    f0: &SupportedDensity<f64>,
    eps: f64,
    rule: &QuadratureRule<f64>,
) -> Result<f64> {
    let mut mass = 0.0;
    for (atom, w) in prior.atoms().iter().zip(prior.weights()) {
        if eps == f64::INFINITY || kl_divergence(f0, atom, rule)?.lt(eps) {
            mass += w;
        }
    }
    Ok(mass)
}
