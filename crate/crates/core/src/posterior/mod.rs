//! Sequential posteriors, predictive and restricted-predictive densities, and
//! posterior mass of Hellinger complements.

mod discrete;
mod histogram;
mod importance;
mod polya;

pub use discrete::{AtomSet, DiscretePosterior, HellingerComplementSet, Metric};
pub use histogram::{
    bin_index, histogram_predictive, histogram_update, log_dirichlet_multinomial, HistogramPosterior,
};
pub use importance::{expfam_posterior_is, WeightedDensities, ESS_WARNING_LEVEL, MIN_IS_SAMPLES};
pub use polya::{dyadic_cell, polya_leaf_masses, polya_observe, polya_predictive, polya_update};

use crate::densities::SupportedDensity;
use crate::error::Result;
use crate::priors::PolyaTreeParams;

/// A posterior that can be advanced one observation at a time and queried
/// for its current predictive density.
pub trait SequentialModel {
    fn predictive(&self) -> Result<SupportedDensity<f64>>;
    fn observe(&mut self, x: f64) -> Result<()>;
    fn observations(&self) -> u64;
}

impl SequentialModel for DiscretePosterior<f64> {
    fn predictive(&self) -> Result<SupportedDensity<f64>> {
        Ok(DiscretePosterior::predictive(self))
    }

    fn observe(&mut self, x: f64) -> Result<()> {
        DiscretePosterior::observe(self, x)
    }

    fn observations(&self) -> u64 {
        DiscretePosterior::observations(self) as u64
    }
}

impl SequentialModel for HistogramPosterior {
    fn predictive(&self) -> Result<SupportedDensity<f64>> {
        Ok(HistogramPosterior::predictive(self))
    }

    fn observe(&mut self, x: f64) -> Result<()> {
        HistogramPosterior::observe(self, x)
    }

    fn observations(&self) -> u64 {
        HistogramPosterior::observations(self)
    }
}

impl SequentialModel for PolyaTreeParams {
    fn predictive(&self) -> Result<SupportedDensity<f64>> {
        polya_predictive(self)
    }

    fn observe(&mut self, x: f64) -> Result<()> {
        polya_observe(self, x)
    }

    fn observations(&self) -> u64 {
        PolyaTreeParams::observations(self)
    }
}
