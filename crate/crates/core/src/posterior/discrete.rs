use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::densities::{hellinger_distance, hellinger_h, QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};
use crate::priors::DiscretePrior;
use crate::scalar::{log_sum_exp, Real};

/// Posterior of a discrete prior: `Π_k^n ∝ Π_k ∏_i f_k(X_i)`.
///
/// Log weights accumulate `log Π_k + Σ_i log f_k(X_i)`; the common `f0`
/// factor of the likelihood ratio cancels and is never carried here.
#[derive(Debug, Clone)]
pub struct DiscretePosterior<T: Real = f64> {
    base: Arc<DiscretePrior<T>>,
    log_weights: Vec<T>,
    n: usize,
}

impl<T: Real> DiscretePosterior<T> {
    pub fn new(prior: DiscretePrior<T>) -> Self {
        Self::from_shared(Arc::new(prior))
    }

    pub fn from_shared(base: Arc<DiscretePrior<T>>) -> Self {
        let log_weights = base.weights().iter().map(|w| w.ln()).collect();
        Self {
            base,
            log_weights,
            n: 0,
        }
    }

    pub fn prior(&self) -> &DiscretePrior<T> {
        &self.base
    }

    pub fn observations(&self) -> usize {
        self.n
    }

    /// Unnormalized log weights `log Π_k + Σ log f_k(X_i)`.
    pub fn log_weights(&self) -> &[T] {
        &self.log_weights
    }

    /// Posterior after one more observation.
    pub fn update(&self, x: T) -> Result<Self> {
        let mut next = self.clone();
        next.observe(x)?;
        Ok(next)
    }

    /// In-place update; fails when every atom vanishes at `x`.
    pub fn observe(&mut self, x: T) -> Result<()> {
        let values: Vec<T> = self.base.atoms().iter().map(|f| f.eval(x)).collect();
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::invalid("x", format!("atom density not finite at {}", x.as_f64())));
        }
        if values
            .iter()
            .zip(&self.log_weights)
            .all(|(v, lw)| *v <= T::zero() || *lw == T::neg_infinity())
        {
            return Err(Error::ZeroLikelihood { x: x.as_f64() });
        }
        for (lw, v) in self.log_weights.iter_mut().zip(values) {
            *lw = *lw + v.ln();
        }
        self.n += 1;
        Ok(())
    }

    /// Normalized weights `Π_k^n` (max-shift normalization).
    pub fn weights(&self) -> Vec<T> {
        let total = log_sum_exp(self.log_weights.iter().copied());
        self.log_weights.iter().map(|lw| (*lw - total).exp()).collect()
    }

    /// `log Σ_{k∈A} exp(log_weight_k)`.
    pub fn log_mass_unnormalized(&self, set: &AtomSet) -> T {
        log_sum_exp(
            self.log_weights
                .iter()
                .zip(set.members())
                .filter(|(_, m)| **m)
                .map(|(lw, _)| *lw),
        )
    }

    /// `Π^n(A)`.
    pub fn posterior_mass(&self, set: &AtomSet) -> T {
        let all = log_sum_exp(self.log_weights.iter().copied());
        (self.log_mass_unnormalized(set) - all).exp()
    }

    /// Predictive density `f_n = Σ_k Π_k^n f_k`.
    pub fn predictive(&self) -> SupportedDensity<T> {
        SupportedDensity::mixture(self.base.atoms(), &self.weights())
            .expect("posterior weights are a valid mixture")
            .with_label("predictive")
    }

    /// Restricted predictive `f_nA`: the mixture over `A` with weights
    /// renormalized within `A`.
    pub fn restricted_predictive(&self, set: &AtomSet) -> Result<SupportedDensity<T>> {
        if set.len() != self.log_weights.len() {
            return Err(Error::invalid("set", "membership mask length differs from atom count"));
        }
        let inside = self.log_mass_unnormalized(set);
        if inside == T::neg_infinity() {
            return Err(Error::EmptyRestriction);
        }
        let weights: Vec<T> = self
            .log_weights
            .iter()
            .zip(set.members())
            .map(|(lw, m)| if *m { (*lw - inside).exp() } else { T::zero() })
            .collect();
        Ok(SupportedDensity::mixture(self.base.atoms(), &weights)?.with_label("restricted_predictive"))
    }
}

/// Membership mask over the atoms of a discrete prior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomSet {
    members: Vec<bool>,
}

impl AtomSet {
    pub fn from_mask(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; len];
        for &i in indices {
            *members
                .get_mut(i)
                .ok_or_else(|| Error::invalid("indices", format!("atom {i} out of range")))? = true;
        }
        Ok(Self { members })
    }

    pub fn all(len: usize) -> Self {
        Self {
            members: vec![true; len],
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn is_whole(&self) -> bool {
        self.members.iter().all(|m| *m)
    }
}

/// Which Hellinger variant measures the radius of a complement set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `H = {∫(√f − √g)²}^{1/2}`.
    Hellinger,
    /// `h = 1 − ∫√(fg) = H²/2`.
    HellingerHalfSquared,
}

/// The set `{f : d(f, f0) > ε}`.
#[derive(Debug, Clone)]
pub struct HellingerComplementSet<T: Real = f64> {
    pub reference: SupportedDensity<T>,
    pub radius: T,
    pub metric: Metric,
}

impl<T: Real> HellingerComplementSet<T> {
    pub fn new(reference: SupportedDensity<T>, radius: T, metric: Metric) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::invalid("radius", "need eps > 0"));
        }
        Ok(Self {
            reference,
            radius,
            metric,
        })
    }

    pub fn distance(&self, f: &SupportedDensity<T>, rule: &QuadratureRule<T>) -> Result<T> {
        match self.metric {
            Metric::Hellinger => hellinger_distance(f, &self.reference, rule),
            Metric::HellingerHalfSquared => hellinger_h(f, &self.reference, rule),
        }
    }

    /// Membership of every atom, computed once; distances do not depend on data.
    pub fn resolve(&self, prior: &DiscretePrior<T>, rule: &QuadratureRule<T>) -> Result<AtomSet> {
        let members = prior
            .atoms()
            .iter()
            .map(|f| Ok(self.distance(f, rule)? > self.radius))
            .collect::<Result<Vec<_>>>()?;
        Ok(AtomSet { members })
    }
}
