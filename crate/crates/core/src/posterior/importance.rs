use rand::Rng;
use rayon::prelude::*;

use crate::densities::SupportedDensity;
use crate::error::{Error, Result};
use crate::priors::{ExpFamilyDensity, ExpFamilySpec};
use crate::scalar::log_sum_exp;

pub const MIN_IS_SAMPLES: usize = 100;
/// Effective sample sizes below this attach a degeneracy warning.
pub const ESS_WARNING_LEVEL: f64 = 10.0;

/// Self-normalized importance sample of exponential-family densities.
#[derive(Debug, Clone)]
pub struct WeightedDensities {
    pub members: Vec<ExpFamilyDensity>,
    pub weights: Vec<f64>,
    pub ess: f64,
    pub warning: Option<String>,
}

impl WeightedDensities {
    pub fn predictive(&self) -> Result<SupportedDensity<f64>> {
        let densities: Vec<SupportedDensity<f64>> =
            self.members.iter().map(|m| m.density.clone()).collect();
        Ok(SupportedDensity::mixture(&densities, &self.weights)?.with_label("expfam_predictive"))
    }
}

/// Importance sampling with the prior as proposal: weights `∝ ∏_i f_θ(X_i)`.
pub fn expfam_posterior_is<R: Rng + ?Sized>(
    spec: &ExpFamilySpec,
    data: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<WeightedDensities> {
    if samples < MIN_IS_SAMPLES {
        return Err(Error::invalid("samples", format!("need S >= {MIN_IS_SAMPLES}")));
    }
    if data.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("data", "observations must lie in [0, 1]"));
    }
    let thetas: Vec<Vec<f64>> = (0..samples).map(|_| spec.sample_coefficients(rng)).collect();
    let rule = ExpFamilySpec::normalizer_rule();
    let members = thetas
        .par_iter()
        .map(|theta| ExpFamilyDensity::from_coefficients(theta, &rule))
        .collect::<Result<Vec<_>>>()?;
    let log_w: Vec<f64> = members
        .iter()
        .map(|m| data.iter().map(|&x| m.log_density(x)).sum())
        .collect();
    let total = log_sum_exp(log_w.iter().copied());
    let weights: Vec<f64> = log_w.iter().map(|l| (l - total).exp()).collect();
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let warning = (ess < ESS_WARNING_LEVEL)
        .then(|| format!("importance sample degenerate: ESS = {ess:.2} from {samples} draws"));
    Ok(WeightedDensities {
        members,
        weights,
        ess,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};

    #[test]
    fn no_data_gives_equal_weights() {
        let spec = ExpFamilySpec::power_law(3, 1.0, 1.0).unwrap();
        let mut rng = stream(5, 0, StreamPurpose::Posterior);
        let post = expfam_posterior_is(&spec, &[], 100, &mut rng).unwrap();
        assert!((post.ess - 100.0).abs() < 1e-9);
        assert!(post.warning.is_none());
    }

    #[test]
    fn intercept_only_model_is_flat() {
        let spec = ExpFamilySpec::new(vec![2.0], 1).unwrap();
        let mut rng = stream(5, 0, StreamPurpose::Posterior);
        let post = expfam_posterior_is(&spec, &[0.1, 0.9, 0.4], 100, &mut rng).unwrap();
        assert!(post.weights.iter().all(|w| (w - 0.01).abs() < 1e-12));
    }

    #[test]
    fn too_few_samples_rejected() {
        let spec = ExpFamilySpec::power_law(2, 1.0, 1.0).unwrap();
        let mut rng = stream(5, 0, StreamPurpose::Posterior);
        assert!(expfam_posterior_is(&spec, &[], 99, &mut rng).is_err());
    }
}
