use num_rational::Ratio;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::densities::SupportedDensity;
use crate::error::{Error, Result};
use crate::priors::{dirichlet_shifted, RandomHistogramPrior};
use crate::scalar::log_sum_exp;

/// Index of the bin of `[0, 1]` split into `m` equal bins that contains `x`.
pub fn bin_index(x: f64, m: usize) -> usize {
    ((x * m as f64).floor() as usize).min(m - 1)
}

/// Random-histogram posterior: per-model bin counts and log marginal likelihoods.
#[derive(Debug, Clone)]
pub struct HistogramPosterior {
    prior: RandomHistogramPrior,
    n: u64,
    /// `counts[m - 1][k]` is `n_km`.
    counts: Vec<Vec<u64>>,
    /// `log p(X^n | m)`, accumulated one predictive factor at a time.
    log_marginal: Vec<f64>,
}

impl HistogramPosterior {
    pub fn new(prior: RandomHistogramPrior) -> Self {
        let m_max = prior.max_bins();
        Self {
            counts: (1..=m_max).map(|m| vec![0; m]).collect(),
            log_marginal: vec![0.0; m_max],
            n: 0,
            prior,
        }
    }

    pub fn prior(&self) -> &RandomHistogramPrior {
        &self.prior
    }

    pub fn observations(&self) -> u64 {
        self.n
    }

    pub fn counts(&self, m: usize) -> &[u64] {
        &self.counts[m - 1]
    }

    /// Adds one observation; each model's marginal gains its current predictive factor.
    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid("x", format!("{x} is outside [0, 1]")));
        }
        let n = self.n as f64;
        for (i, (counts, lm)) in self.counts.iter_mut().zip(&mut self.log_marginal).enumerate() {
            let m = i + 1;
            let k = bin_index(x, m);
            let w = m as f64 * (1.0 + counts[k] as f64) / (m as f64 + n);
            *lm += w.ln();
            counts[k] += 1;
        }
        self.n += 1;
        Ok(())
    }

    /// `w_kmn = m (1 + n_km) / (m + n)`, exactly.
    pub fn exact_weights(&self, m: usize) -> Vec<Ratio<u64>> {
        let denom = m as u64 + self.n;
        self.counts(m)
            .iter()
            .map(|c| Ratio::new(m as u64 * (1 + c), denom))
            .collect()
    }

    pub fn weights(&self, m: usize) -> Vec<f64> {
        let denom = m as f64 + self.n as f64;
        self.counts(m)
            .iter()
            .map(|c| m as f64 * (1.0 + *c as f64) / denom)
            .collect()
    }

    pub fn log_marginal(&self, m: usize) -> f64 {
        self.log_marginal[m - 1]
    }

    /// Model posterior `π(m | X^n)` for `m = 1..=M_max`.
    pub fn model_posterior(&self) -> Vec<f64> {
        let logs: Vec<f64> = (1..=self.prior.max_bins())
            .map(|m| self.prior.prob(m).ln() + self.log_marginal(m))
            .collect();
        let total = log_sum_exp(logs.iter().copied());
        logs.iter().map(|l| (l - total).exp()).collect()
    }

    /// `f_n(x) = Σ_m π(m | X^n) f_nm(x)` where `f_nm` has heights `w_kmn`.
    pub fn predictive(&self) -> SupportedDensity<f64> {
        let parts: Vec<(f64, Vec<f64>)> = self
            .model_posterior()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(i, p)| (p, self.weights(i + 1)))
            .collect();
        let mut breaks: Vec<f64> = parts
            .iter()
            .flat_map(|(_, w)| {
                let m = w.len();
                (1..m).map(move |k| k as f64 / m as f64)
            })
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let sup = parts
            .iter()
            .map(|(p, w)| p * w.iter().copied().fold(0.0, f64::max))
            .sum();
        SupportedDensity::on_unit(move |x| {
            parts
                .iter()
                .map(|(p, w)| p * w[bin_index(x, w.len())])
                .sum()
        })
        .with_breakpoints(breaks)
        .with_sup(sup)
        .with_label("histogram_predictive")
    }

    /// Posterior draw: `m ~ π(m | X^n)`, then bin probabilities from `Dirichlet(1 + n_km)`.
    pub fn sample_density<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SupportedDensity<f64>> {
        let post = self.model_posterior();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut m = post.len();
        for (i, p) in post.iter().enumerate() {
            acc += p;
            if u < acc {
                m = i + 1;
                break;
            }
        }
        let p = dirichlet_shifted(self.counts(m), rng);
        RandomHistogramPrior::histogram_density(&p)
    }
}

/// Closed form `log[m^n (m − 1)! ∏ n_k! / (n + m − 1)!]` of the Dirichlet-multinomial marginal.
pub fn log_dirichlet_multinomial(counts: &[u64]) -> f64 {
    let m = counts.len() as f64;
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    n * m.ln() + ln_gamma(m) + counts.iter().map(|c| ln_gamma(*c as f64 + 1.0)).sum::<f64>()
        - ln_gamma(n + m)
}

/// Posterior of a random-histogram prior given `data`.
pub fn histogram_update(prior: &RandomHistogramPrior, data: &[f64]) -> Result<HistogramPosterior> {
    let mut post = HistogramPosterior::new(prior.clone());
    for &x in data {
        post.observe(x)?;
    }
    Ok(post)
}

pub fn histogram_predictive(post: &HistogramPosterior) -> SupportedDensity<f64> {
    post.predictive()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_match_hand_values() {
        let post = histogram_update(&RandomHistogramPrior::point(2).unwrap(), &[0.1, 0.2, 0.7]).unwrap();
        assert_eq!(post.counts(2), &[2, 1]);
        assert_eq!(post.exact_weights(2), vec![Ratio::new(6, 5), Ratio::new(4, 5)]);
        let f = histogram_predictive(&post);
        assert!((f.eval(0.3) - 1.2).abs() < 1e-15);
        assert!((f.eval(0.8) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_data_gives_prior_means() {
        let prior = RandomHistogramPrior::geometric(0.5, 8).unwrap();
        let post = histogram_update(&prior, &[]).unwrap();
        for m in 1..=8 {
            assert!(post.weights(m).iter().all(|w| *w == 1.0));
            assert!((post.model_posterior()[m - 1] - prior.prob(m)).abs() < 1e-15);
        }
        assert!((post.predictive().eval(0.37) - 1.0).abs() < 1e-15);
        let two_four = RandomHistogramPrior::from_weights(vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        assert!((histogram_predictive(&HistogramPosterior::new(two_four)).eval(0.9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_bin_stays_uniform() {
        let post = histogram_update(&RandomHistogramPrior::point(1).unwrap(), &[0.1, 0.1, 0.2]).unwrap();
        assert_eq!(post.exact_weights(1), vec![Ratio::from_integer(1)]);
        assert!((post.predictive().eval(0.05) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn incremental_marginal_matches_closed_form() {
        let prior = RandomHistogramPrior::geometric(0.6, 10).unwrap();
        let data = [0.05, 0.51, 0.52, 0.99, 0.33, 0.34, 1.0, 0.0];
        let post = histogram_update(&prior, &data).unwrap();
        for m in 1..=10 {
            let closed = log_dirichlet_multinomial(post.counts(m));
            assert!((post.log_marginal(m) - closed).abs() < 1e-12, "m = {m}");
        }
        let total: f64 = post.model_posterior().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
