use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{pair_grid, QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};
use crate::posterior::histogram_update;
use crate::priors::{FirstMoment, RandomHistogramPrior};
use crate::rng::{stream, Stream, StreamPurpose};
use crate::stats::MonteCarloEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChiSqVerdict {
    /// Estimate of `E ∫ f0² / f_n` against `λ Σ_m π(m) (m + n) / (1 + n)`.
    Established {
        estimate: MonteCarloEstimate,
        bound: f64,
        within_bound: bool,
    },
    NotEstablished { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSqReport {
    pub n: usize,
    pub lambda: f64,
    pub verdict: ChiSqVerdict,
}

/// `λ Σ_m π(m) (m + n) / (1 + n)`.
pub fn chi_sq_bound(prior: &RandomHistogramPrior, lambda: f64, n: usize) -> f64 {
    let n = n as f64;
    lambda
        * prior
            .bin_law()
            .iter()
            .enumerate()
            .map(|(i, p)| p * ((i + 1) as f64 + n) / (1.0 + n))
            .sum::<f64>()
}

/// Monte-Carlo check of `E_{X^n} ∫ f0² / f_n` for the random-histogram prior.
///
/// Replicate `r` draws its data from stream `(seed, r, Data)` through `sample_truth`.
/// `z` is the number of standard errors allowed above the bound.
#[allow(clippy::too_many_arguments)]
pub fn chi_sq_criterion<F>(
    prior: &RandomHistogramPrior,
    f0: &SupportedDensity<f64>,
    sample_truth: F,
    n: usize,
    replicates: usize,
    seed: u64,
    z: f64,
    rule: &QuadratureRule<f64>,
) -> Result<ChiSqReport>
where
    F: Fn(&mut Stream) -> f64 + Sync,
{
    let lambda = f0.sup().ok_or(Error::UnboundedTruth)?;
    if replicates < 2 {
        return Err(Error::TooFewReplicates {
            required: 2,
            got: replicates,
        });
    }
    if prior.first_moment() == FirstMoment::Infinite {
        return Ok(ChiSqReport {
            n,
            lambda,
            verdict: ChiSqVerdict::NotEstablished {
                reason: "criterion not established: bin law has infinite first moment".into(),
            },
        });
    }
    let values = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64, StreamPurpose::Data);
            let data: Vec<f64> = (0..n).map(|_| sample_truth(&mut rng)).collect();
            let fn_ = histogram_update(prior, &data)?.predictive();
            let grid = pair_grid(&fn_, f0, rule)?;
            Ok(grid
                .integrate(|x| {
                    let g = f0.eval(x);
                    g * g / fn_.eval(x)
                })?
                .value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let estimate = MonteCarloEstimate::from_values(&values);
    let bound = chi_sq_bound(prior, lambda, n);
    Ok(ChiSqReport {
        n,
        lambda,
        verdict: ChiSqVerdict::Established {
            within_bound: estimate.within_upper(bound, z),
            estimate,
            bound,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniform_draw(rng: &mut Stream) -> f64 {
        rng.random()
    }

    #[test]
    fn single_bin_is_exact() {
        let rule = QuadratureRule::default();
        let prior = RandomHistogramPrior::point(1).unwrap();
        let u = SupportedDensity::uniform();
        let r = chi_sq_criterion(&prior, &u, uniform_draw, 5, 4, 1, 3.0, &rule).unwrap();
        match r.verdict {
            ChiSqVerdict::Established { estimate, bound, within_bound } => {
                assert_eq!(bound, 1.0);
                assert!((estimate.estimate - 1.0).abs() < 1e-12);
                assert!(within_bound);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_bin_bound() {
        let prior = RandomHistogramPrior::point(2).unwrap();
        assert!((chi_sq_bound(&prior, 1.0, 3) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn heavy_bin_law_is_not_established() {
        let rule = QuadratureRule::default();
        let prior = RandomHistogramPrior::polynomial(1.5, 16).unwrap();
        let u = SupportedDensity::uniform();
        let r = chi_sq_criterion(&prior, &u, uniform_draw, 3, 4, 1, 3.0, &rule).unwrap();
        assert!(matches!(r.verdict, ChiSqVerdict::NotEstablished { .. }));
    }

    #[test]
    fn unbounded_truth_is_an_error() {
        let rule = QuadratureRule::default();
        let prior = RandomHistogramPrior::point(2).unwrap();
        let spike = SupportedDensity::on_unit(|x: f64| 0.5 / x.sqrt());
        let err = chi_sq_criterion(&prior, &spike, uniform_draw, 3, 4, 1, 3.0, &rule).unwrap_err();
        assert_eq!(err, Error::UnboundedTruth);
    }
}
