use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::log_sum_exp;
use crate::summability::{concave_log_tail, log_add, Verdict};

use super::{Aggregation, CoverReport};

/// Covering count `I_N(δ)` of the support `C_N` of the `N`-th component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CountFamily {
    /// `I_N = base^N` with `base = c/δ > 1`.
    Exponential { base: f64 },
    /// `I_N = count` for every `N`: a finite cover.
    Bounded { count: u64 },
}

/// Mixture weights `p_N`, `N ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightFamily {
    /// `p_N ∝ exp(−N² / scale)`.
    Gaussian { scale: f64 },
    /// `p_N = (1 − ρ) ρ^{N−1}`.
    Geometric { ratio: f64 },
    /// Explicit `p_1, …, p_L`.
    Finite { weights: Vec<f64> },
}

/// Terms of the Gaussian family beyond which the normalizer is complete in `f64`.
const GAUSSIAN_TERMS: usize = 64;

impl WeightFamily {
    fn validate(&self) -> Result<()> {
        match self {
            WeightFamily::Gaussian { scale } if !(*scale > 0.0) => {
                Err(Error::invalid("weights", "Gaussian scale must be positive"))
            }
            WeightFamily::Geometric { ratio } if !(*ratio > 0.0 && *ratio < 1.0) => {
                Err(Error::invalid("weights", "geometric ratio must lie in (0, 1)"))
            }
            WeightFamily::Finite { weights }
                if weights.is_empty()
                    || weights.iter().any(|w| !(*w >= 0.0))
                    || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 =>
            {
                Err(Error::invalid("weights", "finite weights must be nonnegative and sum to one"))
            }
            _ => Ok(()),
        }
    }

    /// `log P̄(N) = log Σ_{M≥N} p_M`.
    pub fn log_upper_tail(&self, n: f64) -> f64 {
        match self {
            WeightFamily::Gaussian { scale } => {
                let log_p = |m: f64| -m * m / scale;
                let log_z = log_sum_exp((1..=GAUSSIAN_TERMS).map(|m| log_p(m as f64)));
                // Σ_{M≥N} e^{−M²/s} ≤ e^{−N²/s} / (1 − e^{−(2N+1)/s})
                log_p(n) - (-(-(2.0 * n + 1.0) / scale).exp()).ln_1p() - log_z
            }
            WeightFamily::Geometric { ratio } => (n - 1.0) * ratio.ln(),
            WeightFamily::Finite { weights } => {
                let start = (n as usize).saturating_sub(1);
                let rest: f64 = weights.iter().skip(start).sum();
                rest.ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureTailCover {
    pub counts: CountFamily,
    pub weights: WeightFamily,
}

impl MixtureTailCover {
    pub fn new(counts: CountFamily, weights: WeightFamily) -> Result<Self> {
        weights.validate()?;
        match counts {
            CountFamily::Exponential { base } if !(base > 1.0) => {
                Err(Error::invalid("counts", "exponential base c/delta must exceed 1"))
            }
            CountFamily::Bounded { count: 0 } => Err(Error::invalid("counts", "need a positive count")),
            _ => Ok(Self { counts, weights }),
        }
    }

    /// `I_N`, saturating at `u64::MAX`.
    pub fn count(&self, n: u32) -> f64 {
        match self.counts {
            CountFamily::Exponential { base } => base.powi(n as i32),
            CountFamily::Bounded { count } => count as f64,
        }
    }

    /// `M_k = min{N : I_N ≥ k}`; `None` if no component reaches `k`.
    pub fn m_k(&self, k: u64) -> Option<u32> {
        match self.counts {
            CountFamily::Exponential { base } => {
                let guess = ((k as f64).ln() / base.ln()).ceil().max(1.0) as u32;
                // repair rounding at exact powers
                let mut n = guess.saturating_sub(1).max(1);
                while self.count(n) < k as f64 {
                    n += 1;
                }
                Some(n)
            }
            CountFamily::Bounded { count } => (k <= count).then_some(1),
        }
    }

    /// `log{(I_N − I_{N−1}) √P̄(N)}`: the cells first reached by component `N`.
    fn log_group_term(&self, n: f64) -> f64 {
        let log_new = match self.counts {
            CountFamily::Exponential { base } => {
                if n <= 1.0 {
                    base.ln()
                } else {
                    n * base.ln() + (-1.0 / base).ln_1p()
                }
            }
            CountFamily::Bounded { count } => {
                if n <= 1.0 {
                    (count as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
        log_new + 0.5 * self.weights.log_upper_tail(n)
    }
}

/// `Σ_k √P̄(M_k)` with terms grouped by `N`: `Σ_N (I_N − I_{N−1}) √P̄(N)`.
///
/// The groups for `N` with `I_N ≤ k_max` are summed directly; the rest go to
/// the analytic tail.
pub fn mixture_tail_sum(cover: &MixtureTailCover, k_max: u64) -> Result<CoverReport> {
    let n_max = match cover.counts {
        CountFamily::Exponential { .. } => {
            let mut n = 1;
            while cover.count(n + 1) <= k_max as f64 {
                n += 1;
            }
            n
        }
        CountFamily::Bounded { .. } => 1,
    };
    let last_weight = match &cover.weights {
        WeightFamily::Finite { weights } => Some(weights.len() as u32),
        _ => None,
    };
    let n_direct = last_weight.map_or(n_max, |l| n_max.min(l));
    let log_partial = log_sum_exp((1..=n_direct).map(|n| cover.log_group_term(n as f64)));
    let cells: f64 = (1..=n_direct)
        .map(|n| cover.count(n) - if n > 1 { cover.count(n - 1) } else { 0.0 })
        .sum();
    let params = serde_json::to_value(cover).expect("cover serializes");
    let mut notes = Vec::new();
    let finite_groups = matches!(cover.counts, CountFamily::Bounded { .. }) || last_weight.is_some_and(|l| l <= n_direct);
    let (log_tail_bound, verdict) = if finite_groups {
        notes.push("finitely many groups carry mass; the sum is exact".into());
        (
            Some(f64::NEG_INFINITY),
            Verdict::Summable {
                log_total_bound: log_partial,
            },
        )
    } else {
        let start = n_direct as u64 + 1;
        match (&cover.weights, cover.counts) {
            (WeightFamily::Finite { weights }, _) => {
                // finitely many further groups
                let rest = log_sum_exp((start as usize..=weights.len()).map(|n| cover.log_group_term(n as f64)));
                (
                    Some(rest),
                    Verdict::Summable {
                        log_total_bound: log_add(log_partial, rest),
                    },
                )
            }
            (WeightFamily::Geometric { ratio }, CountFamily::Exponential { base }) => {
                let slope = base.ln() + 0.5 * ratio.ln();
                notes.push(format!("N^-1 log Pbar(N) -> log {ratio} (finite)"));
                if slope < 0.0 {
                    let first = cover.log_group_term(start as f64);
                    let tail = first - (-slope.exp()).ln_1p();
                    (
                        Some(tail),
                        Verdict::Summable {
                            log_total_bound: log_add(log_partial, tail),
                        },
                    )
                } else {
                    (
                        None,
                        Verdict::Divergent {
                            witness: format!(
                                "group terms grow geometrically with ratio base * sqrt(rho) = {:.6} >= 1",
                                slope.exp()
                            ),
                        },
                    )
                }
            }
            (WeightFamily::Gaussian { .. }, _) => {
                notes.push("N^-1 log Pbar(N) -> -infinity".into());
                match concave_log_tail(|n| cover.log_group_term(n), start) {
                    Some(tail) => (
                        Some(tail),
                        Verdict::Summable {
                            log_total_bound: log_add(log_partial, tail),
                        },
                    ),
                    None => (
                        None,
                        Verdict::Inconclusive {
                            reason: "tail steepness not reached".into(),
                        },
                    ),
                }
            }
            _ => unreachable!("bounded counts handled above"),
        }
    };
    Ok(CoverReport {
        family: "mixture".into(),
        aggregation: Aggregation::Sum,
        log_partial,
        log_tail_bound,
        verdict,
        cell_count_evaluated: cells as u64,
        psi: None,
        params,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(weights: WeightFamily) -> MixtureTailCover {
        MixtureTailCover::new(CountFamily::Exponential { base: 10.0 }, weights).unwrap()
    }

    #[test]
    fn m_k_is_the_min_formula() {
        let c = cover(WeightFamily::Geometric { ratio: 0.5 });
        assert_eq!(c.m_k(1), Some(1));
        assert_eq!(c.m_k(10), Some(1));
        assert_eq!(c.m_k(11), Some(2));
        assert_eq!(c.m_k(100), Some(2));
        assert_eq!(c.m_k(101), Some(3));
    }

    #[test]
    fn grouped_partial_matches_per_cell_sum() {
        let c = cover(WeightFamily::Gaussian { scale: 1.0 });
        let direct: f64 = (1..=1000u64)
            .map(|k| c.weights.log_upper_tail(c.m_k(k).unwrap() as f64))
            .map(|l| (0.5 * l).exp())
            .sum();
        let r = mixture_tail_sum(&c, 1000).unwrap();
        assert!((r.log_partial.exp() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn verdicts() {
        assert!(mixture_tail_sum(&cover(WeightFamily::Gaussian { scale: 1.0 }), 1000)
            .unwrap()
            .verdict
            .is_summable());
        assert!(mixture_tail_sum(&cover(WeightFamily::Geometric { ratio: 0.5 }), 1000)
            .unwrap()
            .verdict
            .is_divergent());
        let bounded = MixtureTailCover::new(
            CountFamily::Bounded { count: 7 },
            WeightFamily::Geometric { ratio: 0.5 },
        )
        .unwrap();
        let r = mixture_tail_sum(&bounded, 1000).unwrap();
        assert!((r.log_total_bound().unwrap() - 7f64.ln()).abs() < 1e-12);
        let finite = cover(WeightFamily::Finite { weights: vec![0.5, 0.25, 0.25] });
        assert!(mixture_tail_sum(&finite, 10).unwrap().verdict.is_summable());
    }
}
