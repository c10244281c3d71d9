use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::densities::SupportedDensity;
use crate::error::{Error, Result};
use crate::summability::zeta;

/// Analytic description of the bin law beyond the enumeration cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BinLawTail {
    /// The law has finite support.
    Finite,
    /// `π(m) ∝ r^{m−1}`.
    Geometric { ratio: f64 },
    /// `π(m) ∝ m^{−p}`.
    Polynomial { exponent: f64 },
}

/// Whether `Σ_m m π(m)` is finite for the untruncated law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FirstMoment {
    /// Finite; `value` is `Σ_m m π(m)` on the truncated law.
    Finite { value: f64 },
    Infinite,
}

pub const DEFAULT_MAX_BINS: usize = 64;

/// Random histogram on `[0, 1]`: `m` equal bins with `m ~ π`, bin
/// probabilities `p_m ~ Dirichlet(1, …, 1)` and heights `w_km = m p_km`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomHistogramPrior {
    /// `bin_law[m - 1] = π(m)` for `m = 1..=M_max`.
    bin_law: Vec<f64>,
    tail: BinLawTail,
}

impl RandomHistogramPrior {
    /// Law with finite support given by `weights[m - 1] = π(m)`; weights are normalized.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::with_tail(weights, BinLawTail::Finite)
    }

    /// `π(m) = 1` at a single `m`.
    pub fn point(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "need at least one bin"));
        }
        let mut w = vec![0.0; m];
        w[m - 1] = 1.0;
        Self::from_weights(w)
    }

    /// `π(m) = (1 − r) r^{m−1}` truncated at `m_max`, tail mass folded into the last atom.
    pub fn geometric(ratio: f64, m_max: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid("ratio", "need 0 < r < 1"));
        }
        let w = (1..=m_max)
            .map(|m| (1.0 - ratio) * ratio.powi(m as i32 - 1))
            .collect();
        Self::folded(w, BinLawTail::Geometric { ratio })
    }

    /// `π(m) = m^{−p} / ζ(p)` truncated at `m_max`, tail folded into the last atom.
    pub fn polynomial(exponent: f64, m_max: usize) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::invalid("exponent", "need p > 1"));
        }
        let z = zeta(exponent);
        let w = (1..=m_max).map(|m| (m as f64).powf(-exponent) / z).collect();
        Self::folded(w, BinLawTail::Polynomial { exponent })
    }

    fn folded(mut w: Vec<f64>, tail: BinLawTail) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("m_max", "need at least one bin"));
        }
        let head: f64 = w.iter().sum();
        *w.last_mut().expect("nonempty") += (1.0 - head).max(0.0);
        Self::with_tail(w, tail)
    }

    fn with_tail(weights: Vec<f64>, tail: BinLawTail) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("bin_law", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("bin_law", "all weights are zero"));
        }
        Ok(Self {
            bin_law: weights.into_iter().map(|w| w / total).collect(),
            tail,
        })
    }

    pub fn bin_law(&self) -> &[f64] {
        &self.bin_law
    }

    pub fn max_bins(&self) -> usize {
        self.bin_law.len()
    }

    pub fn tail(&self) -> BinLawTail {
        self.tail
    }

    /// `π(m)`, zero beyond the cutoff.
    pub fn prob(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.bin_law.get(m - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn first_moment(&self) -> FirstMoment {
        let infinite = match self.tail {
            BinLawTail::Polynomial { exponent } => exponent <= 2.0,
            _ => false,
        };
        if infinite {
            FirstMoment::Infinite
        } else {
            FirstMoment::Finite {
                value: self
                    .bin_law
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i + 1) as f64 * p)
                    .sum(),
            }
        }
    }

    pub fn sample_bins<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.bin_law.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        self.bin_law.len()
    }

    /// Step density with heights `m p_k` for bin probabilities `p`.
    pub fn histogram_density(p: &[f64]) -> Result<SupportedDensity<f64>> {
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { integral: total });
        }
        let m = p.len() as f64;
        let heights: Vec<f64> = p.iter().map(|pk| m * pk).collect();
        Ok(SupportedDensity::step(&heights)?.with_label(format!("histogram{}", p.len())))
    }
}

/// Draw from `Dirichlet(1 + n_1, …, 1 + n_m)` via normalized Gamma variates.
pub(crate) fn dirichlet_shifted<R: Rng + ?Sized>(extra: &[u64], rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = extra
        .iter()
        .map(|&n| {
            if n == 0 {
                Exp1.sample(rng)
            } else {
                Gamma::new(1.0 + n as f64, 1.0)
                    .expect("shape is positive")
                    .sample(rng)
            }
        })
        .collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|x| x / total).collect()
}
