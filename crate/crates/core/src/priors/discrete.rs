use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densities::SupportedDensity;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::summability::{power_tail_bound, zeta, Verdict};

/// Countable prior putting mass `Π_k` on density `f_k`; only finitely many
/// atoms are held, zero-weight atoms are dropped at construction.
#[derive(Debug, Clone)]
pub struct DiscretePrior<T: Real = f64> {
    atoms: Vec<SupportedDensity<T>>,
    weights: Vec<T>,
}

impl<T: Real> DiscretePrior<T> {
    /// Weights must be nonnegative and sum to one within `1e-12` (scaled for
    /// the scalar precision).
    pub fn new(atoms: Vec<SupportedDensity<T>>, weights: Vec<T>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::invalid("weights", "one weight per atom"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::invalid("weights", "must be finite and nonnegative"));
        }
        let total = weights.iter().fold(T::zero(), |a, w| a + *w);
        let tol = 1e-12_f64.max(8.0 * T::epsilon_f64() * weights.len() as f64);
        if (total.as_f64() - 1.0).abs() > tol {
            return Err(Error::invalid("weights", format!("sum to {} instead of 1", total.as_f64())));
        }
        let (atoms, weights): (Vec<_>, Vec<_>) = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > T::zero())
            .unzip();
        if atoms.is_empty() {
            return Err(Error::invalid("weights", "no atom has positive weight"));
        }
        if atoms.iter().any(|a| a.support() != atoms[0].support()) {
            return Err(Error::invalid("atoms", "atoms need a common support"));
        }
        Ok(Self { atoms, weights })
    }

    /// Normalizes arbitrary positive weights.
    pub fn normalized(atoms: Vec<SupportedDensity<T>>, raw: Vec<T>) -> Result<Self> {
        let total = raw.iter().fold(T::zero(), |a, w| a + *w);
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::invalid("weights", "need a positive finite total"));
        }
        Self::new(atoms, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(atoms: Vec<SupportedDensity<T>>) -> Result<Self> {
        let n = T::lit(atoms.len() as f64);
        let raw = vec![T::one() / n; atoms.len()];
        Self::normalized(atoms, raw)
    }

    pub fn atoms(&self) -> &[SupportedDensity<T>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Draws an atom index with probability `Π_k`.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w.as_f64();
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    pub fn mass_schedule(&self) -> MassSchedule {
        MassSchedule::Finite {
            weights: self.weights.iter().map(|w| w.as_f64()).collect(),
        }
    }

    /// `Σ_k √Π_k` over the held atoms.
    pub fn sqrt_mass_sum(&self) -> SqrtMassReport {
        self.mass_schedule().sqrt_mass_sum()
    }
}

/// Weight sequence `Π_1, Π_2, …` with a declared analytic tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MassSchedule {
    /// Finitely many weights.
    Finite { weights: Vec<f64> },
    /// `Π_k = (1 − r) r^{k−1}`.
    Geometric { ratio: f64 },
    /// `Π_k = k^{−p} / ζ(p)`, `p > 1`.
    Polynomial { exponent: f64 },
    /// An enumerated prefix with no known continuation.
    Tabulated { weights: Vec<f64> },
}

/// Terms summed explicitly before the analytic tail takes over.
pub const SQRT_MASS_TERMS: usize = 1000;

/// Partial sum, tail bound and verdict for `Σ_k √Π_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtMassReport {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: Option<f64>,
    pub verdict: Verdict,
}

impl MassSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            MassSchedule::Geometric { ratio } if !(*ratio > 0.0 && *ratio < 1.0) => {
                Err(Error::invalid("ratio", "need 0 < r < 1"))
            }
            MassSchedule::Polynomial { exponent } if !(*exponent > 1.0) => {
                Err(Error::invalid("exponent", "need p > 1 for a proper prior"))
            }
            MassSchedule::Finite { weights: w } | MassSchedule::Tabulated { weights: w }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) =>
            {
                Err(Error::invalid("weights", "must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }

    /// `Π_k` for `k ≥ 1`.
    pub fn mass(&self, k: usize) -> f64 {
        assert!(k >= 1);
        match self {
            MassSchedule::Finite { weights: w } | MassSchedule::Tabulated { weights: w } => w.get(k - 1).copied().unwrap_or(0.0),
            MassSchedule::Geometric { ratio } => (1.0 - ratio) * ratio.powi(k as i32 - 1),
            MassSchedule::Polynomial { exponent } => (k as f64).powf(-exponent) / zeta(*exponent),
        }
    }

    pub fn sqrt_mass_sum(&self) -> SqrtMassReport {
        if let Err(e) = self.validate() {
            return SqrtMassReport {
                value: f64::NAN,
                terms: 0,
                tail_bound: None,
                verdict: Verdict::Inconclusive { reason: e.to_string() },
            };
        }
        let terms = match self {
            MassSchedule::Finite { weights: w } | MassSchedule::Tabulated { weights: w } => w.len(),
            _ => SQRT_MASS_TERMS,
        };
        let value: f64 = (1..=terms).map(|k| self.mass(k).sqrt()).sum();
        let k = terms as f64;
        let (tail_bound, verdict) = match self {
            MassSchedule::Finite { .. } => (
                Some(0.0),
                Verdict::Summable {
                    log_total_bound: value.ln(),
                },
            ),
            MassSchedule::Tabulated { .. } => (
                None,
                Verdict::Inconclusive {
                    reason: "no analytic tail family declared for the weights".into(),
                },
            ),
            MassSchedule::Geometric { ratio } => {
                let q = ratio.sqrt();
                let tail = (1.0 - ratio).sqrt() * q.powf(k) / (1.0 - q);
                (
                    Some(tail),
                    Verdict::Summable {
                        log_total_bound: (value + tail).ln(),
                    },
                )
            }
            MassSchedule::Polynomial { exponent } => {
                let half = exponent / 2.0;
                let norm = zeta(*exponent).sqrt();
                if half > 1.0 {
                    let tail = power_tail_bound(k, half) / norm;
                    (
                        Some(tail),
                        Verdict::Summable {
                            log_total_bound: (value + tail).ln(),
                        },
                    )
                } else {
                    (
                        None,
                        Verdict::Divergent {
                            witness: format!(
                                "sqrt(Pi_k) = k^-{half} / {norm:.6} >= (1/{norm:.6}) k^-1, a harmonic minorant"
                            ),
                        },
                    )
                }
            }
        };
        SqrtMassReport {
            value,
            terms,
            tail_bound,
            verdict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_drops_zero_weights_and_checks_sum() {
        let atoms = vec![
            SupportedDensity::<f64>::uniform(),
            SupportedDensity::linear(),
            SupportedDensity::power(2),
        ];
        let p = DiscretePrior::new(atoms.clone(), vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(p.len(), 2);
        assert!(DiscretePrior::new(atoms.clone(), vec![0.5, 0.2, 0.2]).is_err());
        assert!(DiscretePrior::new(atoms, vec![0.5, -0.2, 0.7]).is_err());
    }

    #[test]
    fn finite_sqrt_mass_sum() {
        let r = MassSchedule::Finite { weights: vec![1.0 / 3.0; 3] }.sqrt_mass_sum();
        assert!((r.value - 3.0 * (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!(r.verdict.is_summable());
    }

    #[test]
    fn geometric_sqrt_mass_sum_matches_closed_form() {
        let r = MassSchedule::Geometric { ratio: 0.5 }.sqrt_mass_sum();
        let exact = 1.0 / (2f64.sqrt() - 1.0);
        assert!((r.value + r.tail_bound.unwrap() - exact).abs() < 1e-12);
        assert!((r.verdict.total_bound().unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_weights_diverge() {
        let r = MassSchedule::Polynomial { exponent: 2.0 }.sqrt_mass_sum();
        assert!(r.verdict.is_divergent());
        let r = MassSchedule::Polynomial { exponent: 3.0 }.sqrt_mass_sum();
        assert!(r.verdict.is_summable());
    }

    #[test]
    fn unknown_tail_is_inconclusive() {
        let r = MassSchedule::Tabulated { weights: vec![0.5, 0.25] }.sqrt_mass_sum();
        assert!(matches!(r.verdict, Verdict::Inconclusive { .. }));
        let r = MassSchedule::Geometric { ratio: 1.5 }.sqrt_mass_sum();
        assert!(matches!(r.verdict, Verdict::Inconclusive { .. }));
    }
}
