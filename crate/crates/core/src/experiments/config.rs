use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covering::{CountFamily, WeightFamily};
use crate::densities::QuadratureRule;
use crate::error::{Error, Result};
use crate::martingale::TransformKind;
use crate::posterior::{AtomSet, HellingerComplementSet, Metric};
use crate::priors::{DiscretePrior, LevelSchedule, MassSchedule, PolyaTreeParams, RandomHistogramPrior};

use super::truth::TruthSpec;

/// Version stamped into configs, CSV headers and JSON reports.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Consistency,
    Predictive,
    Martingale,
    Summability,
    ChiSqCriterion,
}

/// Law of the number of histogram bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum BinLawSpec {
    Point { m: usize },
    Geometric { ratio: f64 },
    Polynomial { exponent: f64 },
    Weights { weights: Vec<f64> },
}

fn default_depth() -> usize {
    crate::priors::DEFAULT_POLYA_DEPTH
}

fn default_delta_star() -> f64 {
    1.0
}

fn default_exact_levels() -> usize {
    8
}

fn default_m_max() -> usize {
    crate::priors::DEFAULT_MAX_BINS
}

fn default_gamma_exponent() -> f64 {
    1.25
}

fn default_truncation() -> usize {
    200
}

fn default_k_max() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Finitely many named densities; weights are normalized.
    Discrete { atoms: Vec<TruthSpec>, weights: Vec<f64> },
    /// Weight sequence only; used for summability.
    MassSchedule { schedule: MassSchedule },
    Histogram {
        bin_law: BinLawSpec,
        #[serde(default = "default_m_max")]
        m_max: usize,
    },
    Polya {
        levels: LevelSchedule,
        #[serde(default = "default_depth")]
        depth: usize,
        #[serde(default = "default_delta_star")]
        delta_star: f64,
        #[serde(default)]
        r: Option<f64>,
        #[serde(default = "default_exact_levels")]
        exact_levels: usize,
    },
    /// Gaussian coordinates `θ_j ~ N(0, σ_j²)` with `σ_j = sd_scale · j^{−sd_exponent}`.
    ExpFamily {
        delta: f64,
        sd_scale: f64,
        sd_exponent: f64,
        #[serde(default = "default_gamma_exponent")]
        gamma_exponent: f64,
        m: u32,
        #[serde(default = "default_truncation")]
        truncation: usize,
    },
    Mixture {
        counts: CountFamily,
        weights: WeightFamily,
        #[serde(default = "default_k_max")]
        k_max: u64,
    },
}

impl PriorSpec {
    pub fn family(&self) -> &'static str {
        match self {
            PriorSpec::Discrete { .. } => "discrete",
            PriorSpec::MassSchedule { .. } => "mass_schedule",
            PriorSpec::Histogram { .. } => "histogram",
            PriorSpec::Polya { .. } => "polya",
            PriorSpec::ExpFamily { .. } => "exp_family",
            PriorSpec::Mixture { .. } => "mixture",
        }
    }

    pub fn discrete(&self) -> Result<DiscretePrior<f64>> {
        let PriorSpec::Discrete { atoms, weights } = self else {
            return Err(Error::config("prior.family", format!("need a discrete prior, got {}", self.family())));
        };
        let dens = atoms.iter().map(TruthSpec::density).collect::<Result<Vec<_>>>()?;
        DiscretePrior::normalized(dens, weights.clone()).map_err(|e| Error::config("prior.weights", e.to_string()))
    }

    pub fn histogram(&self) -> Result<RandomHistogramPrior> {
        let PriorSpec::Histogram { bin_law, m_max } = self else {
            return Err(Error::config("prior.family", format!("need a histogram prior, got {}", self.family())));
        };
        let built = match bin_law {
            BinLawSpec::Point { m } => RandomHistogramPrior::point(*m),
            BinLawSpec::Geometric { ratio } => RandomHistogramPrior::geometric(*ratio, *m_max),
            BinLawSpec::Polynomial { exponent } => RandomHistogramPrior::polynomial(*exponent, *m_max),
            BinLawSpec::Weights { weights } => RandomHistogramPrior::from_weights(weights.clone()),
        };
        built.map_err(|e| Error::config("prior.bin_law", e.to_string()))
    }

    pub fn polya(&self) -> Result<PolyaTreeParams> {
        let PriorSpec::Polya { levels, depth, .. } = self else {
            return Err(Error::config("prior.family", format!("need a polya prior, got {}", self.family())));
        };
        PolyaTreeParams::from_schedule(*depth, levels).map_err(|e| Error::config("prior.levels", e.to_string()))
    }
}

/// The set `A` whose posterior mass is tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Whole,
    /// Atoms by index into the discrete prior.
    Atoms { indices: Vec<usize> },
    /// `{f : H(f, f0) > ε}` with `ε` from the config.
    Complement,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub stem: Option<String>,
}

fn one() -> usize {
    1
}

fn default_transform() -> TransformKind {
    TransformKind::SqrtMinusOne
}

fn default_z() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub truth: Option<TruthSpec>,
    pub prior: PriorSpec,
    /// Further priors reported alongside `prior` by the summability scenario.
    #[serde(default)]
    pub additional_priors: Vec<PriorSpec>,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub set: Option<SetSpec>,
    #[serde(default = "default_transform")]
    pub transform: TransformKind,
    /// Posterior draws per step for Monte-Carlo `Π^n(A)` under conjugate priors.
    #[serde(default)]
    pub posterior_draws: usize,
    /// Standard errors allowed above an analytic bound.
    #[serde(default = "default_z")]
    pub z: f64,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}; expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.n == 0 {
            return Err(Error::config("n", "need n >= 1"));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates", "need at least one replicate"));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::config("epsilon", "need finite epsilon > 0"));
            }
        }
        if !(self.z >= 0.0) {
            return Err(Error::config("z", "need z >= 0"));
        }
        if self.scenario != Scenario::Summability {
            let truth = self
                .truth
                .as_ref()
                .ok_or_else(|| Error::config("truth", "required for this scenario"))?;
            truth.validate()?;
        }
        match self.scenario {
            Scenario::Consistency if self.epsilon.is_none() => {
                return Err(Error::config("epsilon", "required for the consistency scenario"));
            }
            Scenario::Martingale => {
                self.prior.discrete()?;
                if matches!(self.set, Some(SetSpec::Complement)) && self.epsilon.is_none() {
                    return Err(Error::config("epsilon", "a complement set needs epsilon"));
                }
            }
            Scenario::ChiSqCriterion => {
                self.prior.histogram()?;
                if self.replicates < 2 {
                    return Err(Error::config("replicates", "need at least two replicates"));
                }
            }
            Scenario::Consistency | Scenario::Predictive => match &self.prior {
                PriorSpec::Discrete { .. } => {
                    self.prior.discrete()?;
                }
                PriorSpec::Histogram { .. } => {
                    self.prior.histogram()?;
                }
                PriorSpec::Polya { .. } => {
                    self.prior.polya()?;
                }
                other => {
                    return Err(Error::config(
                        "prior.family",
                        format!("{} has no sequential posterior; use discrete, histogram or polya", other.family()),
                    ))
                }
            },
            _ => {}
        }
        Ok(())
    }

    pub fn truth(&self) -> Result<&TruthSpec> {
        self.truth.as_ref().ok_or_else(|| Error::config("truth", "required for this scenario"))
    }

    /// Resolves the tracked set for a discrete prior: an explicit `set`, else the
    /// Hellinger complement when `epsilon` is given, else the whole space.
    pub fn resolve_set(&self, prior: &DiscretePrior<f64>, rule: &QuadratureRule<f64>) -> Result<AtomSet> {
        let spec = self.set.clone().unwrap_or(if self.epsilon.is_some() {
            SetSpec::Complement
        } else {
            SetSpec::Whole
        });
        match spec {
            SetSpec::Whole => Ok(AtomSet::all(prior.len())),
            SetSpec::Atoms { indices } => {
                AtomSet::from_indices(prior.len(), &indices).map_err(|e| Error::config("set.indices", e.to_string()))
            }
            SetSpec::Complement => {
                let eps = self.epsilon.ok_or_else(|| Error::config("epsilon", "a complement set needs epsilon"))?;
                let f0 = self.truth()?.density()?;
                HellingerComplementSet::new(f0, eps, Metric::Hellinger)?.resolve(prior, rule)
            }
        }
    }

    /// File stem for outputs.
    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| {
            serde_json::to_value(self.scenario)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_else(|| "run".into())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONSISTENCY: &str = r#"{
        "schema_version": 1,
        "scenario": "consistency",
        "truth": {"family": "uniform"},
        "prior": {"family": "discrete",
                  "atoms": [{"family": "uniform"}, {"family": "linear"}],
                  "weights": [0.5, 0.5]},
        "n": 10,
        "epsilon": 0.3,
        "seed": 7
    }"#;

    #[test]
    fn parse_serialize_parse_is_identity() {
        let a = ExperimentConfig::from_json(CONSISTENCY).unwrap();
        let b = ExperimentConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.transform, TransformKind::SqrtMinusOne);
        assert_eq!(a.stem(), "consistency");
    }

    #[test]
    fn validation_names_fields() {
        let bad = CONSISTENCY.replace("\"n\": 10", "\"n\": 0");
        match ExperimentConfig::from_json(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "n"),
            other => panic!("{other:?}"),
        }
        let bad = CONSISTENCY.replace("\"seed\": 7", "\"replicates\": 0, \"seed\": 7");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config { field, .. }) if field == "replicates"));
        let bad = CONSISTENCY.replace("\"seed\": 7", "\"bogus\": 1, \"seed\": 7");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = CONSISTENCY.replace(",\n        \"seed\": 7", "");
        assert_ne!(bad, CONSISTENCY);
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config { .. })));
        let bad = CONSISTENCY.replace("\"discrete\"", "\"dirichlet_process\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }
}
