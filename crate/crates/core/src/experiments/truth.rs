use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::densities::SupportedDensity;
use crate::error::{Error, Result};

/// Knots of the tabulated inverse distribution function.
pub const INVERSE_CDF_KNOTS: usize = 10_000;

/// Named analytic truth densities on `[0, 1]`, each with a finite `sup` and an
/// exact or tabulated inverse distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TruthSpec {
    Uniform,
    /// `2x`.
    Linear,
    /// `x^{α−1} (1 − x)^{β−1} / B(α, β)` with integer `α, β ≥ 1`.
    BetaPoly { alpha: u32, beta: u32 },
    /// Piecewise constant on equal-width bins; heights are normalized.
    Piecewise { heights: Vec<f64> },
}

impl TruthSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TruthSpec::BetaPoly { alpha, beta } if *alpha == 0 || *beta == 0 => {
                Err(Error::config("truth", "beta_poly needs alpha >= 1 and beta >= 1"))
            }
            TruthSpec::Piecewise { heights } => {
                SupportedDensity::<f64>::step(heights).map_err(|e| Error::config("truth.heights", e.to_string()))?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn density(&self) -> Result<SupportedDensity<f64>> {
        self.validate()?;
        Ok(match self {
            TruthSpec::Uniform => SupportedDensity::uniform(),
            TruthSpec::Linear => SupportedDensity::linear(),
            TruthSpec::BetaPoly { alpha: 1, beta: 1 } => SupportedDensity::uniform(),
            TruthSpec::BetaPoly { alpha, beta: 1 } => SupportedDensity::power(alpha - 1),
            TruthSpec::BetaPoly { alpha, beta } => {
                let (a, b) = (f64::from(*alpha), f64::from(*beta));
                let log_norm = -ln_beta(a, b);
                let eval = move |x: f64| {
                    if x <= 0.0 || x >= 1.0 {
                        // boundary values: zero unless the exponent vanishes there
                        let at0 = if a == 1.0 { (log_norm).exp() } else { 0.0 };
                        let at1 = if b == 1.0 { (log_norm).exp() } else { 0.0 };
                        return if x <= 0.0 { at0 } else { at1 };
                    }
                    (log_norm + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()).exp()
                };
                let mode = (a - 1.0) / (a + b - 2.0);
                let sup = eval(mode);
                SupportedDensity::on_unit(eval)
                    .with_sup(sup)
                    .with_label(format!("beta({alpha},{beta})"))
            }
            TruthSpec::Piecewise { heights } => SupportedDensity::step(heights)?,
        })
    }

    /// `λ = sup f0`.
    pub fn sup(&self) -> Result<f64> {
        self.density()?.sup().ok_or(Error::UnboundedTruth)
    }

    /// Sampler built once; draws by inversion.
    pub fn sampler(&self) -> Result<TruthSampler> {
        self.validate()?;
        Ok(match self {
            TruthSpec::Uniform | TruthSpec::BetaPoly { alpha: 1, beta: 1 } => TruthSampler::Power { exponent: 1.0 },
            TruthSpec::Linear => TruthSampler::Power { exponent: 2.0 },
            TruthSpec::BetaPoly { alpha, beta: 1 } => TruthSampler::Power {
                exponent: f64::from(*alpha),
            },
            TruthSpec::BetaPoly { alpha: 1, beta } => TruthSampler::ReflectedPower {
                exponent: f64::from(*beta),
            },
            TruthSpec::BetaPoly { alpha, beta } => {
                let (a, b) = (f64::from(*alpha), f64::from(*beta));
                let knots = INVERSE_CDF_KNOTS;
                let x: Vec<f64> = (0..=knots).map(|i| i as f64 / knots as f64).collect();
                let cdf: Vec<f64> = x.iter().map(|&t| beta_reg(a, b, t)).collect();
                TruthSampler::Tabulated { x, cdf }
            }
            TruthSpec::Piecewise { heights } => {
                let total: f64 = heights.iter().sum();
                let mut acc = 0.0;
                let mut cdf = vec![0.0];
                for h in heights {
                    acc += h / total;
                    cdf.push(acc);
                }
                *cdf.last_mut().expect("nonempty") = 1.0;
                let m = heights.len();
                TruthSampler::Tabulated {
                    x: (0..=m).map(|i| i as f64 / m as f64).collect(),
                    cdf,
                }
            }
        })
    }
}

impl fmt::Display for TruthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthSpec::Uniform => write!(f, "uniform"),
            TruthSpec::Linear => write!(f, "2x"),
            TruthSpec::BetaPoly { alpha, beta } => write!(f, "beta({alpha},{beta})"),
            TruthSpec::Piecewise { heights } => {
                let hs: Vec<String> = heights.iter().map(|h| h.to_string()).collect();
                write!(f, "step({})", hs.join(","))
            }
        }
    }
}

/// Parses `uniform`, `2x` (or `linear`), `beta(a,b)` and `step(h1,h2,...)`.
impl FromStr for TruthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let args = |prefix: &str| -> Option<&str> { s.strip_prefix(prefix)?.strip_suffix(')') };
        let spec = match s {
            "uniform" => TruthSpec::Uniform,
            "2x" | "linear" => TruthSpec::Linear,
            _ => {
                if let Some(inner) = args("beta(") {
                    let parts: Vec<u32> = inner
                        .split(',')
                        .map(|p| p.trim().parse::<u32>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::config("density", format!("`{s}`: {e}")))?;
                    match parts[..] {
                        [alpha, beta] => TruthSpec::BetaPoly { alpha, beta },
                        _ => return Err(Error::config("density", format!("`{s}`: beta needs two integers"))),
                    }
                } else if let Some(inner) = args("step(") {
                    let heights = inner
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::config("density", format!("`{s}`: {e}")))?;
                    TruthSpec::Piecewise { heights }
                } else {
                    return Err(Error::config(
                        "density",
                        format!("unknown density `{s}`; expected uniform, 2x, beta(a,b) or step(h1,...)"),
                    ));
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Inverse-CDF sampler for a [`TruthSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum TruthSampler {
    /// `F(x) = x^p`, so `X = U^{1/p}`.
    Power { exponent: f64 },
    /// `F(x) = 1 − (1 − x)^p`.
    ReflectedPower { exponent: f64 },
    /// Piecewise-linear `F` through `(x_i, cdf_i)`; exact for piecewise-constant densities.
    Tabulated { x: Vec<f64>, cdf: Vec<f64> },
}

impl TruthSampler {
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            TruthSampler::Power { exponent } => u.powf(1.0 / exponent),
            TruthSampler::ReflectedPower { exponent } => 1.0 - (1.0 - u).powf(1.0 / exponent),
            TruthSampler::Tabulated { x, cdf } => {
                let i = cdf.partition_point(|c| *c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                if c1 <= c0 {
                    return x[i - 1];
                }
                x[i - 1] + (x[i] - x[i - 1]) * (u - c0) / (c1 - c0)
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_cdf(rng.random())
    }
}

/// `n` i.i.d. draws from `f0`, deterministic for a given stream.
pub fn generate_data<R: Rng + ?Sized>(truth: &TruthSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let sampler = truth.sampler()?;
    let f0 = truth.density()?;
    (0..n)
        .map(|_| {
            let x = sampler.draw(rng);
            let v = f0.eval(x);
            if !(v > 0.0) {
                return Err(Error::invalid("data", format!("f0 vanishes at the drawn point {x}")));
            }
            Ok(x)
        })
        .collect()
}
