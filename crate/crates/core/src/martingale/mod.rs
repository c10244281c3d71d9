//! Martingale objects behind posterior consistency: the likelihood-ratio
//! identity, `T_d` transforms, `M_N`, variance conditions, `Λ_{nj}` and
//! Cesàro diagnostics.

mod chisq;
mod ensemble;
mod trace;

pub use chisq::{chi_sq_bound, chi_sq_criterion, ChiSqReport, ChiSqVerdict};
pub use ensemble::{
    cesaro_diagnostics, m_over_n, tail_slope, variance_condition, CesaroReport, VarianceReport,
    MIN_REPLICATES,
};
pub use trace::{
    build_trace, conditional_mean_check, expected_lambda_step, lambda_trace, LambdaTrace,
    MartingaleTrace, TraceStep, IDENTITY_TOL,
};

use serde::{Deserialize, Serialize};

use crate::densities::{chi_squared, hellinger_h, kl_divergence, Divergence, QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};

/// Transform `T_d` applied to likelihood-ratio increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// `√y − 1`, paired with `h`.
    SqrtMinusOne,
    /// `log y`, paired with `D`.
    Log,
    /// `1 − 1/y`, paired with `χ²`.
    OneMinusInverse,
}

impl TransformKind {
    pub const ALL: [TransformKind; 3] = [
        TransformKind::SqrtMinusOne,
        TransformKind::Log,
        TransformKind::OneMinusInverse,
    ];

    /// `T(y)` extended to `y = 0` as a limit (`−1`, `−∞`, `−∞`).
    pub fn apply(self, y: f64) -> f64 {
        match self {
            TransformKind::SqrtMinusOne => y.sqrt() - 1.0,
            TransformKind::Log => y.ln(),
            TransformKind::OneMinusInverse => 1.0 - 1.0 / y,
        }
    }

    /// The paired distance `d(f, f0)` with `E_{f0} T(f / f0) = −d(f, f0)`.
    pub fn distance(
        self,
        f: &SupportedDensity<f64>,
        f0: &SupportedDensity<f64>,
        rule: &QuadratureRule<f64>,
    ) -> Result<Divergence<f64>> {
        Ok(match self {
            TransformKind::SqrtMinusOne => Divergence::Finite(hellinger_h(f, f0, rule)?),
            TransformKind::Log => kl_divergence(f0, f, rule)?,
            TransformKind::OneMinusInverse => chi_squared(f0, f, rule)?,
        })
    }
}

/// `T(y)` for `y > 0`.
pub fn t_transform(y: f64, kind: TransformKind) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::invalid("y", format!("transform needs finite y > 0, got {y}")));
    }
    Ok(kind.apply(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_examples() {
        for kind in TransformKind::ALL {
            assert_eq!(t_transform(1.0, kind).unwrap(), 0.0);
            assert!(t_transform(0.0, kind).is_err());
            assert!(t_transform(-1.0, kind).is_err());
        }
        assert!((t_transform(std::f64::consts::E, TransformKind::Log).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(t_transform(4.0, TransformKind::SqrtMinusOne).unwrap(), 1.0);
        assert_eq!(t_transform(2.0, TransformKind::OneMinusInverse).unwrap(), 0.5);
    }
}
