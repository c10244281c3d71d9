//! Hellinger covers and the summability of `Σ_j √Π(A_j)` over their cells.
//!
//! Totals are carried on the log scale: certified bounds for Pólya covers
//! routinely exceed the `f64` range on the linear scale.

mod cells;
mod gaussian;
mod mixture;
mod polya;

pub use cells::{
    expfam_pair_spot_check, gaussian_cells, polya_cells, polya_pair_spot_check, Cell, CellList, SpotCheck,
};
pub use gaussian::{
    expfam_cover_sum, gaussian_cell_mass, gaussian_sqrt_sum, xi_inequality, GaussianCoordCover,
    GaussianSqrtSum,
};
pub use mixture::{mixture_tail_sum, CountFamily, MixtureTailCover, WeightFamily};
pub use polya::{
    beta_cell_mass, fit_psi, gamma_ratio_check, level_bound, level_bound_excess, level_sum_exact, polya_cover_sum,
    LevelSum, PolyaThetaCover, ANALYTIC_PSI, CALIBRATION_A, CALIBRATION_DELTA,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summability::{log_add, zeta, Verdict};

/// Terms smaller than this count as negligible during truncation.
pub const DEFAULT_TOL: f64 = 1e-14;
/// Consecutive negligible terms required before an analytic tail is attached.
pub const NEGLIGIBLE_RUN: usize = 100;

/// `scale · j^{−exponent}` for `j ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSequence {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerSequence {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !exponent.is_finite() {
            return Err(Error::invalid("sequence", "need finite scale > 0 and finite exponent"));
        }
        Ok(Self { scale, exponent })
    }

    /// `j^{−exponent} / ζ(exponent)`, summing to one.
    pub fn normalized(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::invalid("exponent", "a normalized power sequence needs exponent > 1"));
        }
        Self::new(1.0 / zeta(exponent), exponent)
    }

    pub fn at(&self, j: f64) -> f64 {
        self.scale * j.powf(-self.exponent)
    }
}

/// How per-index terms combine into the total `Σ_j √Π(A_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// The total is the sum of the terms.
    Sum,
    /// The total is a product of per-coordinate (or per-level) factors.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub family: String,
    pub aggregation: Aggregation,
    /// Log of the evaluated partial total.
    pub log_partial: f64,
    /// Log of the analytic tail bound: of the tail sum for [`Aggregation::Sum`],
    /// of the bound on the tail's summed log-factors for [`Aggregation::Product`].
    pub log_tail_bound: Option<f64>,
    pub verdict: Verdict,
    pub cell_count_evaluated: u64,
    /// Fitted `ψ` of the Pólya per-level bound.
    pub psi: Option<f64>,
    pub params: serde_json::Value,
    pub notes: Vec<String>,
}

impl CoverReport {
    /// Certified `log` of the full total when partial and tail are both finite.
    pub fn log_total_bound(&self) -> Option<f64> {
        let tail = self.log_tail_bound?;
        let total = match self.aggregation {
            Aggregation::Sum => log_add(self.log_partial, tail),
            Aggregation::Product => self.log_partial + tail.exp(),
        };
        total.is_finite().then_some(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_sequence_sums_to_one() {
        let s = PowerSequence::normalized(2.0).unwrap();
        let partial: f64 = (1..=100_000).map(|j| s.at(j as f64)).sum();
        assert!((partial - 1.0).abs() < 1e-4);
        assert!(PowerSequence::normalized(1.0).is_err());
    }

    #[test]
    fn totals_combine_by_aggregation() {
        let mut r = CoverReport {
            family: "t".into(),
            aggregation: Aggregation::Sum,
            log_partial: 0.0,
            log_tail_bound: Some(0.0),
            verdict: Verdict::Summable { log_total_bound: 2f64.ln() },
            cell_count_evaluated: 1,
            psi: None,
            params: serde_json::Value::Null,
            notes: vec![],
        };
        assert!((r.log_total_bound().unwrap() - 2f64.ln()).abs() < 1e-15);
        r.aggregation = Aggregation::Product;
        assert!((r.log_total_bound().unwrap() - 1.0).abs() < 1e-15);
        r.log_tail_bound = None;
        assert_eq!(r.log_total_bound(), None);
    }
}
