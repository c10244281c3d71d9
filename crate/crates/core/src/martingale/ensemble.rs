use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{fit_line, mean_variance, LineFit, MonteCarloEstimate};
use crate::summability::Verdict;

use super::{MartingaleTrace, TransformKind};

/// Replicates needed for a cross-replicate variance estimate.
pub const MIN_REPLICATES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub kind: TransformKind,
    pub replicates: usize,
    /// `Σ_{m≤n} m^{−2} Var_m`, one entry per step.
    pub partial_sums: Vec<f64>,
    /// Analytic cap on the partial sum at the last step, when available.
    pub analytic_bound: Option<f64>,
    pub verdict: Verdict,
}

impl VarianceReport {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    pub fn within_bound(&self) -> Option<bool> {
        self.analytic_bound.map(|b| self.total() <= b)
    }
}

/// Partial sums `Σ n^{−2} Var{T(L_n / L_{n−1})}` with the variance taken across
/// replicate traces at each `n`.
///
/// `increment_bound = b` asserts `|T| ≤ b`, giving `Var ≤ b²`; `√y − 1` needs
/// no bound since `E(L_n / L_{n−1}) = 1` forces `Var ≤ 1`.
pub fn variance_condition(traces: &[MartingaleTrace], increment_bound: Option<f64>) -> Result<VarianceReport> {
    if traces.len() < MIN_REPLICATES {
        return Err(Error::TooFewReplicates {
            required: MIN_REPLICATES,
            got: traces.len(),
        });
    }
    let kind = traces[0].kind;
    if traces.iter().any(|t| t.kind != kind) {
        return Err(Error::invalid("traces", "all traces must share a transform"));
    }
    let len = traces.iter().map(MartingaleTrace::len).min().unwrap_or(0);
    let mut acc = 0.0;
    let partial_sums = (0..len)
        .map(|i| {
            let column: Vec<f64> = traces.iter().map(|t| t.steps[i].t_increment).collect();
            let (_, var) = mean_variance(&column);
            acc += var / ((i + 1) as f64).powi(2);
            acc
        })
        .collect();
    let var_cap = match (kind, increment_bound) {
        (TransformKind::SqrtMinusOne, _) => Some(1.0),
        (_, Some(b)) => Some(b * b),
        _ => None,
    };
    let analytic_bound =
        var_cap.map(|c| c * (1..=len).map(|n| (n as f64).powi(-2)).sum::<f64>());
    let verdict = match var_cap {
        Some(c) => Verdict::Summable {
            log_total_bound: (c * PI * PI / 6.0).ln(),
        },
        None => Verdict::Inconclusive {
            reason: "no analytic variance bound for this transform; partial sums only".into(),
        },
    };
    Ok(VarianceReport {
        kind,
        replicates: traces.len(),
        partial_sums,
        analytic_bound,
        verdict,
    })
}

/// Monte-Carlo mean of `M_N / N` across replicates at the last common step.
pub fn m_over_n(traces: &[MartingaleTrace]) -> Result<MonteCarloEstimate> {
    let len = traces.iter().map(MartingaleTrace::len).min().unwrap_or(0);
    if len == 0 {
        return Err(Error::invalid("traces", "need nonempty traces"));
    }
    let values: Vec<f64> = traces.iter().map(|t| t.steps[len - 1].m / len as f64).collect();
    Ok(MonteCarloEstimate::from_values(&values))
}

/// Running Cesàro means along a whole-space trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroReport {
    /// `(1/N) Σ_{n≤N} H(f_{n−1}, f0)`.
    pub mean_hellinger: Vec<f64>,
    /// `(1/N) Σ_{n≤N} D(f_{n−1}, f0)`.
    pub mean_kl: Vec<f64>,
    /// `(1/N) Σ_{n≤N} T(I_n / I_{n−1})`.
    pub mean_t: Vec<f64>,
    /// `I_N^{1/(2N)} − 1`.
    pub normaliser_root_gap: Vec<f64>,
}

pub fn cesaro_diagnostics(trace: &MartingaleTrace) -> Result<CesaroReport> {
    if !trace.whole_space {
        return Err(Error::invalid("trace", "Cesàro diagnostics need A = whole space"));
    }
    let running = |values: &mut dyn Iterator<Item = f64>| {
        let mut acc = 0.0;
        values
            .enumerate()
            .map(|(i, v)| {
                acc += v;
                acc / (i + 1) as f64
            })
            .collect::<Vec<f64>>()
    };
    let steps = &trace.steps;
    Ok(CesaroReport {
        mean_hellinger: running(&mut steps.iter().map(|s| s.hellinger_pred)),
        mean_kl: running(&mut steps.iter().map(|s| s.kl_pred)),
        mean_t: running(&mut steps.iter().map(|s| s.t_increment)),
        normaliser_root_gap: steps
            .iter()
            .map(|s| (s.log_i / (2.0 * s.n as f64)).exp() - 1.0)
            .collect(),
    })
}

/// Least-squares trend over the last half of a sequence.
pub fn tail_slope(values: &[f64]) -> LineFit {
    let start = values.len() / 2;
    let x: Vec<f64> = (start..values.len()).map(|i| i as f64).collect();
    fit_line(&x, &values[start..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::TraceStep;

    fn flat_trace(kind: TransformKind, n: usize) -> MartingaleTrace {
        MartingaleTrace {
            kind,
            set_description: "all".into(),
            whole_space: true,
            seed: None,
            log_l0: 0.0,
            log_i0: 0.0,
            max_identity_gap: 0.0,
            steps: (1..=n)
                .map(|n| TraceStep {
                    n,
                    x: 0.5,
                    log_l: 0.0,
                    log_i: 0.0,
                    log_ratio: 0.0,
                    t_increment: 0.0,
                    distance: 0.0,
                    hellinger_pred: 0.0,
                    kl_pred: 0.0,
                    post_mass_a: 1.0,
                    m: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn too_few_replicates() {
        let traces = vec![flat_trace(TransformKind::Log, 3); 29];
        assert_eq!(
            variance_condition(&traces, None).unwrap_err(),
            Error::TooFewReplicates { required: 30, got: 29 }
        );
    }

    #[test]
    fn degenerate_truth_gives_zero() {
        let traces = vec![flat_trace(TransformKind::SqrtMinusOne, 10); 30];
        let r = variance_condition(&traces, None).unwrap();
        assert_eq!(r.total(), 0.0);
        assert!(r.analytic_bound.unwrap() < PI * PI / 6.0);
        assert_eq!(r.within_bound(), Some(true));
        let c = cesaro_diagnostics(&traces[0]).unwrap();
        assert!(c.mean_hellinger.iter().chain(&c.normaliser_root_gap).all(|v| *v == 0.0));
        let log = variance_condition(&vec![flat_trace(TransformKind::Log, 4); 30], None).unwrap();
        assert!(matches!(log.verdict, Verdict::Inconclusive { .. }));
    }
}
