use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{
    expfam_cover_sum, mixture_tail_sum, polya_cover_sum, Aggregation, CoverReport, GaussianCoordCover,
    MixtureTailCover, PolyaThetaCover, PowerSequence, DEFAULT_TOL,
};
use crate::densities::{kl_divergence, QuadratureRule};
use crate::error::{Error, Result};
use crate::martingale::{
    build_trace, chi_sq_criterion, m_over_n, variance_condition, ChiSqReport, MartingaleTrace, TransformKind,
    VarianceReport,
};
use crate::priors::{MassSchedule, SqrtMassReport};
use crate::rng::{stream, StreamPurpose};
use crate::stats::{fit_line, MonteCarloEstimate};
use crate::summability::Verdict;

use super::config::{ExperimentConfig, PriorSpec, Scenario, SCHEMA_VERSION};
use super::truth::generate_data;

fn mass_report(family: &str, schedule: &MassSchedule, r: SqrtMassReport) -> CoverReport {
    let mut notes = Vec::new();
    if r.verdict.is_divergent() {
        notes.push("sum_N sqrt(Pi(P_N)) = infinity: the prior weights alone violate the summability condition".into());
    }
    CoverReport {
        family: family.into(),
        aggregation: Aggregation::Sum,
        log_partial: r.value.ln(),
        log_tail_bound: r.tail_bound.map(f64::ln),
        verdict: r.verdict,
        cell_count_evaluated: r.terms as u64,
        psi: None,
        params: serde_json::to_value(schedule).expect("schedule serializes"),
        notes,
    }
}

/// Summability report for one prior family.
pub fn summability_report(prior: &PriorSpec) -> Result<CoverReport> {
    match prior {
        PriorSpec::Discrete { weights, .. } => {
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::config("prior.weights", "need a positive total"));
            }
            let schedule = MassSchedule::Finite {
                weights: weights.iter().map(|w| w / total).collect(),
            };
            let r = schedule.sqrt_mass_sum();
            Ok(mass_report("discrete", &schedule, r))
        }
        PriorSpec::MassSchedule { schedule } => {
            schedule
                .validate()
                .map_err(|e| Error::config("prior.schedule", e.to_string()))?;
            Ok(mass_report("mass_schedule", schedule, schedule.sqrt_mass_sum()))
        }
        PriorSpec::Polya {
            levels,
            delta_star,
            r,
            exact_levels,
            ..
        } => {
            let cover = PolyaThetaCover::new(levels.clone(), *delta_star, *r, *exact_levels)
                .map_err(|e| Error::config("prior", e.to_string()))?;
            polya_cover_sum(&cover, DEFAULT_TOL)
        }
        PriorSpec::ExpFamily {
            delta,
            sd_scale,
            sd_exponent,
            gamma_exponent,
            m,
            truncation,
        } => {
            let build = || -> Result<GaussianCoordCover> {
                GaussianCoordCover::new(
                    *delta,
                    PowerSequence::normalized(*gamma_exponent)?,
                    PowerSequence::new(*sd_scale, *sd_exponent)?,
                    *m,
                    *truncation,
                )
            };
            let cover = build().map_err(|e| Error::config("prior", e.to_string()))?;
            expfam_cover_sum(&cover, DEFAULT_TOL)
        }
        PriorSpec::Mixture { counts, weights, k_max } => {
            let cover = MixtureTailCover::new(*counts, weights.clone()).map_err(|e| Error::config("prior", e.to_string()))?;
            mixture_tail_sum(&cover, *k_max)
        }
        PriorSpec::Histogram { .. } => Err(Error::config(
            "prior.family",
            "no Hellinger cover is implemented for the histogram prior",
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityOutput {
    pub schema_version: u32,
    pub reports: Vec<CoverReport>,
}

/// Reports for `prior` followed by every entry of `additional_priors`.
pub fn run_summability(config: &ExperimentConfig) -> Result<SummabilityOutput> {
    let reports = std::iter::once(&config.prior)
        .chain(&config.additional_priors)
        .map(summability_report)
        .collect::<Result<Vec<_>>>()?;
    Ok(SummabilityOutput {
        schema_version: SCHEMA_VERSION,
        reports,
    })
}

/// Least-squares slope of `log L_n` against `n`, pooled over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub estimate: MonteCarloEstimate,
    /// `−D(f0 ‖ f_A)` when `A` is a single atom: the almost-sure rate of `log L_n / n`.
    pub predicted: Option<f64>,
    pub mean_r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub n: usize,
    pub replicates: usize,
    pub transform: TransformKind,
    pub set: String,
    pub log_l0: f64,
    pub log_l_slope: SlopeSummary,
    pub m_over_n: MonteCarloEstimate,
    /// `|log I_N| / N` across replicates.
    pub terminal_log_i_rate: MonteCarloEstimate,
    pub variance: Option<VarianceReport>,
    /// Replicate-mean of `(1/N) Σ_{n≤N} d(f_{n−1,A}, f0)`, one entry per `N`.
    pub cesaro_distance: Vec<f64>,
    /// Replicate-mean of `(1/N) Σ_{n≤N} H(f_{n−1}, f0)`.
    pub cesaro_hellinger: Vec<f64>,
    /// Replicate-mean of `(1/N) Σ_{n≤N} D(f_{n−1}, f0)`.
    pub cesaro_kl: Vec<f64>,
    pub max_identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleOutput {
    pub summary: MartingaleSummary,
    pub traces: Vec<MartingaleTrace>,
}

fn running_mean(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .enumerate()
        .map(|(i, v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect()
}

fn replicate_mean(traces: &[MartingaleTrace], pick: impl Fn(&MartingaleTrace) -> Vec<f64>) -> Vec<f64> {
    let series: Vec<Vec<f64>> = traces.iter().map(pick).collect();
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| series.iter().map(|s| s[i]).sum::<f64>() / series.len() as f64)
        .collect()
}

/// Replicate `r` uses data stream `(seed, r)`; replicates run in parallel and
/// are collected in index order.
pub fn run_martingale(config: &ExperimentConfig) -> Result<MartingaleOutput> {
    if config.scenario != Scenario::Martingale {
        return Err(Error::config("scenario", "expected martingale"));
    }
    config.validate()?;
    let rule = QuadratureRule::default();
    let prior = config.prior.discrete()?;
    let truth = config.truth()?;
    let f0 = truth.density()?;
    let set = config.resolve_set(&prior, &rule)?;
    if set.count() == 0 {
        return Err(Error::config("set", "the tracked set has no atoms"));
    }
    let traces = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(config.seed, r as u64, StreamPurpose::Data);
            let data = generate_data(truth, config.n, &mut rng)?;
            let mut t = build_trace(&prior, &set, &f0, &data, config.transform, &rule)?;
            t.seed = Some(config.seed);
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;

    let fits: Vec<_> = traces
        .iter()
        .map(|t| {
            let x: Vec<f64> = t.steps.iter().map(|s| s.n as f64).collect();
            let y: Vec<f64> = t.steps.iter().map(|s| s.log_l).collect();
            fit_line(&x, &y)
        })
        .collect();
    let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    let predicted = if set.count() == 1 {
        let idx = set.members().iter().position(|m| *m).expect("one member");
        Some(-kl_divergence(&f0, &prior.atoms()[idx], &rule)?.to_f64())
    } else {
        None
    };
    let rates: Vec<f64> = traces
        .iter()
        .map(|t| t.steps.last().map_or(0.0, |s| s.log_i.abs() / s.n as f64))
        .collect();
    let variance = match variance_condition(&traces, None) {
        Ok(v) => Some(v),
        Err(Error::TooFewReplicates { .. }) => None,
        Err(e) => return Err(e),
    };
    let summary = MartingaleSummary {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        n: config.n,
        replicates: config.replicates,
        transform: config.transform,
        set: traces[0].set_description.clone(),
        log_l0: traces[0].log_l0,
        log_l_slope: SlopeSummary {
            estimate: MonteCarloEstimate::from_values(&slopes),
            predicted,
            mean_r_squared: fits.iter().map(|f| f.r_squared).sum::<f64>() / fits.len() as f64,
        },
        m_over_n: m_over_n(&traces)?,
        terminal_log_i_rate: MonteCarloEstimate::from_values(&rates),
        variance,
        cesaro_distance: replicate_mean(&traces, |t| running_mean(t.steps.iter().map(|s| s.distance))),
        cesaro_hellinger: replicate_mean(&traces, |t| running_mean(t.steps.iter().map(|s| s.hellinger_pred))),
        cesaro_kl: replicate_mean(&traces, |t| running_mean(t.steps.iter().map(|s| s.kl_pred))),
        max_identity_gap: traces.iter().map(|t| t.max_identity_gap).fold(0.0, f64::max),
    };
    Ok(MartingaleOutput { summary, traces })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSqOutput {
    pub schema_version: u32,
    pub seed: u64,
    pub replicates: usize,
    pub report: ChiSqReport,
}

/// Monte-Carlo `E ∫ f0² / f_n` against its analytic bound.
pub fn run_chi_sq(config: &ExperimentConfig) -> Result<ChiSqOutput> {
    if config.scenario != Scenario::ChiSqCriterion {
        return Err(Error::config("scenario", "expected chi-sq-criterion"));
    }
    config.validate()?;
    let prior = config.prior.histogram()?;
    let truth = config.truth()?;
    let f0 = truth.density()?;
    let sampler = truth.sampler()?;
    let report = chi_sq_criterion(
        &prior,
        &f0,
        |rng| sampler.draw(rng),
        config.n,
        config.replicates,
        config.seed,
        config.z,
        &QuadratureRule::default(),
    )?;
    Ok(ChiSqOutput {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        replicates: config.replicates,
        report,
    })
}

/// Verdict label used in flat tables.
pub fn verdict_label(v: &Verdict) -> &'static str {
    match v {
        Verdict::Summable { .. } => "summable",
        Verdict::Divergent { .. } => "divergent",
        Verdict::Inconclusive { .. } => "inconclusive",
    }
}
