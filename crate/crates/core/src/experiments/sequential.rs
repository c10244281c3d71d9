use serde::{Deserialize, Serialize};

use crate::densities::{hellinger_distance, kl_divergence, QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};
use crate::martingale::{TransformKind, IDENTITY_TOL};
use crate::posterior::{AtomSet, DiscretePosterior, HistogramPosterior, SequentialModel};
use crate::priors::{DensityPrior, PolyaTreeParams};
use crate::rng::{stream, Stream, StreamPurpose};
use crate::scalar::log_sum_exp;

use super::config::{ExperimentConfig, PriorSpec, Scenario};
use super::truth::generate_data;

/// State after `n` observations. Row `0` is the prior.
///
/// `log_L`/`post_mass_A` are absent when no set is tracked; `cesaro_*` average
/// `H(f_i, f0)` and `D(f_i, f0)` over `i < n` and are absent at `n = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub x: Option<f64>,
    #[serde(rename = "log_L")]
    pub log_l: Option<f64>,
    #[serde(rename = "log_I")]
    pub log_i: f64,
    #[serde(rename = "post_mass_A")]
    pub post_mass_a: Option<f64>,
    #[serde(rename = "hellinger_H")]
    pub hellinger: f64,
    #[serde(rename = "kl_D")]
    pub kl: f64,
    #[serde(rename = "cesaro_H")]
    pub cesaro_h: Option<f64>,
    #[serde(rename = "cesaro_D")]
    pub cesaro_d: Option<f64>,
    #[serde(rename = "M")]
    pub m: f64,
}

enum Model {
    Discrete {
        post: DiscretePosterior<f64>,
        set: Option<AtomSet>,
    },
    Histogram(HistogramPosterior),
    Polya(PolyaTreeParams),
}

impl Model {
    fn as_sequential(&mut self) -> &mut dyn SequentialModel {
        match self {
            Model::Discrete { post, .. } => post,
            Model::Histogram(h) => h,
            Model::Polya(p) => p,
        }
    }

    fn predictive(&mut self) -> Result<SupportedDensity<f64>> {
        self.as_sequential().predictive()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SupportedDensity<f64>> {
        match self {
            Model::Discrete { .. } => unreachable!("discrete masses are exact"),
            Model::Histogram(h) => h.sample_density(rng),
            Model::Polya(p) => p.sample_density(rng),
        }
    }
}

struct Snapshot {
    pred: SupportedDensity<f64>,
    hellinger: f64,
    kl: f64,
    distance: f64,
}

fn snapshot(
    pred: SupportedDensity<f64>,
    f0: &SupportedDensity<f64>,
    kind: TransformKind,
    rule: &QuadratureRule<f64>,
) -> Result<Snapshot> {
    let hellinger = hellinger_distance(&pred, f0, rule)?;
    let kl = kl_divergence(f0, &pred, rule)?.to_f64();
    let distance = match kind {
        TransformKind::SqrtMinusOne => 0.5 * hellinger * hellinger,
        TransformKind::Log => kl,
        TransformKind::OneMinusInverse => kind.distance(&pred, f0, rule)?.to_f64(),
    };
    Ok(Snapshot {
        pred,
        hellinger,
        kl,
        distance,
    })
}

/// Runs the consistency (or predictive) scenario on freshly generated data.
pub fn run_consistency(config: &ExperimentConfig) -> Result<Vec<TraceRow>> {
    if !matches!(config.scenario, Scenario::Consistency | Scenario::Predictive) {
        return Err(Error::config("scenario", "expected consistency or predictive"));
    }
    config.validate()?;
    let mut rng = stream(config.seed, 0, StreamPurpose::Data);
    let data = generate_data(config.truth()?, config.n, &mut rng)?;
    trace_for_data(config, &data)
}

/// Sequential trace along given data.
///
/// For discrete priors `log L_n` and `log I_n` are carried by the one-step
/// recursion and checked against direct summation at every step. For
/// conjugate priors `Π^n(A)` is a Monte-Carlo estimate from `posterior_draws`
/// posterior draws, and is omitted when that count is zero.
pub fn trace_for_data(config: &ExperimentConfig, data: &[f64]) -> Result<Vec<TraceRow>> {
    let rule = QuadratureRule::default();
    let f0 = config.truth()?.density()?;
    let kind = config.transform;
    let mut model = match &config.prior {
        PriorSpec::Discrete { .. } => {
            let prior = config.prior.discrete()?;
            let set = match config.epsilon.is_some() || config.set.is_some() {
                true => Some(config.resolve_set(&prior, &rule)?),
                false => None,
            };
            Model::Discrete {
                post: DiscretePosterior::new(prior),
                set,
            }
        }
        PriorSpec::Histogram { .. } => Model::Histogram(HistogramPosterior::new(config.prior.histogram()?)),
        PriorSpec::Polya { .. } => Model::Polya(config.prior.polya()?),
        other => {
            return Err(Error::config(
                "prior.family",
                format!("{} has no sequential posterior", other.family()),
            ))
        }
    };
    let mut post_rng = stream(config.seed, 0, StreamPurpose::Posterior);
    let mass_a = |model: &Model, rng: &mut Stream, log_i: f64| -> Result<(Option<f64>, Option<f64>)> {
        match model {
            Model::Discrete { post, set: Some(set) } => {
                if set.count() == 0 {
                    return Ok((Some(f64::NEG_INFINITY), Some(0.0)));
                }
                let p = post.posterior_mass(set);
                Ok((Some(p.ln() + log_i), Some(p)))
            }
            Model::Discrete { set: None, .. } => Ok((None, None)),
            _ => {
                let (Some(eps), draws) = (config.epsilon, config.posterior_draws) else {
                    return Ok((None, None));
                };
                if draws == 0 {
                    return Ok((None, None));
                }
                let mut hits = 0usize;
                for _ in 0..draws {
                    let f = model.draw(rng)?;
                    if hellinger_distance(&f, &f0, &rule)? > eps {
                        hits += 1;
                    }
                }
                let p = hits as f64 / draws as f64;
                Ok((Some(p.ln() + log_i), Some(p)))
            }
        }
    };

    let mut snap = snapshot(model.predictive()?, &f0, kind, &rule)?;
    let (log_l0, mass0) = mass_a(&model, &mut post_rng, 0.0)?;
    let mut rows = vec![TraceRow {
        n: 0,
        x: None,
        log_l: log_l0,
        log_i: 0.0,
        post_mass_a: mass0,
        hellinger: snap.hellinger,
        kl: snap.kl,
        cesaro_h: None,
        cesaro_d: None,
        m: 0.0,
    }];
    let (mut log_i, mut log_l_rec) = (0.0, log_l0);
    let (mut sum_h, mut sum_d, mut m, mut log_f0_sum) = (0.0, 0.0, 0.0, 0.0);
    for (i, &x) in data.iter().enumerate() {
        let n = i + 1;
        let f0x = f0.eval(x);
        if !(f0x > 0.0) {
            return Err(Error::invalid("data", format!("f0 vanishes at {x}")));
        }
        let ratio = snap.pred.eval(x) / f0x;
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::NonPositiveRatio { step: n, ratio });
        }
        if let Model::Discrete { post, set: Some(set) } = &model {
            if set.count() > 0 {
                let ra = post.restricted_predictive(set)?.eval(x) / f0x;
                log_l_rec = log_l_rec.map(|l| l + ra.ln());
            }
        }
        log_i += ratio.ln();
        m += kind.apply(ratio) + snap.distance;
        sum_h += snap.hellinger;
        sum_d += snap.kl;
        log_f0_sum += f0x.ln();
        model.as_sequential().observe(x)?;
        let (log_l, post_mass_a) = mass_a(&model, &mut post_rng, log_i)?;
        if let Model::Discrete { post, set } = &model {
            let direct_i = log_sum_exp(post.log_weights().iter().copied()) - log_f0_sum;
            let gap_i = (direct_i - log_i).abs();
            if !(gap_i <= IDENTITY_TOL) {
                return Err(Error::IdentityViolation { step: n, gap: gap_i });
            }
            if let (Some(set), Some(rec)) = (set, log_l_rec) {
                if set.count() > 0 {
                    let direct_l = post.log_mass_unnormalized(set) - log_f0_sum;
                    let gap = (direct_l - rec).abs();
                    if !(gap <= IDENTITY_TOL) {
                        return Err(Error::IdentityViolation { step: n, gap });
                    }
                }
            }
        }
        snap = snapshot(model.predictive()?, &f0, kind, &rule)?;
        rows.push(TraceRow {
            n,
            x: Some(x),
            log_l,
            log_i,
            post_mass_a,
            hellinger: snap.hellinger,
            kl: snap.kl,
            cesaro_h: Some(sum_h / n as f64),
            cesaro_d: Some(sum_d / n as f64),
            m,
        });
    }
    Ok(rows)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn close_opt(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b, tol),
        (None, None) => true,
        _ => false,
    }
}

/// Checks a loaded trace: each row must follow from the previous row and its
/// data point. The row recurrences for the Cesàro means and (for `√y − 1` and
/// `log y`) for `M_n` are checked directly; the remaining columns are replayed
/// through the posterior named in `config`. Returns the largest relative gap.
pub fn replay_check(config: &ExperimentConfig, rows: &[TraceRow]) -> Result<f64> {
    const TOL: f64 = 1e-9;
    let fail = |n: usize, what: &str| Error::invalid("trace", format!("row {n}: {what} does not follow"));
    if rows.first().map(|r| r.n) != Some(0) {
        return Err(Error::invalid("trace", "first row must be n = 0"));
    }
    for w in rows.windows(2) {
        let (prev, row) = (&w[0], &w[1]);
        let n = row.n;
        if n != prev.n + 1 || row.x.is_none() {
            return Err(fail(n, "n or x"));
        }
        let nf = n as f64;
        let expect_h = (prev.cesaro_h.unwrap_or(0.0) * (nf - 1.0) + prev.hellinger) / nf;
        let expect_d = (prev.cesaro_d.unwrap_or(0.0) * (nf - 1.0) + prev.kl) / nf;
        if !close_opt(row.cesaro_h, Some(expect_h), TOL) || !close_opt(row.cesaro_d, Some(expect_d), TOL) {
            return Err(fail(n, "Cesàro mean"));
        }
        let ratio = (row.log_i - prev.log_i).exp();
        let d_prev = match config.transform {
            TransformKind::SqrtMinusOne => Some(0.5 * prev.hellinger * prev.hellinger),
            TransformKind::Log => Some(prev.kl),
            TransformKind::OneMinusInverse => None,
        };
        if let Some(d) = d_prev {
            if !close(row.m, prev.m + config.transform.apply(ratio) + d, TOL) {
                return Err(fail(n, "M_n"));
            }
        }
    }
    let data: Vec<f64> = rows.iter().skip(1).filter_map(|r| r.x).collect();
    let fresh = trace_for_data(config, &data)?;
    let mut worst: f64 = 0.0;
    for (a, b) in rows.iter().zip(&fresh) {
        let pairs = [
            (Some(a.log_i), Some(b.log_i)),
            (a.log_l, b.log_l),
            (a.post_mass_a, b.post_mass_a),
            (Some(a.hellinger), Some(b.hellinger)),
            (Some(a.kl), Some(b.kl)),
            (Some(a.m), Some(b.m)),
        ];
        for (u, v) in pairs {
            if !close_opt(u, v, TOL) {
                return Err(fail(a.n, "replayed value"));
            }
            if let (Some(u), Some(v)) = (u, v) {
                if u.is_finite() && v.is_finite() {
                    worst = worst.max((u - v).abs() / (1.0 + u.abs().max(v.abs())));
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(atoms: &str, weights: &str, eps: f64, n: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"schema_version": 1, "scenario": "consistency", "truth": {{"family": "uniform"}},
                "prior": {{"family": "discrete", "atoms": {atoms}, "weights": {weights}}},
                "n": {n}, "epsilon": {eps}, "seed": 11}}"#
        ))
        .unwrap()
    }

    #[test]
    fn single_true_atom_has_empty_complement() {
        let rows = run_consistency(&config(r#"[{"family": "uniform"}]"#, "[1]", 0.3, 20)).unwrap();
        assert!(rows.iter().all(|r| r.post_mass_a == Some(0.0)));
        assert!(rows.iter().all(|r| r.log_i.abs() < 1e-12));
    }

    #[test]
    fn huge_epsilon_gives_zero_mass() {
        let atoms = r#"[{"family": "uniform"}, {"family": "linear"}]"#;
        let rows = run_consistency(&config(atoms, "[0.5, 0.5]", 1.5, 20)).unwrap();
        assert!(rows.iter().all(|r| r.post_mass_a == Some(0.0)));
    }

    #[test]
    fn rows_replay() {
        let atoms = r#"[{"family": "uniform"}, {"family": "linear"}, {"family": "beta_poly", "alpha": 1, "beta": 2}]"#;
        let cfg = config(atoms, "[0.5, 0.25, 0.25]", 0.3, 40);
        let rows = run_consistency(&cfg).unwrap();
        assert_eq!(rows.len(), 41);
        assert!(replay_check(&cfg, &rows).unwrap() < 1e-12);
        let mut bad = rows.clone();
        bad[10].m += 1e-3;
        assert!(replay_check(&cfg, &bad).is_err());
    }
}
