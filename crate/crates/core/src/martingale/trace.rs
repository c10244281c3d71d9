use serde::{Deserialize, Serialize};

use crate::densities::{hellinger_distance, hellinger_h, kl_divergence, pair_grid, QuadratureRule, SupportedDensity};
use crate::error::{Error, Result};
use crate::posterior::{AtomSet, DiscretePosterior};
use crate::priors::DiscretePrior;
use crate::scalar::log_sum_exp;

use super::TransformKind;

/// Largest accepted gap, in log space, between the recursive and direct `L_n`.
pub const IDENTITY_TOL: f64 = 1e-10;

/// One observation's worth of martingale bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: usize,
    pub x: f64,
    /// `log L_n`, computed directly from `R_n` over `A`.
    pub log_l: f64,
    /// `log I_n`.
    pub log_i: f64,
    /// `log(L_n / L_{n−1}) = log f_{n−1,A}(X_n) − log f0(X_n)`.
    pub log_ratio: f64,
    /// `T(L_n / L_{n−1})`.
    pub t_increment: f64,
    /// `d(f_{n−1,A}, f0)` for the transform's paired distance.
    pub distance: f64,
    /// `H(f_{n−1}, f0)` for the unrestricted predictive.
    pub hellinger_pred: f64,
    /// `D(f_{n−1}, f0) = ∫ f0 log(f0 / f_{n−1})`.
    pub kl_pred: f64,
    /// `Π^n(A) = L_n / I_n`.
    pub post_mass_a: f64,
    /// `M_n = Σ_{m≤n} (T_m + d_{m−1})`.
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTrace {
    pub kind: TransformKind,
    pub set_description: String,
    pub whole_space: bool,
    pub seed: Option<u64>,
    /// `log L_0 = log Π(A)`.
    pub log_l0: f64,
    pub log_i0: f64,
    /// Largest gap between the recursive and direct `log L_n`.
    pub max_identity_gap: f64,
    pub steps: Vec<TraceStep>,
}

impl MartingaleTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_m(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.m)
    }
}

/// Direct evaluation of `log ∫_A R_n dΠ` from accumulated log-likelihoods.
struct DirectLikelihood {
    log_prior: Vec<f64>,
    cum: Vec<f64>,
    cum0: f64,
}

impl DirectLikelihood {
    fn new(prior: &DiscretePrior<f64>) -> Self {
        Self {
            log_prior: prior.weights().iter().map(|w| w.ln()).collect(),
            cum: vec![0.0; prior.len()],
            cum0: 0.0,
        }
    }

    fn push(&mut self, prior: &DiscretePrior<f64>, x: f64, f0x: f64) {
        for (c, f) in self.cum.iter_mut().zip(prior.atoms()) {
            *c += f.eval(x).ln();
        }
        self.cum0 += f0x.ln();
    }

    fn log_mass(&self, set: &AtomSet) -> f64 {
        log_sum_exp(
            self.log_prior
                .iter()
                .zip(&self.cum)
                .zip(set.members())
                .filter(|(_, m)| **m)
                .map(|((p, c), _)| p + c),
        ) - self.cum0
    }
}

fn check_inputs(prior: &DiscretePrior<f64>, set: &AtomSet) -> Result<()> {
    if set.len() != prior.len() {
        return Err(Error::invalid("set", "membership mask length differs from atom count"));
    }
    Ok(())
}

fn truth_at(f0: &SupportedDensity<f64>, x: f64) -> Result<f64> {
    let v = f0.eval(x);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid("data", format!("f0 must be positive and finite at {x}")));
    }
    Ok(v)
}

/// Builds the trace of `L_n`, `I_n`, `T` increments and `M_n` along `data`.
///
/// `L_n` is carried both by the recursion `L_n = L_{n−1} f_{n−1,A}(X_n) / f0(X_n)`
/// and by direct summation; a gap above [`IDENTITY_TOL`] is an error.
pub fn build_trace(
    prior: &DiscretePrior<f64>,
    set: &AtomSet,
    f0: &SupportedDensity<f64>,
    data: &[f64],
    kind: TransformKind,
    rule: &QuadratureRule<f64>,
) -> Result<MartingaleTrace> {
    check_inputs(prior, set)?;
    let whole = AtomSet::all(prior.len());
    let whole_space = set.is_whole();
    let mut direct = DirectLikelihood::new(prior);
    let log_l0 = direct.log_mass(set);
    if log_l0 == f64::NEG_INFINITY {
        return Err(Error::EmptyRestriction);
    }
    let log_i0 = direct.log_mass(&whole);
    let mut post = DiscretePosterior::new(prior.clone());
    let mut log_l_rec = log_l0;
    let mut m = 0.0;
    let mut max_gap: f64 = 0.0;
    let mut steps = Vec::with_capacity(data.len());
    for (i, &x) in data.iter().enumerate() {
        let n = i + 1;
        let f0x = truth_at(f0, x)?;
        let fa = post.restricted_predictive(set)?;
        let (distance, hellinger_pred, kl_pred) = if whole_space {
            let h = hellinger_h(&fa, f0, rule)?;
            let kl = kl_divergence(f0, &fa, rule)?.to_f64();
            let d = match kind {
                TransformKind::SqrtMinusOne => h,
                TransformKind::Log => kl,
                TransformKind::OneMinusInverse => kind.distance(&fa, f0, rule)?.to_f64(),
            };
            (d, (2.0 * h).sqrt(), kl)
        } else {
            let pred = post.predictive();
            (
                kind.distance(&fa, f0, rule)?.to_f64(),
                hellinger_distance(&pred, f0, rule)?,
                kl_divergence(f0, &pred, rule)?.to_f64(),
            )
        };
        let ratio = fa.eval(x) / f0x;
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::NonPositiveRatio { step: n, ratio });
        }
        let t_increment = kind.apply(ratio);
        log_l_rec += ratio.ln();
        post.observe(x)?;
        direct.push(prior, x, f0x);
        let log_l = direct.log_mass(set);
        let log_i = direct.log_mass(&whole);
        let gap = (log_l_rec - log_l).abs();
        if !(gap <= IDENTITY_TOL) {
            return Err(Error::IdentityViolation { step: n, gap });
        }
        max_gap = max_gap.max(gap);
        m += t_increment + distance;
        steps.push(TraceStep {
            n,
            x,
            log_l,
            log_i,
            log_ratio: ratio.ln(),
            t_increment,
            distance,
            hellinger_pred,
            kl_pred,
            post_mass_a: (log_l - log_i).exp(),
            m,
        });
    }
    Ok(MartingaleTrace {
        kind,
        set_description: describe(set),
        whole_space,
        seed: None,
        log_l0,
        log_i0,
        max_identity_gap: max_gap,
        steps,
    })
}

fn describe(set: &AtomSet) -> String {
    if set.is_whole() {
        return "all".to_string();
    }
    let idx: Vec<String> = set
        .members()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(i, _)| i.to_string())
        .collect();
    format!("atoms[{}]", idx.join(","))
}

/// `log Λ_{nj}` for `n = 0..=N`, with `log L_n` over `A_j` alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTrace {
    pub log_lambda: Vec<f64>,
    pub log_l: Vec<f64>,
}

impl LambdaTrace {
    pub fn lambda(&self, n: usize) -> f64 {
        self.log_lambda[n].exp()
    }
}

/// `Λ_{0j} = √Π(A_j)`, `Λ_{n+1,j} = Λ_{nj} √(f_{nA_j}(X_{n+1}) / f0(X_{n+1}))`,
/// cross-checked against `Λ_{nj}² = L_n` restricted to `A_j`.
pub fn lambda_trace(
    prior: &DiscretePrior<f64>,
    set: &AtomSet,
    f0: &SupportedDensity<f64>,
    data: &[f64],
) -> Result<LambdaTrace> {
    check_inputs(prior, set)?;
    let mut direct = DirectLikelihood::new(prior);
    let log_l0 = direct.log_mass(set);
    if log_l0 == f64::NEG_INFINITY {
        return Err(Error::EmptyRestriction);
    }
    let mut post = DiscretePosterior::new(prior.clone());
    let mut log_lambda = vec![0.5 * log_l0];
    let mut log_l = vec![log_l0];
    for (i, &x) in data.iter().enumerate() {
        let f0x = truth_at(f0, x)?;
        let ratio = post.restricted_predictive(set)?.eval(x) / f0x;
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::NonPositiveRatio { step: i + 1, ratio });
        }
        let next = log_lambda[i] + 0.5 * ratio.ln();
        post.observe(x)?;
        direct.push(prior, x, f0x);
        let l = direct.log_mass(set);
        let gap = (2.0 * next - l).abs();
        if !(gap <= IDENTITY_TOL) {
            return Err(Error::IdentityViolation { step: i + 1, gap });
        }
        log_lambda.push(next);
        log_l.push(l);
    }
    Ok(LambdaTrace { log_lambda, log_l })
}

/// `E(Λ_{n+1,j} | F_n) / Λ_{nj} = 1 − h(f_{nA_j}, f0)`.
pub fn expected_lambda_step(
    post: &DiscretePosterior<f64>,
    set: &AtomSet,
    f0: &SupportedDensity<f64>,
    rule: &QuadratureRule<f64>,
) -> Result<f64> {
    let fa = post.restricted_predictive(set)?;
    Ok(1.0 - hellinger_h(&fa, f0, rule)?)
}

/// Returns `(E{T(f_{nA}(X) / f0(X)) | F_n}, −d(f_{nA}, f0))`: the left side by
/// quadrature of `T(f_nA / f0) f0`, the right side from the paired distance.
pub fn conditional_mean_check(
    post: &DiscretePosterior<f64>,
    set: &AtomSet,
    f0: &SupportedDensity<f64>,
    kind: TransformKind,
    rule: &QuadratureRule<f64>,
) -> Result<(f64, f64)> {
    let fa = post.restricted_predictive(set)?;
    let grid = pair_grid(&fa, f0, rule)?;
    let mut minus_infinity = false;
    let integral = grid.integrate(|x| {
        let (f, g) = (fa.eval(x), f0.eval(x));
        if g <= 0.0 {
            return 0.0;
        }
        let v = match kind {
            TransformKind::SqrtMinusOne => (f * g).sqrt() - g,
            TransformKind::Log => g * (f.ln() - g.ln()),
            TransformKind::OneMinusInverse => g - g * g / f,
        };
        if v == f64::NEG_INFINITY {
            minus_infinity = true;
            0.0
        } else {
            v
        }
    })?;
    let expected = if minus_infinity || (integral.endpoint_blowup && kind != TransformKind::SqrtMinusOne) {
        f64::NEG_INFINITY
    } else {
        integral.value
    };
    let formula = -kind.distance(&fa, f0, rule)?.to_f64();
    Ok((expected, formula))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms() -> DiscretePrior<f64> {
        DiscretePrior::new(
            vec![SupportedDensity::uniform(), SupportedDensity::linear()],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn whole_space_starts_at_one() {
        let rule = QuadratureRule::default();
        let t = build_trace(
            &two_atoms(),
            &AtomSet::all(2),
            &SupportedDensity::uniform(),
            &[],
            TransformKind::SqrtMinusOne,
            &rule,
        )
        .unwrap();
        assert_eq!(t.log_l0, 0.0);
        assert_eq!(t.log_i0, 0.0);
        assert!(t.is_empty());
    }

    #[test]
    fn singleton_hand_computation() {
        let rule = QuadratureRule::default();
        let set = AtomSet::from_indices(2, &[1]).unwrap();
        let t = build_trace(
            &two_atoms(),
            &set,
            &SupportedDensity::uniform(),
            &[0.8],
            TransformKind::SqrtMinusOne,
            &rule,
        )
        .unwrap();
        let s = &t.steps[0];
        assert!((s.log_l.exp() - 0.8).abs() < 1e-15);
        assert!((s.log_ratio.exp() - 1.6).abs() < 1e-15);
        assert!((s.distance - 0.057190958417936634).abs() < 1e-10);
        assert_eq!(t.set_description, "atoms[1]");
    }

    #[test]
    fn empty_set_is_rejected() {
        let set = AtomSet::from_mask(vec![false, false]);
        let err = lambda_trace(&two_atoms(), &set, &SupportedDensity::uniform(), &[0.5]).unwrap_err();
        assert_eq!(err, Error::EmptyRestriction);
    }

    #[test]
    fn lambda_start_and_square_identity() {
        let set = AtomSet::from_indices(2, &[1]).unwrap();
        let lt = lambda_trace(&two_atoms(), &set, &SupportedDensity::uniform(), &[0.3, 0.9, 0.6]).unwrap();
        assert!((lt.lambda(0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for (ll, l) in lt.log_lambda.iter().zip(&lt.log_l) {
            assert!((2.0 * ll - l).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_means_match_distances() {
        let rule = QuadratureRule::default();
        let post = DiscretePosterior::new(two_atoms());
        let f0 = SupportedDensity::uniform();
        let truth = AtomSet::from_indices(2, &[0]).unwrap();
        for kind in TransformKind::ALL {
            let (e, f) = conditional_mean_check(&post, &truth, &f0, kind, &rule).unwrap();
            assert!(e.abs() < 1e-14 && f.abs() < 1e-14, "{kind:?}");
        }
        let lin = AtomSet::from_indices(2, &[1]).unwrap();
        let (e, f) = conditional_mean_check(&post, &lin, &f0, TransformKind::SqrtMinusOne, &rule).unwrap();
        assert!((e + 0.057190958417936634).abs() < 1e-10);
        assert!((e - f).abs() < 1e-12);
        let (e, f) = conditional_mean_check(&post, &lin, &f0, TransformKind::Log, &rule).unwrap();
        assert!((e - (2f64.ln() - 1.0)).abs() < 1e-10);
        assert!((e - f).abs() < 1e-10);
        let (e, f) = conditional_mean_check(&post, &lin, &f0, TransformKind::OneMinusInverse, &rule).unwrap();
        assert_eq!((e, f), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    }

    #[test]
    fn expected_lambda_factor_for_linear_atom() {
        let rule = QuadratureRule::default();
        let post = DiscretePosterior::new(two_atoms());
        let set = AtomSet::from_indices(2, &[1]).unwrap();
        let factor = expected_lambda_step(&post, &set, &SupportedDensity::uniform(), &rule).unwrap();
        let e1 = std::f64::consts::FRAC_1_SQRT_2 * factor;
        assert!((e1 - 2.0 / 3.0).abs() < 1e-10);
    }
}
