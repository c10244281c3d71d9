use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::summability::Verdict;

use super::{Aggregation, CoverReport, PowerSequence, NEGLIGIBLE_RUN};

/// Mass of `N(0, σ²)` on `(nδ, (n + 1)δ)`, from `erfc` so tail cells keep
/// full relative precision.
pub fn gaussian_cell_mass(sigma: f64, delta: f64, n: i64) -> f64 {
    if n < 0 {
        return gaussian_cell_mass(sigma, delta, -n - 1);
    }
    let s = sigma * SQRT_2;
    let (lo, hi) = (n as f64 * delta / s, (n + 1) as f64 * delta / s);
    0.5 * (erfc(lo) - erfc(hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSqrtSum {
    /// `Σ_{n≥0} √mass_n`: truncated sum plus a Gaussian tail closure.
    pub direct: f64,
    /// The truncated sum alone; a lower bound.
    pub lower: f64,
    /// `1 + 4^m m! (2π)^{−1/4} (σ/δ)^{2m−1/2}`.
    pub bound: f64,
    pub terms: u64,
}

/// `log(4^m m! (2π)^{−1/4})`.
fn log_bound_constant(m: u32) -> f64 {
    let m = m as f64;
    m * 4f64.ln() + ln_gamma(m + 1.0) - 0.25 * (2.0 * PI).ln()
}

/// Half-line sum `Σ_{n≥0} √pr(θ ∈ A_n)` for `θ ~ N(0, σ²)` and its closed-form bound.
pub fn gaussian_sqrt_sum(sigma: f64, delta: f64, m: u32, tol: f64) -> Result<GaussianSqrtSum> {
    if !(sigma > 0.0) || !(delta > 0.0) || !sigma.is_finite() || !delta.is_finite() {
        return Err(Error::invalid("sigma/delta", "need finite sigma > 0 and delta > 0"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "need m >= 1"));
    }
    let mut lower = 0.0;
    let mut run = 0;
    let mut n: i64 = 0;
    while run < NEGLIGIBLE_RUN {
        let t = gaussian_cell_mass(sigma, delta, n).sqrt();
        lower += t;
        run = if t < tol { run + 1 } else { 0 };
        n += 1;
    }
    // √mass_n ≤ (2π)^{−1/4} (δ/σ)^{1/2} exp(−a n²) with a = δ² / (4σ²)
    let a = delta * delta / (4.0 * sigma * sigma);
    let first = n as f64;
    let closure = (2.0 * PI).powf(-0.25) * (delta / sigma).sqrt() * (-a * first * first).exp()
        / (-(-2.0 * a * first).exp_m1());
    let ratio = sigma / delta;
    let bound = 1.0 + (log_bound_constant(m) + (2.0 * m as f64 - 0.5) * ratio.ln()).exp();
    Ok(GaussianSqrtSum {
        direct: lower + closure,
        lower,
        bound,
        terms: n as u64,
    })
}

/// Both sides of `ξ^{1/4} / (e^{ξ/4} − 1) ≤ 4^m m! ξ^{1/4−m}`.
pub fn xi_inequality(xi: f64, m: u32) -> (f64, f64) {
    let lhs = xi.powf(0.25) / (xi / 4.0).exp_m1();
    let mf = m as f64;
    let rhs = (mf * 4f64.ln() + ln_gamma(mf + 1.0) + (0.25 - mf) * xi.ln()).exp();
    (lhs, rhs)
}

/// Cover of coordinate space by boxes `A_{jn} = (nδ_j, (n + 1)δ_j)` with
/// `δ_j = δ γ_j` and `θ_j ~ N(0, σ_j²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoordCover {
    pub delta: f64,
    pub gammas: PowerSequence,
    pub sds: PowerSequence,
    /// Smallest bound order tried.
    pub m: u32,
    /// Coordinates summed directly; the rest use the analytic tail.
    pub truncation: usize,
}

impl GaussianCoordCover {
    pub fn new(delta: f64, gammas: PowerSequence, sds: PowerSequence, m: u32, truncation: usize) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid("delta", "need finite delta > 0"));
        }
        if !(gammas.exponent > 1.0) {
            return Err(Error::invalid("gammas", "shaping sequence must be summable (exponent > 1)"));
        }
        if m == 0 || truncation == 0 {
            return Err(Error::invalid("m/truncation", "need m >= 1 and J >= 1"));
        }
        Ok(Self {
            delta,
            gammas,
            sds,
            m,
            truncation,
        })
    }

    /// Default shaping `γ_j ∝ j^{−1.25}` normalized to sum to one.
    pub fn with_default_shaping(delta: f64, sds: PowerSequence, m: u32, truncation: usize) -> Result<Self> {
        Self::new(delta, PowerSequence::normalized(1.25)?, sds, m, truncation)
    }

    /// `σ_j / δ_j`.
    pub fn ratio(&self, j: usize) -> f64 {
        self.sds.at(j as f64) / (self.delta * self.gammas.at(j as f64))
    }
}

/// Lower bound `Σ_{n≥0} √p_n ≥ ½ / √max_n p_n ≥ ½ (2π)^{1/4} √(σ/δ)`.
fn spread_minorant(ratio: f64) -> f64 {
    0.5 * (2.0 * PI).powf(0.25) * ratio.sqrt()
}

/// Summability of `∏_j Σ_{n≥0} √pr(θ_j ∈ A_{jn})` for power-law `σ_j` and `γ_j`.
pub fn expfam_cover_sum(cover: &GaussianCoordCover, tol: f64) -> Result<CoverReport> {
    let mut log_partial = 0.0;
    let mut cells = 0;
    let mut lower_factors = Vec::with_capacity(cover.truncation);
    for j in 1..=cover.truncation {
        let sigma = cover.sds.at(j as f64);
        let delta = cover.delta * cover.gammas.at(j as f64);
        let s = gaussian_sqrt_sum(sigma, delta, cover.m, tol)?;
        log_partial += s.direct.ln();
        lower_factors.push(s.lower);
        cells += s.terms;
    }
    let params = serde_json::to_value(cover).expect("cover serializes");
    let decay = cover.sds.exponent - cover.gammas.exponent;
    let base_ratio = cover.sds.scale / (cover.delta * cover.gammas.scale);
    let j_last = cover.truncation as f64;
    let mut notes = Vec::new();
    let (log_tail_bound, verdict) = if decay > 1e-12 {
        // smallest m ≥ cover.m with (s − g)(2m − ½) > 1
        let mut m = cover.m;
        while decay * (2.0 * m as f64 - 0.5) <= 1.0 {
            m += 1;
        }
        let p = decay * (2.0 * m as f64 - 0.5);
        // Σ_{j>J} log(1 + C j^{−p}) ≤ C J^{1−p} / (p − 1)
        let log_c = log_bound_constant(m) + (2.0 * m as f64 - 0.5) * base_ratio.ln();
        let log_tail = log_c + (1.0 - p) * j_last.ln() - (p - 1.0).ln();
        notes.push(format!("bound order m = {m}; tail exponent (s - g)(2m - 1/2) = {p:.6}"));
        (
            Some(log_tail),
            Verdict::Summable {
                log_total_bound: log_partial + log_tail.exp(),
            },
        )
    } else {
        let threshold = 4.0 / (2.0 * PI).sqrt();
        let witness = if decay < -1e-12 {
            // σ_j / δ_j increases without bound
            let j0 = ((threshold / base_ratio).powf(1.0 / -decay)).max(1.0).floor() as usize + 1;
            Some(format!(
                "for j >= {j0}, sigma_j/delta_j >= {threshold:.6} and grows; each factor is at least \
                 (1/2)(2 pi)^(1/4) sqrt(sigma_j/delta_j) > 1, so the log-product has terms bounded below by a positive constant"
            ))
        } else if spread_minorant(base_ratio) > 1.0 {
            Some(format!(
                "every factor is at least (1/2)(2 pi)^(1/4) sqrt({base_ratio:.6}) = {:.6} > 1",
                spread_minorant(base_ratio)
            ))
        } else if lower_factors[0] > 1.0 {
            Some(format!(
                "every factor equals the first, whose truncated sum {:.9} already exceeds 1",
                lower_factors[0]
            ))
        } else {
            None
        };
        match witness {
            Some(w) => (None, Verdict::Divergent { witness: w }),
            None => (
                None,
                Verdict::Inconclusive {
                    reason: "factors stay at or below one at this delta; the product is finite here \
                             but the condition must hold for every delta"
                        .into(),
                },
            ),
        }
    };
    Ok(CoverReport {
        family: "gaussian".into(),
        aggregation: Aggregation::Product,
        log_partial,
        log_tail_bound,
        verdict,
        cell_count_evaluated: cells,
        psi: None,
        params,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::DEFAULT_TOL;

    #[test]
    fn cell_masses() {
        assert!((gaussian_cell_mass(1.0, 1.0, 0) - 0.341344746068542949).abs() < 1e-15);
        assert!((gaussian_cell_mass(1.0, 1.0, 1) - 0.135905121983277844).abs() < 1e-15);
        assert_eq!(gaussian_cell_mass(1.0, 1.0, -1), gaussian_cell_mass(1.0, 1.0, 0));
        for n in [5i64, 10, 20] {
            let bound = (-(n as f64).powi(2) / 2.0).exp();
            assert!(gaussian_cell_mass(1.0, 1.0, n) < bound);
        }
    }

    #[test]
    fn sqrt_sum_against_bound() {
        let s = gaussian_sqrt_sum(0.1, 1.0, 1, DEFAULT_TOL).unwrap();
        assert!((s.bound - 1.07989415802436950).abs() < 1e-14);
        assert!((s.direct - 0.707106781189307933).abs() < 1e-12);
        assert!(s.direct <= s.bound);
        let tiny = gaussian_sqrt_sum(1e-3, 1.0, 1, DEFAULT_TOL).unwrap();
        assert!((tiny.direct - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(tiny.bound < 1.0 + 1e-3);
    }

    #[test]
    fn xi_grid() {
        for xi in [0.1, 1.0, 10.0, 100.0] {
            for m in 1..=3 {
                let (l, r) = xi_inequality(xi, m);
                assert!(l <= r, "xi = {xi}, m = {m}");
            }
        }
    }

    #[test]
    fn cover_verdicts() {
        let gam = PowerSequence::normalized(1.5).unwrap();
        let sds = PowerSequence::new(1.0, 2.0).unwrap();
        let r = expfam_cover_sum(&GaussianCoordCover::new(0.5, gam, sds, 2, 20).unwrap(), DEFAULT_TOL).unwrap();
        assert!(r.verdict.is_summable(), "{r:?}");
        let same = expfam_cover_sum(&GaussianCoordCover::new(1.0, gam, gam, 1, 20).unwrap(), DEFAULT_TOL).unwrap();
        assert!(same.verdict.is_divergent(), "{same:?}");
        let q = PowerSequence::new(1.0, 1.5).unwrap();
        let auto = GaussianCoordCover::with_default_shaping(0.5, q, 1, 20).unwrap();
        let r = expfam_cover_sum(&auto, DEFAULT_TOL).unwrap();
        assert!(r.verdict.is_summable());
        assert!(r.notes[0].contains("m = 3"), "{:?}", r.notes);
    }
}
