//! Verdicts and certified tail bounds for series of nonnegative terms.
//!
//! Terms are handled on the log scale: several of the covering series peak at
//! magnitudes far outside the `f64` range before their tails take over.

use serde::{Deserialize, Serialize};

/// Outcome of a summability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// The series converges; `log_total_bound` is a certified upper bound on
    /// the log of the full sum (partial sum plus analytic tail).
    Summable { log_total_bound: f64 },
    /// The series diverges; `witness` names an explicit diverging minorant.
    Divergent { witness: String },
    /// No analytic tail description is available.
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_summable(&self) -> bool {
        matches!(self, Verdict::Summable { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Verdict::Divergent { .. })
    }

    /// Certified total on the linear scale; `None` unless summable, `+inf`
    /// when the bound exceeds the `f64` range.
    pub fn total_bound(&self) -> Option<f64> {
        match self {
            Verdict::Summable { log_total_bound } => Some(log_total_bound.exp()),
            _ => None,
        }
    }
}

/// `log(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Riemann zeta function for real `s > 1` by Euler–Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1, got {s}");
    const N: usize = 20;
    let n = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    // Bernoulli corrections B_2/2!, B_4/4!, B_6/6!, B_8/8!
    let coeffs = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1_209_600.0];
    let mut correction = 0.0;
    let mut rising = s; // s (s+1) ... (s+2j-2)
    for (j, c) in coeffs.iter().enumerate() {
        let order = 2 * j + 1;
        correction += c * rising * n.powf(-s - order as f64);
        rising *= (s + order as f64) * (s + order as f64 + 1.0);
    }
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + correction
}

/// Upper bound on `Σ_{k > K} k^{-p}` for `p > 1`, via `∫_K^∞ x^{-p} dx`.
pub fn power_tail_bound(k: f64, p: f64) -> f64 {
    assert!(p > 1.0 && k >= 1.0);
    k.powf(1.0 - p) / (p - 1.0)
}

/// Certified bound on `log Σ_{k ≥ start} exp(g(k))` for `g` concave on
/// `[start, ∞)` and eventually decreasing without bound.
///
/// Finds the first `k1` with `g(k1 + 1) − g(k1) ≤ −1`; concavity makes every
/// later step at least as steep, so the tail from `k1` is dominated by a
/// geometric series of ratio `1/e`. The finitely many terms in between are
/// bounded by their count times the maximum of `g`, located by bisection on
/// the sign of the forward difference. Returns `None` if no such `k1` is
/// found below `2^62`.
pub fn concave_log_tail(g: impl Fn(f64) -> f64, start: u64) -> Option<f64> {
    let step = |k: u64| g(k as f64 + 1.0) - g(k as f64);
    let steep = |k: u64| step(k) <= -1.0;
    let mut k1 = start;
    if !steep(k1) {
        let mut lo = start;
        let mut hi = start.max(1);
        loop {
            hi = hi.checked_mul(2)?;
            if hi > 1 << 62 {
                return None;
            }
            if steep(hi) {
                break;
            }
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if steep(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        k1 = hi;
    }
    let geometric = g(k1 as f64) - (1.0 - (-1.0f64).exp()).ln();
    if k1 == start {
        return Some(geometric);
    }
    // Maximum of g on [start, k1): last k with a nonnegative forward step.
    let peak = if step(start) < 0.0 {
        start
    } else {
        let (mut lo, mut hi) = (start, k1);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if step(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let gmax = g(peak as f64).max(g(start as f64));
    let middle = ((k1 - start) as f64).ln() + gmax;
    Some(log_add(middle, geometric))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0) - pi * pi / 6.0).abs() < 1e-13);
        assert!((zeta(4.0) - pi.powi(4) / 90.0).abs() < 1e-13);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
        assert!((zeta(1.125) - 8.5862412945105752).abs() < 1e-9);
    }

    #[test]
    fn log_add_is_stable() {
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert!((log_add(1000.0, 0.0) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn concave_tail_dominates_brute_force() {
        // g(k) = k log 2 − 0.01 k^1.5 peaks near k ≈ 2135
        let g = |k: f64| k * 2f64.ln() - 0.01 * k.powf(1.5);
        let bound = concave_log_tail(g, 1).unwrap();
        let brute = (1..200_000u64).map(|k| g(k as f64)).fold(f64::NEG_INFINITY, log_add);
        assert!(bound >= brute, "{bound} < {brute}");
        assert!(bound - brute < 20.0);
        // already decreasing fast
        let h = |k: f64| -2.0 * k;
        let b = concave_log_tail(h, 3).unwrap();
        let exact = (3..200u64).map(|k| h(k as f64)).fold(f64::NEG_INFINITY, log_add);
        assert!(b >= exact);
    }

    #[test]
    fn concave_tail_gives_up_on_linear_growth() {
        assert!(concave_log_tail(|k| 0.1 * k, 1).is_none());
    }
}
