use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::densities::{hellinger_h, QuadratureRule};
use crate::error::{Error, Result};
use crate::priors::{ExpFamilyDensity, ExpFamilySpec, PolyaTreeParams};

use super::gaussian::gaussian_cell_mass;
use super::polya::{beta_cell_mass, half_width, lower_cut, PolyaThetaCover};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    pub sqrt_mass: f64,
}

/// Cells sorted by position, with the prior mass they leave uncovered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellList {
    pub cells: Vec<Cell>,
    pub uncovered_mass: f64,
}

impl CellList {
    fn new(cells: Vec<Cell>, uncovered_mass: f64) -> Result<Self> {
        for (i, w) in cells.windows(2).enumerate() {
            if w[0].hi > w[1].lo + 1e-15 * w[1].lo.abs().max(1.0) {
                return Err(Error::CellOverlap { index: i + 1 });
            }
        }
        Ok(Self { cells, uncovered_mass })
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.mass).sum()
    }

    pub fn sqrt_mass_sum(&self) -> f64 {
        self.cells.iter().map(|c| c.sqrt_mass).sum()
    }
}

fn cell(lo: f64, hi: f64, mass: f64) -> Cell {
    Cell {
        lo,
        hi,
        mass,
        sqrt_mass: mass.sqrt(),
    }
}

/// Cells `A_{L}^−, …, A_1^−, A_0, A_1^+, …, A_L^+` of one Pólya level with their
/// `Beta(a, a)` masses.
pub fn polya_cells(a: f64, delta: f64, per_side: usize) -> Result<CellList> {
    let c = lower_cut(delta);
    let b = half_width(delta);
    let lower: Vec<Cell> = (1..=per_side)
        .rev()
        .map(|l| {
            let (lo, hi) = (c * (-(l as f64) * delta).exp(), c * (-((l - 1) as f64) * delta).exp());
            Ok(cell(lo, hi, beta_cell_mass(a, lo, hi)?))
        })
        .collect::<Result<_>>()?;
    let middle = cell(0.5 - b, 0.5 + b, beta_cell_mass(a, 0.5 - b, 0.5 + b)?);
    let upper: Vec<Cell> = lower
        .iter()
        .rev()
        .map(|x| cell(1.0 - x.hi, 1.0 - x.lo, x.mass))
        .collect();
    let edge = c * (-(per_side as f64) * delta).exp();
    let uncovered = 2.0 * beta_cell_mass(a, 0.0, edge)?;
    CellList::new(lower.into_iter().chain([middle]).chain(upper).collect(), uncovered)
}

/// Cells `A_n = (nδ, (n + 1)δ)` for `n` in `n_lo..=n_hi` with their `N(0, σ²)` masses.
pub fn gaussian_cells(sigma: f64, delta: f64, n_lo: i64, n_hi: i64) -> Result<CellList> {
    if !(sigma > 0.0) || !(delta > 0.0) || n_lo > n_hi {
        return Err(Error::invalid("cells", "need sigma > 0, delta > 0 and n_lo <= n_hi"));
    }
    let cells: Vec<Cell> = (n_lo..=n_hi)
        .map(|n| cell(n as f64 * delta, (n + 1) as f64 * delta, gaussian_cell_mass(sigma, delta, n)))
        .collect();
    let z = std::f64::consts::SQRT_2 * sigma;
    let below = 0.5 * libm::erfc(-(n_lo as f64) * delta / z);
    let above = 0.5 * libm::erfc((n_hi + 1) as f64 * delta / z);
    CellList::new(cells, below + above)
}

/// Largest measured `h` over sampled same-cell pairs, with the claimed bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub pairs: usize,
    pub max_h: f64,
    pub bound: f64,
}

impl SpotCheck {
    pub fn holds(&self) -> bool {
        self.max_h <= self.bound
    }
}

/// Cell `(lo, hi)` of the level cover containing `theta`.
fn polya_cell_of(theta: f64, delta: f64) -> (f64, f64) {
    let c = lower_cut(delta);
    if theta <= c {
        let l = ((c / theta).ln() / delta).ceil().max(1.0);
        (c * (-l * delta).exp(), c * (-(l - 1.0) * delta).exp())
    } else if theta >= 1.0 - c {
        let (lo, hi) = polya_cell_of(1.0 - theta, delta);
        (1.0 - hi, 1.0 - lo)
    } else {
        (c, 1.0 - c)
    }
}

/// Draws pairs of depth-`K` trees whose split variables share a cell at every
/// node and measures `h`, against `1 − exp(−δ*/2)`.
pub fn polya_pair_spot_check<R: Rng + ?Sized>(
    cover: &PolyaThetaCover,
    depth: usize,
    pairs: usize,
    rng: &mut R,
    rule: &QuadratureRule<f64>,
) -> Result<SpotCheck> {
    let mut max_h: f64 = 0.0;
    for _ in 0..pairs {
        let mut first = Vec::with_capacity(depth);
        let mut second = Vec::with_capacity(depth);
        for k in 1..=depth {
            let beta = Beta::new(cover.a(k), cover.a(k)).map_err(|e| Error::invalid("a", e.to_string()))?;
            let delta = cover.delta(k);
            let (t1, t2): (Vec<f64>, Vec<f64>) = (0..1usize << (k - 1))
                .map(|_| {
                    let t1: f64 = beta.sample(rng).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                    let (lo, hi) = polya_cell_of(t1, delta);
                    (t1, rng.random_range(lo..hi))
                })
                .unzip();
            first.push(t1);
            second.push(t2);
        }
        let f1 = PolyaTreeParams::density_from_splits(&first)?;
        let f2 = PolyaTreeParams::density_from_splits(&second)?;
        max_h = max_h.max(hellinger_h(&f1, &f2, rule)?);
    }
    Ok(SpotCheck {
        pairs,
        max_h,
        bound: cover.hellinger_radius(),
    })
}

/// Draws coefficient pairs in the same box `Π_j (n_j δ_j, (n_j + 1) δ_j)` with
/// `δ_j ∝ j^{−1−r}` summing to `δ*`, and measures `h` against `1 − exp(−√2 δ*)`.
pub fn expfam_pair_spot_check<R: Rng + ?Sized>(
    spec: &ExpFamilySpec,
    delta_star: f64,
    r: f64,
    pairs: usize,
    rng: &mut R,
) -> Result<SpotCheck> {
    let j_max = spec.truncation();
    if j_max == 0 || !(delta_star > 0.0) || !(r > 0.0) {
        return Err(Error::invalid("spot_check", "need J >= 1, delta* > 0 and r > 0"));
    }
    let omega: Vec<f64> = (1..=j_max).map(|j| (j as f64).powf(-1.0 - r)).collect();
    let total: f64 = omega.iter().sum();
    let deltas: Vec<f64> = omega.iter().map(|w| delta_star * w / total).collect();
    let rule = ExpFamilySpec::normalizer_rule();
    let mut max_h: f64 = 0.0;
    for _ in 0..pairs {
        let t1 = spec.sample_coefficients(rng);
        let mut t2 = t1.clone();
        for (j, d) in deltas.iter().enumerate() {
            let n = (t1[j + 1] / d).floor();
            t2[j + 1] = rng.random_range(n * d..(n + 1.0) * d);
        }
        let f1 = ExpFamilyDensity::from_coefficients(&t1, &rule)?;
        let f2 = ExpFamilyDensity::from_coefficients(&t2, &rule)?;
        max_h = max_h.max(hellinger_h(&f1.density, &f2.density, &rule)?);
    }
    Ok(SpotCheck {
        pairs,
        max_h,
        bound: -(-std::f64::consts::SQRT_2 * delta_star).exp_m1(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::LevelSchedule;
    use crate::rng::{stream, StreamPurpose};

    #[test]
    fn polya_level_partition() {
        let list = polya_cells(1.0, 0.2, 110).unwrap();
        assert_eq!(list.cells.len(), 2 * 110 + 1);
        assert!((list.total_mass() + list.uncovered_mass - 1.0).abs() < 1e-12);
        assert!((list.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_partition() {
        let list = gaussian_cells(1.0, 1.0, -6, 6).unwrap();
        assert!(list.total_mass() > 1.0 - 1e-8);
        assert!((list.total_mass() + list.uncovered_mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cell_lookup() {
        let d = 0.2;
        let c = lower_cut(d);
        assert_eq!(polya_cell_of(0.5, d), (c, 1.0 - c));
        let (lo, hi) = polya_cell_of(0.1, d);
        assert!(lo < 0.1 && 0.1 <= hi);
        let (lo, hi) = polya_cell_of(0.9, d);
        assert!(lo <= 0.9 && 0.9 < hi);
    }

    #[test]
    fn polya_pairs_within_radius() {
        let cover = PolyaThetaCover::new(LevelSchedule::Constant { value: 1.0 }, 0.3, Some(0.5), 4).unwrap();
        let mut rng = stream(3, 0, StreamPurpose::Prior);
        let check = polya_pair_spot_check(&cover, 5, 20, &mut rng, &QuadratureRule::default()).unwrap();
        assert!((check.bound - 0.139292023574942188).abs() < 1e-15);
        assert!(check.holds(), "{check:?}");
    }

    #[test]
    fn expfam_pairs_within_radius() {
        let spec = ExpFamilySpec::power_law(6, 1.0, 1.5).unwrap();
        let mut rng = stream(3, 0, StreamPurpose::Prior);
        let check = expfam_pair_spot_check(&spec, 0.2, 0.25, 10, &mut rng).unwrap();
        assert!(check.holds(), "{check:?}");
    }
}
