use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::densities::SupportedDensity;
use crate::error::{Error, Result};

/// Level parameters `a_k` of a Pólya tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LevelSchedule {
    /// `a_k = scale · k^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `a_k = scale · base^k`.
    Geometric { scale: f64, base: f64 },
    /// Same `a` at every level.
    Constant { value: f64 },
    /// Explicit `a_1, …, a_K`.
    Explicit { values: Vec<f64> },
}

impl LevelSchedule {
    pub fn level(&self, k: usize) -> f64 {
        assert!(k >= 1);
        let kf = k as f64;
        match self {
            LevelSchedule::Power { scale, exponent } => scale * kf.powf(*exponent),
            LevelSchedule::Geometric { scale, base } => scale * base.powf(kf),
            LevelSchedule::Constant { value } => *value,
            LevelSchedule::Explicit { values } => values.get(k - 1).copied().unwrap_or(f64::NAN),
        }
    }

    pub fn levels(&self, depth: usize) -> Vec<f64> {
        (1..=depth).map(|k| self.level(k)).collect()
    }
}

/// Dyadic Pólya tree truncated at depth `K`, with per-cell observation counts.
///
/// `counts[k - 1][j]` is the number of observations in the `j`-th dyadic
/// interval of level `k`, `B_kj = [j / 2^k, (j + 1) / 2^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyaTreeParams {
    depth: usize,
    level_params: Vec<f64>,
    counts: Vec<Vec<u64>>,
}

pub const DEFAULT_POLYA_DEPTH: usize = 8;

impl PolyaTreeParams {
    pub fn new(depth: usize, level_params: Vec<f64>) -> Result<Self> {
        if depth == 0 || depth > 24 {
            return Err(Error::invalid("depth", "need 1 <= K <= 24"));
        }
        if level_params.len() != depth {
            return Err(Error::invalid("level_params", "need one a_k per level"));
        }
        if level_params.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("level_params", "a_k must be positive and finite"));
        }
        let counts = (1..=depth).map(|k| vec![0; 1 << k]).collect();
        Ok(Self {
            depth,
            level_params,
            counts,
        })
    }

    pub fn from_schedule(depth: usize, schedule: &LevelSchedule) -> Result<Self> {
        Self::new(depth, schedule.levels(depth))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level_params(&self) -> &[f64] {
        &self.level_params
    }

    /// Counts of level `k` (1-based).
    pub fn level_counts(&self, k: usize) -> &[u64] {
        &self.counts[k - 1]
    }

    pub fn observations(&self) -> u64 {
        self.counts[0].iter().sum()
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [Vec<u64>] {
        &mut self.counts
    }

    /// Count of the parent cell of node `j` at level `k` (level 0 is the root).
    pub(crate) fn parent_count(&self, k: usize, j: usize) -> u64 {
        if k == 1 {
            self.observations()
        } else {
            self.counts[k - 2][j / 2]
        }
    }

    /// Checks that every parent count equals the sum of its two children.
    pub fn counts_consistent(&self) -> bool {
        (2..=self.depth).all(|k| {
            let parent = &self.counts[k - 2];
            let child = &self.counts[k - 1];
            parent
                .iter()
                .enumerate()
                .all(|(j, c)| *c == child[2 * j] + child[2 * j + 1])
        })
    }

    /// Histogram density `2^K ∏ θ` from left-branch probabilities:
    /// `splits[k - 1][i]` is `θ` for the left child of node `i` at level `k − 1`.
    pub fn density_from_splits(splits: &[Vec<f64>]) -> Result<SupportedDensity<f64>> {
        let mut masses = vec![1.0];
        for (level, theta) in splits.iter().enumerate() {
            if theta.len() != masses.len() {
                return Err(Error::invalid(
                    "splits",
                    format!("level {} needs {} split values", level + 1, masses.len()),
                ));
            }
            if theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::invalid("splits", "split probabilities must lie in [0, 1]"));
            }
            masses = masses
                .iter()
                .zip(theta)
                .flat_map(|(m, t)| [m * t, m * (1.0 - t)])
                .collect();
        }
        let scale = masses.len() as f64;
        let heights: Vec<f64> = masses.iter().map(|m| m * scale).collect();
        Ok(SupportedDensity::step(&heights)?.with_label("polya"))
    }

    /// Draws splits from the current Beta laws `Beta(a_k + n_left, a_k + n_right)`.
    pub fn sample_splits<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        (1..=self.depth)
            .map(|k| {
                let a = self.level_params[k - 1];
                let counts = &self.counts[k - 1];
                (0..1usize << (k - 1))
                    .map(|i| {
                        let left = a + counts[2 * i] as f64;
                        let right = a + counts[2 * i + 1] as f64;
                        let beta = Beta::new(left, right)
                            .map_err(|e| Error::invalid("level_params", e.to_string()))?;
                        Ok(beta.sample(rng))
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};

    #[test]
    fn balanced_split_gives_uniform() {
        let d = PolyaTreeParams::density_from_splits(&[vec![0.5]]).unwrap();
        assert_eq!(d.eval(0.2), 1.0);
        assert_eq!(d.eval(0.8), 1.0);
    }

    #[test]
    fn schedules() {
        let s = LevelSchedule::Power { scale: 1.0, exponent: 2.0 };
        assert_eq!(s.levels(3), vec![1.0, 4.0, 9.0]);
        let g = LevelSchedule::Geometric { scale: 1.0, base: 8.0 };
        assert_eq!(g.level(2), 64.0);
    }

    #[test]
    fn sampled_tree_is_a_normalized_histogram() {
        let p = PolyaTreeParams::from_schedule(6, &LevelSchedule::Power { scale: 1.0, exponent: 2.0 }).unwrap();
        let mut rng = stream(1, 0, StreamPurpose::Prior);
        let splits = p.sample_splits(&mut rng).unwrap();
        let d = PolyaTreeParams::density_from_splits(&splits).unwrap();
        let total: f64 = (0..64).map(|j| d.eval((j as f64 + 0.5) / 64.0) / 64.0).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PolyaTreeParams::new(0, vec![]).is_err());
        assert!(PolyaTreeParams::new(2, vec![1.0]).is_err());
        assert!(PolyaTreeParams::new(1, vec![-1.0]).is_err());
    }
}
