use crate::densities::SupportedDensity;
use crate::error::{Error, Result};
use crate::priors::PolyaTreeParams;

/// Index of the level-`k` dyadic cell containing `x`; `x = 1` joins the last cell.
pub fn dyadic_cell(x: f64, k: usize) -> usize {
    let cells = 1usize << k;
    ((x * cells as f64).floor() as usize).min(cells - 1)
}

/// Pólya tree posterior after one observation: increments the count of every
/// cell on the path of `x`.
pub fn polya_update(params: &PolyaTreeParams, x: f64) -> Result<PolyaTreeParams> {
    let mut next = params.clone();
    polya_observe(&mut next, x)?;
    Ok(next)
}

pub fn polya_observe(params: &mut PolyaTreeParams, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid("x", format!("{x} is outside [0, 1]")));
    }
    for (level, counts) in params.counts_mut().iter_mut().enumerate() {
        counts[dyadic_cell(x, level + 1)] += 1;
    }
    Ok(())
}

/// Posterior mean of the leaf masses: the product of
/// `E θ = (a_k + n_child) / (2 a_k + n_parent)` along each path.
pub fn polya_leaf_masses(params: &PolyaTreeParams) -> Vec<f64> {
    let mut masses = vec![1.0];
    for k in 1..=params.depth() {
        let a = params.level_params()[k - 1];
        let counts = params.level_counts(k);
        masses = (0..1usize << k)
            .map(|j| {
                let parent = params.parent_count(k, j) as f64;
                masses[j / 2] * (a + counts[j] as f64) / (2.0 * a + parent)
            })
            .collect();
    }
    masses
}

/// Predictive density: the posterior mean of the truncated tree, a `2^K` step density.
pub fn polya_predictive(params: &PolyaTreeParams) -> Result<SupportedDensity<f64>> {
    let masses = polya_leaf_masses(params);
    let scale = masses.len() as f64;
    let heights: Vec<f64> = masses.iter().map(|m| m * scale).collect();
    Ok(SupportedDensity::step(&heights)?.with_label("polya_predictive"))
}
