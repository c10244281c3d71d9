use approx::assert_abs_diff_eq;

use consistency_lab::covering::{
    beta_cell_mass, gaussian_cell_mass, gaussian_cells, gaussian_sqrt_sum, polya_cells, polya_cover_sum,
    PolyaThetaCover, DEFAULT_TOL,
};
use consistency_lab::priors::LevelSchedule;

#[test]
fn gaussian_cells_match_normal_cdf_differences() {
    assert_abs_diff_eq!(gaussian_cell_mass(1.0, 1.0, 0), 0.341_344_746_068_542_9, epsilon = 1e-15);
    assert_abs_diff_eq!(gaussian_cell_mass(1.0, 1.0, 1), 0.135_905_121_983_277_9, epsilon = 1e-15);
    assert_abs_diff_eq!(gaussian_cell_mass(1.0, 1.0, -1), gaussian_cell_mass(1.0, 1.0, 0), epsilon = 1e-15);
    for n in [3, 6, 10] {
        let bound = (-(n as f64).powi(2) / 2.0).exp();
        assert!(gaussian_cell_mass(1.0, 1.0, n) < bound);
    }
}

#[test]
fn gaussian_sqrt_sum_example() {
    let s = gaussian_sqrt_sum(0.1, 1.0, 1, DEFAULT_TOL).unwrap();
    assert_abs_diff_eq!(s.bound, 1.0799, epsilon = 5e-5);
    // A_0 = (0, 1) carries half the mass; the rest is below 1e-20
    assert_abs_diff_eq!(s.direct, 0.5f64.sqrt(), epsilon = 1e-9);
    assert!(s.lower <= s.direct && s.direct <= s.bound);
}

#[test]
fn beta_cells_under_uniform() {
    assert_abs_diff_eq!(beta_cell_mass(1.0, 0.45, 0.55).unwrap(), 0.1, epsilon = 1e-14);
    let b = 0.5 * 0.1f64.tanh();
    assert_abs_diff_eq!(beta_cell_mass(1.0, 0.5 - b, 0.5 + b).unwrap(), 0.099_667_994_624_955_8, epsilon = 1e-14);
    assert!(beta_cell_mass(1.0, 0.6, 0.4).is_err());
}

#[test]
fn cell_lists_are_disjoint_and_nearly_exhaustive() {
    let cells = gaussian_cells(1.0, 0.5, -20, 20).unwrap();
    assert!((cells.total_mass() + cells.uncovered_mass - 1.0).abs() < 1e-12);
    let cells = polya_cells(5.0, 0.3, 200).unwrap();
    assert!((cells.total_mass() + cells.uncovered_mass - 1.0).abs() < 1e-12);
    assert!(cells.cells.windows(2).all(|w| w[0].hi <= w[1].lo + 1e-15));
}

#[test]
fn polya_schedules() {
    let report = |levels, r| polya_cover_sum(&PolyaThetaCover::new(levels, 1.0, r, 8).unwrap(), DEFAULT_TOL).unwrap();
    let geometric = report(LevelSchedule::Geometric { scale: 1.0, base: 8.0 }, None);
    assert!(geometric.verdict.is_summable());
    assert!(geometric.log_total_bound().is_some_and(f64::is_finite));
    assert!(report(LevelSchedule::Power { scale: 1.0, exponent: 1.0 }, None).verdict.is_divergent());
    assert!(report(LevelSchedule::Power { scale: 1.0, exponent: 3.5 }, None).verdict.is_summable());
    // a_k b_k^2 ~ k^{3.5 - 3} cannot beat the 2^k level multiplicity once r = 0.5
    assert!(report(LevelSchedule::Power { scale: 1.0, exponent: 3.5 }, Some(0.5)).verdict.is_divergent());
}
