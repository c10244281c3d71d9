use rand::Rng;

use consistency_lab::experiments::{generate_data, run_martingale, ExperimentConfig, TruthSpec};
use consistency_lab::martingale::lambda_trace;
use consistency_lab::posterior::AtomSet;
use consistency_lab::rng::{stream, StreamPurpose};
use consistency_lab::stats::MonteCarloEstimate;
use consistency_lab::{Density, Prior};

#[test]
fn first_lambda_step_has_mean_two_thirds() {
    let prior = Prior::new(vec![Density::uniform(), Density::linear()], vec![0.5, 0.5]).unwrap();
    let a = AtomSet::from_indices(2, &[1]).unwrap();
    let mut rng = stream(7, 0, StreamPurpose::Data);
    let values: Vec<f64> = (0..100_000)
        .map(|_| {
            let x = rng.random::<f64>();
            lambda_trace(&prior, &a, &Density::uniform(), &[x]).unwrap().lambda(1)
        })
        .collect();
    let est = MonteCarloEstimate::from_values(&values);
    assert!((est.estimate - 2.0 / 3.0).abs() < 3.0 * est.std_error, "{est:?}");
}

#[test]
fn linear_truth_sampler_has_mean_two_thirds() {
    let mut rng = stream(11, 0, StreamPurpose::Data);
    let xs = generate_data(&TruthSpec::Linear, 100_000, &mut rng).unwrap();
    let est = MonteCarloEstimate::from_values(&xs);
    assert!((est.estimate - 2.0 / 3.0).abs() < 3.0 * est.std_error, "{est:?}");
}

#[test]
fn log_l_slope_matches_kl_rate() {
    let cfg = ExperimentConfig::from_json(
        r#"{"schema_version": 1, "scenario": "martingale", "truth": {"family": "uniform"},
            "prior": {"family": "discrete", "atoms": [{"family": "uniform"}, {"family": "linear"}], "weights": [0.5, 0.5]},
            "n": 500, "replicates": 50, "set": {"kind": "atoms", "indices": [1]}, "seed": 4}"#,
    )
    .unwrap();
    let out = run_martingale(&cfg).unwrap();
    let slope = &out.summary.log_l_slope;
    let want = -(1.0 - 2f64.ln());
    assert_eq!(slope.predicted.map(|p| (p - want).abs() < 1e-9), Some(true));
    assert!(slope.estimate.estimate < 0.0);
    assert!(
        (slope.estimate.estimate - want).abs() < 3.0 * slope.estimate.std_error + 1e-3,
        "{:?}",
        slope.estimate
    );
    assert!(out.summary.max_identity_gap < 1e-10);
    assert!(out.summary.variance.is_some());
}

#[test]
fn whole_space_normaliser_grows_subexponentially() {
    let cfg = ExperimentConfig::from_json(
        r#"{"schema_version": 1, "scenario": "martingale", "truth": {"family": "uniform"},
            "prior": {"family": "discrete", "atoms": [{"family": "uniform"}, {"family": "linear"}], "weights": [0.5, 0.5]},
            "n": 400, "replicates": 20, "set": {"kind": "whole"}, "seed": 5}"#,
    )
    .unwrap();
    let out = run_martingale(&cfg).unwrap();
    assert!(out.summary.terminal_log_i_rate.estimate < 0.05);
    assert!(out.summary.variance.is_none());
}
