use proptest::prelude::*;

use consistency_lab::densities::{hellinger_distance, hellinger_h, kl_divergence};
use consistency_lab::martingale::{t_transform, TransformKind};
use consistency_lab::posterior::AtomSet;
use consistency_lab::{Density, Posterior, Prior, Quadrature};

fn steps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..4.0, 2..5)
}

fn step_density(h: &[f64]) -> Density {
    let total: f64 = h.iter().sum::<f64>() / h.len() as f64;
    let normed: Vec<f64> = h.iter().map(|v| v / total).collect();
    Density::step(&normed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hellinger_is_bounded_and_symmetric(a in steps(), b in steps()) {
        let rule = Quadrature::default();
        let (f, g) = (step_density(&a), step_density(&b));
        let h = hellinger_h(&f, &g, &rule).unwrap();
        prop_assert!((-1e-12..=1.0).contains(&h));
        prop_assert!((h - hellinger_h(&g, &f, &rule).unwrap()).abs() < 1e-12);
        let big_h = hellinger_distance(&f, &g, &rule).unwrap();
        prop_assert!((big_h * big_h - 2.0 * h).abs() < 1e-10);
        let kl = kl_divergence(&f, &g, &rule).unwrap().to_f64();
        prop_assert!(kl >= 2.0 * h - 1e-10);
    }

    #[test]
    fn posterior_mass_stays_a_probability(xs in prop::collection::vec(0.001f64..0.999, 1..40), w in 0.05f64..0.95) {
        let prior = Prior::new(vec![Density::uniform(), Density::linear(), Density::power(2)], vec![w, (1.0 - w) / 2.0, (1.0 - w) / 2.0]).unwrap();
        let mut post = Posterior::new(prior);
        let a = AtomSet::from_indices(3, &[1, 2]).unwrap();
        for x in xs {
            post.observe(x).unwrap();
            let m = post.posterior_mass(&a);
            prop_assert!((0.0..=1.0).contains(&m));
            let total = m + post.posterior_mass(&a.complement());
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transforms_vanish_at_one_and_are_monotone(y in 0.01f64..10.0, dy in 0.001f64..1.0) {
        for kind in [TransformKind::SqrtMinusOne, TransformKind::Log, TransformKind::OneMinusInverse] {
            prop_assert!(t_transform(1.0, kind).unwrap().abs() < 1e-15);
            prop_assert!(t_transform(y + dy, kind).unwrap() > t_transform(y, kind).unwrap());
        }
    }
}
