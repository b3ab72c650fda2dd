use proptest::prelude::*;

use vise::analytic::{
    expected_increment_approx, expected_increment_exact, foc_residual, optimal_threshold_bruteforce,
    optimal_threshold_estimate, threshold_sensitivity,
};
use vise::{Environment, VotingRule};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_increment_scales_with_sigma(rho in -3.0f64..3.0, s in 0.1f64..50.0, n in 1u64..60, a in 0.0f64..1.0) {
        let rule = VotingRule::new(n, a).unwrap();
        let unit = expected_increment_exact(&Environment::from_rho(rho, 1.0).unwrap(), &rule).unwrap().value();
        let scaled = expected_increment_exact(&Environment::from_rho(rho, s).unwrap(), &rule).unwrap().value();
        prop_assert!((scaled - s * unit).abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn approx_increment_scales_with_sigma(rho in -3.0f64..3.0, s in 0.1f64..50.0, n in 1u64..400, a in 0.0f64..1.0) {
        let rule = VotingRule::new(n, a).unwrap();
        let unit = expected_increment_approx(&Environment::from_rho(rho, 1.0).unwrap(), &rule).unwrap().value();
        let scaled = expected_increment_approx(&Environment::from_rho(rho, s).unwrap(), &rule).unwrap().value();
        prop_assert!((scaled - s * unit).abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn estimate_is_decreasing(r1 in -6.0f64..6.0, d in 1e-3f64..2.0) {
        prop_assert!(optimal_threshold_estimate(r1 + d) < optimal_threshold_estimate(r1));
    }

    #[test]
    fn estimate_satisfies_foc(rho in -3.0f64..3.0) {
        prop_assert!(foc_residual(optimal_threshold_estimate(rho), rho).abs() <= 1e-12);
    }

    #[test]
    fn sensitivity_is_even_and_negative(rho in 0.0f64..10.0) {
        let (a, b) = (threshold_sensitivity(rho), threshold_sensitivity(-rho));
        prop_assert!((a - b).abs() <= 1e-13);
        prop_assert!(a < 0.0);
    }

    #[test]
    fn thresholds_in_one_class_are_equivalent(n in 1u64..80, k in 0i64..80, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, rho in -2.0f64..2.0) {
        let k = k.min(n as i64 - 1);
        let a1 = (k as f64 + t1) / n as f64;
        let a2 = (k as f64 + t2) / n as f64;
        let r1 = VotingRule::new(n, a1).unwrap();
        let r2 = VotingRule::new(n, a2).unwrap();
        prop_assert_eq!(r1.min_yes(), r2.min_yes());
        let env = Environment::from_rho(rho, 1.0).unwrap();
        let m1 = expected_increment_exact(&env, &r1).unwrap().value();
        let m2 = expected_increment_exact(&env, &r2).unwrap().value();
        prop_assert_eq!(m1.to_bits(), m2.to_bits());
    }

    #[test]
    fn bruteforce_best_dominates_every_class(n in 1u64..40, rho in -2.0f64..2.0) {
        let env = Environment::from_rho(rho, 1.0).unwrap();
        let best = optimal_threshold_bruteforce(&env, n).unwrap();
        for k in -1..=(n as i64) {
            let v = expected_increment_exact(&env, &VotingRule::from_class(n, k).unwrap()).unwrap().value();
            prop_assert!(v <= best.best_value);
        }
    }
}
