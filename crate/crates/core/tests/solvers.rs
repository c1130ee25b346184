mod common;

use admission_control::model::{evaluate, Policy};
use admission_control::solvers::{
    bellman_gaps, policy_iteration, policy_iteration_with, value_iteration, warm_start, PolicyIterationOptions,
    TieRule,
};
use common::{exhaustive_best_gain, random_instance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policy_iteration_matches_enumeration(seed in any::<u64>(), capacity in 1usize..7, m in 1usize..3, dependent in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, capacity, m, dependent);
        let solved = policy_iteration(&inst.rates, &inst.model, &inst.table, &Policy::accept_all(capacity, m)).unwrap();
        let (best, _) = exhaustive_best_gain(&inst.rates, &inst.model, &inst.table);
        prop_assert!((solved.eval.gain - best).abs() <= 1e-10 * best.abs().max(1.0));
        let gaps = bellman_gaps(&solved.eval, &inst.rates, &inst.model, &inst.table);
        prop_assert!(gaps.iter().all(|g| g.abs() <= 1e-10 * best.abs().max(1.0)));
    }

    #[test]
    fn policy_iteration_result_is_threshold_and_dominates(seed in any::<u64>(), capacity in 1usize..30, m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, capacity, m, false);
        let start = Policy::accept_all(capacity, m);
        let accept = policy_iteration(&inst.rates, &inst.model, &inst.table, &start).unwrap();
        let strict = policy_iteration_with(
            &inst.rates,
            &inst.model,
            &inst.table,
            &start,
            &PolicyIterationOptions { tie_rule: TieRule::Reject, ..Default::default() },
        )
        .unwrap();
        prop_assert!(accept.policy.trunk_reservation_levels(m).is_some());
        prop_assert!(strict.policy.is_dominated_by(&accept.policy));
        prop_assert!((accept.eval.gain - strict.eval.gain).abs() <= 1e-9 * accept.eval.gain.abs().max(1.0));
    }

    #[test]
    fn value_iteration_is_eps_optimal(seed in any::<u64>(), capacity in 1usize..25, m in 1usize..4, eps_exp in 1i32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, capacity, m, true);
        let eps = 10f64.powi(-eps_exp);
        let pi = policy_iteration(&inst.rates, &inst.model, &inst.table, &Policy::accept_all(capacity, m)).unwrap();
        let vi = value_iteration(&inst.rates, &inst.model, &inst.table, eps, None).unwrap();
        prop_assert!(vi.eval.gain >= pi.eval.gain - eps);
        prop_assert!(vi.vi_residual.unwrap() < eps);
    }
}

#[test]
fn warm_start_from_optimal_bias_stops_quickly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = random_instance(&mut rng, 15, 2, false);
    let pi = policy_iteration(&inst.rates, &inst.model, &inst.table, &Policy::accept_all(15, 2)).unwrap();
    let cold = value_iteration(&inst.rates, &inst.model, &inst.table, 1e-8, None).unwrap();
    let u0 = warm_start(&evaluate(&pi.policy, &inst.rates, &inst.model, &inst.table));
    let warm = value_iteration(&inst.rates, &inst.model, &inst.table, 1e-8, Some(&u0)).unwrap();
    assert!(warm.iterations <= 2, "{}", warm.iterations);
    assert!(warm.iterations <= cold.iterations);
    assert_eq!(warm.policy, pi.policy);
}
