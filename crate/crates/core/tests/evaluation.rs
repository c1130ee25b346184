mod common;

use admission_control::model::{
    average_reward, balance_residuals, effective_dynamics, evaluate, evaluate_dense, relative_bias_matrix,
    stationary_distribution, JobClass, Policy, QueueModel, RateField, expected_rewards,
};
use common::{random_instance, random_policy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_agrees_with_dense_solve(seed in any::<u64>(), capacity in 1usize..40, m in 1usize..4, dependent in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, capacity, m, dependent);
        let policy = random_policy(&mut rng, capacity, m);
        let eval = evaluate(&policy, &inst.rates, &inst.model, &inst.table);
        let dense = evaluate_dense(&policy, &inst.rates, &inst.model, &inst.table).unwrap();
        let scale = dense.gain.abs().max(1e-12);
        prop_assert!(rel_err(eval.gain, dense.gain, scale) < 1e-9);
        let dense_bias = dense.relative_bias();
        let bias_scale = dense_bias.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for s in 0..capacity {
            prop_assert!(rel_err(eval.relative_bias[s], dense_bias[s], bias_scale) < 1e-9);
        }
    }

    #[test]
    fn stationary_distribution_is_a_distribution(seed in any::<u64>(), capacity in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, capacity, 2, true);
        let policy = random_policy(&mut rng, capacity, 2);
        let dynamics = effective_dynamics(&policy, &inst.rates, &inst.table);
        let pi = stationary_distribution(&dynamics.birth, &inst.model);
        prop_assert_eq!(pi.len(), capacity + 1);
        prop_assert!(pi.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // detailed balance
        for s in 0..capacity {
            let flow_up = pi[s] * dynamics.birth[s];
            let flow_down = pi[s + 1] * inst.model.service_rate_at(s + 1);
            prop_assert!((flow_up - flow_down).abs() <= 1e-12 * flow_up.max(flow_down).max(1e-300));
        }
    }

    #[test]
    fn balance_equations_hold(seed in any::<u64>(), capacity in 1usize..50, m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, capacity, m, false);
        let policy = random_policy(&mut rng, capacity, m);
        let dynamics = effective_dynamics(&policy, &inst.rates, &inst.table);
        let eval = evaluate(&policy, &inst.rates, &inst.model, &inst.table);
        for (residual, scale) in balance_residuals(&eval, &dynamics, &inst.model) {
            prop_assert!(residual.abs() <= 1e-8 * scale.max(1e-12));
        }
        let matrix = relative_bias_matrix(eval.gain, &dynamics, &inst.model);
        let scale = matrix.iter().fold(1e-12_f64, |m, x| m.max(x.abs()));
        for s in 0..capacity {
            prop_assert!(rel_err(matrix[s], eval.relative_bias[s], scale) < 1e-8);
        }
    }
}

#[test]
fn three_state_accept_all() {
    let model = QueueModel::new(2, 1, 1.0, vec![JobClass::new(1.0, 0.0, 1.0)], 1.0, 1.0).unwrap();
    let rates = RateField::from_model(&model);
    let table = expected_rewards(&model);
    let eval = evaluate(&Policy::accept_all(2, 1), &rates, &model, &table);
    assert!((eval.gain - 2.0 / 3.0).abs() < 1e-15);
    let dynamics = effective_dynamics(&Policy::accept_all(2, 1), &rates, &table);
    assert!((average_reward(&dynamics, &model) - 2.0 / 3.0).abs() < 1e-15);
    assert!((eval.relative_bias[1] - 2.0 / 3.0).abs() < 1e-15);
    assert!((eval.relative_bias[0] - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn heavily_loaded_queue_keeps_small_bias_positive() {
    // almost all mass sits at S; the low-state bias is tiny but positive
    let model = QueueModel::new(
        40,
        26,
        0.2,
        vec![JobClass::new(10.0, 0.01, 8.0), JobClass::new(5.0, 0.01, 8.0)],
        1.0,
        16.0,
    )
    .unwrap();
    let rates = RateField::from_model(&model);
    let table = expected_rewards(&model);
    let eval = evaluate(&Policy::accept_all(40, 2), &rates, &model, &table);
    assert!(eval.relative_bias.iter().all(|&d| d > 0.0), "{:?}", eval.relative_bias);
}
