#![allow(dead_code)]

use admission_control::model::{
    evaluate, expected_rewards, JobClass, Policy, QueueModel, RateField, RewardTable,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub struct Instance {
    pub model: QueueModel,
    pub rates: RateField,
    pub table: RewardTable,
}

/// Random queue with `capacity` states above zero and `m` classes. With
/// `state_dependent` the rate field varies per state (and may vanish for
/// some classes); otherwise it equals the model's class rates.
pub fn random_instance<R: Rng>(rng: &mut R, capacity: usize, m: usize, state_dependent: bool) -> Instance {
    let servers = rng.random_range(1..=capacity);
    let mu = rng.random_range(0.2..2.0);
    let classes: Vec<JobClass> = (0..m)
        .map(|_| {
            JobClass::new(
                rng.random_range(0.0..20.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.1..2.0),
            )
        })
        .collect();
    let rates = if state_dependent {
        let rows = (0..=capacity)
            .map(|_| {
                (0..m)
                    .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..2.0) })
                    .collect()
            })
            .collect();
        RateField::from_rows(rows).unwrap()
    } else {
        RateField::constant(capacity, &classes.iter().map(|c| c.arrival_rate).collect::<Vec<_>>())
    };
    let total: f64 = classes.iter().map(|c| c.arrival_rate).sum();
    let peak = (0..=capacity).map(|s| rates.global(s)).fold(total, f64::max);
    let floor = (0..=capacity).map(|s| rates.global(s)).fold(total, f64::min).max(0.05);
    let model = QueueModel::new(capacity, servers, mu, classes, floor.min(total), peak).unwrap();
    let table = expected_rewards(&model);
    Instance { model, rates, table }
}

/// Random admitted sets, not necessarily following reward order.
pub fn random_policy<R: Rng>(rng: &mut R, capacity: usize, m: usize) -> Policy {
    let sets = (0..capacity)
        .map(|_| (0..m).filter(|_| rng.random_bool(0.5)).collect())
        .collect();
    Policy::from_sets(sets)
}

/// Largest gain over every prefix-closed policy, by enumeration of the
/// `(m+1)^S` admitted-prefix lengths.
pub fn exhaustive_best_gain(rates: &RateField, model: &QueueModel, table: &RewardTable) -> (f64, Policy) {
    let capacity = model.capacity;
    let m = model.num_classes();
    let mut counts = vec![0usize; capacity];
    let mut best = f64::NEG_INFINITY;
    let mut best_policy = Policy::reject_all(capacity);
    loop {
        let policy = Policy::from_priority_prefixes(table, &counts);
        let gain = evaluate(&policy, rates, model, table).gain;
        if gain > best {
            best = gain;
            best_policy = policy;
        }
        let mut pos = 0;
        loop {
            if pos == capacity {
                return (best, best_policy);
            }
            counts[pos] += 1;
            if counts[pos] <= m {
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}

/// Expected number of uniformized steps to reach the top state `S` from
/// every state, for the birth-death chain with the given rates.
///
/// The unknowns are the level-crossing times `t_s = E[T(s -> s+1)]`, which
/// satisfy `up(s) t_s - down(s) t_{s-1} = 1`. This bidiagonal system has
/// positive solutions of any magnitude and is solved by dense LU; the
/// hitting time of `S` from `a` is `sum_{s >= a} t_s`.
pub fn hitting_times_to_top(birth: &[f64], death: &[f64], uniformization: f64) -> Vec<f64> {
    let n = birth.len() - 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let b = DVector::<f64>::from_element(n, 1.0);
    for s in 0..n {
        a[(s, s)] = birth[s] / uniformization;
        if s > 0 {
            a[(s, s - 1)] = -death[s] / uniformization;
        }
    }
    let t = a.lu().solve(&b).expect("level-crossing system is nonsingular");
    let mut times = vec![0.0; n + 1];
    for s in (0..n).rev() {
        times[s] = times[s + 1] + t[s];
    }
    times
}

/// Mean and standard error of batch values.
pub fn batch_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
