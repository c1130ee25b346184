//! Policy evaluation for the controlled birth-death chain.
//!
//! Under a fixed policy the queue is a birth-death process with birth rate
//! `Lambda_pi(s)` and death rate `mu(s)`. Gain and relative bias have
//! closed forms: the gain is the stationary reward rate under the
//! product-form distribution, and the relative bias
//! `dh(s) = h(s) - h(s+1)` follows from the per-state balance equation
//!
//! ```text
//! rho = R_pi(s) - Lambda_pi(s) * dh(s) + mu(s) * dh(s-1)
//! ```
//!
//! solved backward from `dh(S-1) = rho / mu(S)`. A dense linear solve of
//! `rho = R_pi + Z_pi h` with `h(S) = 0` is kept as an independent route.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ModelError, Policy, QueueModel, RateField, RewardTable};

/// Partial products leaving `[LOG_SPACE_LOW, LOG_SPACE_HIGH]` switch the
/// product-form weights to log space.
const LOG_SPACE_HIGH: f64 = 1e300;
const LOG_SPACE_LOW: f64 = 1e-300;

const REFINEMENT_STEPS: usize = 5;

/// Birth rates and reward rates of the chain induced by a policy, for
/// states `0..=S` (both are zero at `S`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub birth: Vec<f64>,
    pub reward: Vec<f64>,
}

impl Dynamics {
    pub fn capacity(&self) -> usize {
        self.birth.len() - 1
    }
}

/// Gain and relative bias of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(rename = "rho")]
    pub gain: f64,
    /// `h(s) - h(s+1)` for `s = 0..S-1`.
    #[serde(rename = "nabla_h")]
    pub relative_bias: Vec<f64>,
}

impl Evaluation {
    /// Full bias normalized so that `h(S) = 0`.
    pub fn full_bias(&self) -> Vec<f64> {
        let n = self.relative_bias.len();
        let mut h = vec![0.0; n + 1];
        for s in (0..n).rev() {
            h[s] = h[s + 1] + self.relative_bias[s];
        }
        h
    }
}

/// `Lambda_pi(s) = sum_{i in pi(s)} lambda_i(s)` and
/// `R_pi(s) = sum_{i in pi(s)} lambda_i(s) r_i(s)`.
pub fn effective_dynamics(policy: &Policy, rates: &RateField, table: &RewardTable) -> Dynamics {
    let capacity = table.num_states();
    let mut birth = vec![0.0; capacity + 1];
    let mut reward = vec![0.0; capacity + 1];
    for s in 0..capacity {
        for &i in policy.accepted(s) {
            let lambda = rates.rate(i, s);
            birth[s] += lambda;
            reward[s] += lambda * table.reward(i, s);
        }
    }
    Dynamics { birth, reward }
}

/// Stationary distribution of the birth-death chain with birth rates
/// `birth[0..S-1]` and the model's death rates.
pub fn stationary_distribution(birth: &[f64], model: &QueueModel) -> Vec<f64> {
    let capacity = model.capacity;
    let mut weights = Vec::with_capacity(capacity + 1);
    weights.push(1.0);
    let mut product = 1.0_f64;
    let mut needs_log = false;
    for q in 0..capacity {
        product *= birth[q] / model.service_rate_at(q + 1);
        if product > LOG_SPACE_HIGH || (product > 0.0 && product < LOG_SPACE_LOW) {
            needs_log = true;
            break;
        }
        weights.push(product);
    }
    if needs_log {
        return log_space_distribution(birth, model);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

fn log_space_distribution(birth: &[f64], model: &QueueModel) -> Vec<f64> {
    let mut log_weights = Vec::with_capacity(model.capacity + 1);
    log_weights.push(0.0_f64);
    let mut acc = 0.0_f64;
    for q in 0..model.capacity {
        // ln(0) = -inf propagates: states past a zero birth rate get weight 0
        acc += birth[q].ln() - model.service_rate_at(q + 1).ln();
        log_weights.push(acc);
    }
    let peak = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_weights.iter().map(|lw| (lw - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

/// Closed-form gain: the stationary average of `R_pi`.
pub fn average_reward(dynamics: &Dynamics, model: &QueueModel) -> f64 {
    stationary_distribution(&dynamics.birth, model)
        .iter()
        .zip(&dynamics.reward)
        .map(|(p, r)| p * r)
        .sum()
}

/// Relative bias from the balance equations. O(S^2).
///
/// Running the recursion down from `dh(S-1) = rho / mu(S)` evaluates
/// `pi(s) Lambda(s) dh(s) = sum_{q>s} pi(q) (rho - R(q))`, which cancels
/// badly when most of the stationary mass lies above `s`. States whose
/// lower tail carries at most half the mass are therefore computed
/// upward from `dh(0) = (R(0) - rho) / Lambda(0)`, the equivalent
/// lower-tail form. Both passes use `R(s) - rho` in the form
/// `sum_q pi(q) (R(s) - R(q))`, which keeps its relative accuracy when
/// `rho` is within rounding of `R(s)`.
pub fn relative_bias_recursive(gain: f64, dynamics: &Dynamics, model: &QueueModel) -> Vec<f64> {
    let capacity = model.capacity;
    let pi = stationary_distribution(&dynamics.birth, model);
    let centered: Vec<f64> = dynamics
        .reward
        .iter()
        .map(|&own| pi.iter().zip(&dynamics.reward).map(|(p, r)| p * (own - r)).sum())
        .collect();

    let mut bias = vec![0.0; capacity];
    bias[capacity - 1] = gain / model.service_rate_at(capacity);
    for s in (1..capacity).rev() {
        bias[s - 1] = (dynamics.birth[s] * bias[s] - centered[s]) / model.service_rate_at(s);
    }

    let mut lower_mass = 0.0;
    let mut below = 0.0;
    for s in 0..capacity {
        lower_mass += pi[s];
        let birth = dynamics.birth[s];
        if lower_mass > 0.5 || birth <= 0.0 {
            break;
        }
        let down = if s > 0 { model.service_rate_at(s) * below } else { 0.0 };
        bias[s] = (centered[s] + down) / birth;
        below = bias[s];
    }
    bias
}

/// Relative bias as `U (rho e - R_pi)` with
/// `U[s][q] = 1{q > s} / mu(s+1) * prod_{p=s+1}^{q-1} Lambda_pi(p) / mu(p+1)`
/// for `q = 0..=S`. Builds the full matrix; O(S^2). Used to cross-check the
/// recursion.
pub fn relative_bias_matrix(gain: f64, dynamics: &Dynamics, model: &QueueModel) -> Vec<f64> {
    let capacity = model.capacity;
    let transfer = bias_transfer_matrix(dynamics, model);
    let centered: Vec<f64> = (0..=capacity).map(|q| gain - dynamics.reward[q]).collect();
    transfer
        .iter()
        .map(|row| row.iter().zip(&centered).map(|(u, v)| u * v).sum())
        .collect()
}

/// The `S x (S+1)` matrix `U` of [`relative_bias_matrix`].
pub fn bias_transfer_matrix(dynamics: &Dynamics, model: &QueueModel) -> Vec<Vec<f64>> {
    let capacity = model.capacity;
    (0..capacity)
        .map(|s| {
            let mut row = vec![0.0; capacity + 1];
            let mut product = 1.0 / model.service_rate_at(s + 1);
            for q in s + 1..=capacity {
                row[q] = product;
                if q < capacity {
                    product *= dynamics.birth[q] / model.service_rate_at(q + 1);
                }
            }
            row
        })
        .collect()
}

/// Closed-form evaluation (product-form gain, recursive bias).
pub fn evaluate(policy: &Policy, rates: &RateField, model: &QueueModel, table: &RewardTable) -> Evaluation {
    let dynamics = effective_dynamics(policy, rates, table);
    evaluate_dynamics(&dynamics, model)
}

pub fn evaluate_dynamics(dynamics: &Dynamics, model: &QueueModel) -> Evaluation {
    let gain = average_reward(dynamics, model);
    let relative_bias = relative_bias_recursive(gain, dynamics, model);
    Evaluation { gain, relative_bias }
}

/// Gain and full bias from a dense solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEvaluation {
    pub gain: f64,
    /// `h(0..=S)` with `h(S) = 0`.
    pub bias: Vec<f64>,
}

impl DenseEvaluation {
    pub fn relative_bias(&self) -> Vec<f64> {
        self.bias.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

/// Solves `rho = R_pi + Z_pi h`, `h(S) = 0` as an `(S+2)`-unknown dense
/// linear system with LU decomposition.
pub fn evaluate_dense(
    policy: &Policy,
    rates: &RateField,
    model: &QueueModel,
    table: &RewardTable,
) -> Result<DenseEvaluation, ModelError> {
    let dynamics = effective_dynamics(policy, rates, table);
    evaluate_dense_dynamics(&dynamics, model)
}

pub fn evaluate_dense_dynamics(dynamics: &Dynamics, model: &QueueModel) -> Result<DenseEvaluation, ModelError> {
    let capacity = model.capacity;
    let n = capacity + 2;
    // unknowns: [rho, h(0), ..., h(S)]
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..=capacity {
        let birth = if s < capacity { dynamics.birth[s] } else { 0.0 };
        let death = model.service_rate_at(s);
        a[(s, 0)] = 1.0;
        a[(s, s + 1)] = birth + death;
        if s < capacity {
            a[(s, s + 2)] = -birth;
        }
        if s > 0 {
            a[(s, s)] = -death;
        }
        b[s] = dynamics.reward[s];
    }
    a[(n - 1, n - 1)] = 1.0;

    // The LU factors of the rounded matrix are refined against the exact
    // generator: the diagonal `birth + death` is never formed, and the
    // residual is accumulated in double-double arithmetic. Bias entries can
    // span many orders of magnitude, so plain `f64` residuals would cap the
    // attainable accuracy.
    let residual = |x: &DVector<f64>| {
        DVector::from_iterator(
            n,
            (0..n).map(|row| {
                if row == n - 1 {
                    return -x[n - 1];
                }
                let s = row;
                let h = |state: usize| x[state + 1];
                let birth = if s < capacity { dynamics.birth[s] } else { 0.0 };
                let death = model.service_rate_at(s);
                let mut acc = DoubleDouble::new(dynamics.reward[s]);
                acc.sub(x[0]);
                if s < capacity {
                    acc.sub_product(birth, h(s));
                    acc.add_product(birth, h(s + 1));
                }
                if s > 0 {
                    acc.sub_product(death, h(s));
                    acc.add_product(death, h(s - 1));
                }
                acc.value()
            }),
        )
    };
    let lu = a.lu();
    let mut x = lu.solve(&b).ok_or(ModelError::Singular)?;
    for _ in 0..REFINEMENT_STEPS {
        let dx = lu.solve(&residual(&x)).ok_or(ModelError::Singular)?;
        x += dx;
    }
    Ok(DenseEvaluation {
        gain: x[0],
        bias: x.iter().skip(1).copied().collect(),
    })
}

/// Unevaluated sum `hi + lo` with error-free accumulation.
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bv = s - self.hi;
        self.lo += (self.hi - (s - bv)) + (v - bv);
        self.hi = s;
    }

    fn sub(&mut self, v: f64) {
        self.add(-v);
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.add(a.mul_add(b, -p));
    }

    fn sub_product(&mut self, a: f64, b: f64) {
        self.add_product(-a, b);
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Residual of the balance equation at each state `0..=S`, and the
/// magnitude of the largest term entering it.
pub fn balance_residuals(evaluation: &Evaluation, dynamics: &Dynamics, model: &QueueModel) -> Vec<(f64, f64)> {
    let capacity = model.capacity;
    let dh = &evaluation.relative_bias;
    let rho = evaluation.gain;
    (0..=capacity)
        .map(|s| {
            let up = if s < capacity { dynamics.birth[s] * dh[s] } else { 0.0 };
            let down = if s > 0 { model.service_rate_at(s) * dh[s - 1] } else { 0.0 };
            let residual = rho - dynamics.reward[s] + up - down;
            let scale = [rho.abs(), dynamics.reward[s].abs(), up.abs(), down.abs()]
                .into_iter()
                .fold(0.0, f64::max);
            (residual, scale)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_rewards, JobClass};

    fn three_state() -> QueueModel {
        QueueModel::new(2, 1, 1.0, vec![JobClass::new(1.0, 0.0, 1.0)], 1.0, 1.0).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn dynamics_sum_over_admitted_classes() {
        let model = three_state();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let d = effective_dynamics(&Policy::accept_all(2, 1), &rates, &table);
        assert_eq!(d.birth, vec![1.0, 1.0, 0.0]);
        assert_eq!(d.reward, vec![1.0, 1.0, 0.0]);
        let d = effective_dynamics(&Policy::reject_all(2), &rates, &table);
        assert_eq!(d.birth, vec![0.0; 3]);
        assert_eq!(d.reward, vec![0.0; 3]);
    }

    #[test]
    fn dynamics_with_single_admitted_class() {
        // r_1(10) = 19.6 in the two-class Erlang example; admit class 0 only
        let model = QueueModel::new(
            20,
            5,
            0.3,
            vec![JobClass::new(20.0, 0.1, 1.0), JobClass::new(10.0, 0.1, 1.0)],
            1.0,
            4.0,
        )
        .unwrap();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let mut sets = vec![vec![0, 1]; 20];
        sets[10] = vec![0];
        let d = effective_dynamics(&Policy::from_sets(sets), &rates, &table);
        assert_eq!(d.birth[10], 1.0);
        assert!(close(d.reward[10], 19.6));
    }

    #[test]
    fn stationary_distribution_small_chains() {
        let model = three_state();
        let pi = stationary_distribution(&[1.0, 1.0], &model);
        for p in &pi {
            assert!(close(*p, 1.0 / 3.0));
        }
        let fast = QueueModel::new(2, 1, 2.0, vec![JobClass::new(1.0, 0.0, 1.0)], 1.0, 1.0).unwrap();
        let pi = stationary_distribution(&[1.0, 1.0], &fast);
        assert!(close(pi[0], 4.0 / 7.0) && close(pi[1], 2.0 / 7.0) && close(pi[2], 1.0 / 7.0));
        let pi = stationary_distribution(&[0.0, 0.0], &model);
        assert_eq!(pi, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn stationary_distribution_switches_to_log_space() {
        // ratio 100 per step over 400 states overflows plain products
        let model = QueueModel::new(400, 1, 0.01, vec![JobClass::new(1.0, 0.0, 1.0)], 1.0, 1.0).unwrap();
        let pi = stationary_distribution(&vec![1.0; 400], &model);
        assert!(pi.iter().all(|p| p.is_finite()));
        assert!(close(pi.iter().sum(), 1.0));
        // geometric tail: pi(S) / pi(S-1) = 100
        assert!(close(pi[400] / pi[399], 100.0));
        assert!(close(pi[400], 0.99));

        // and the other direction: ratio 1/100
        let model = QueueModel::new(400, 1, 100.0, vec![JobClass::new(1.0, 0.0, 1.0)], 1.0, 1.0).unwrap();
        let pi = stationary_distribution(&vec![1.0; 400], &model);
        assert!(close(pi[0], 0.99));
        assert!(pi[400] >= 0.0 && pi[1] > 0.0);
    }

    #[test]
    fn three_state_gain_and_bias() {
        let model = three_state();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let d = effective_dynamics(&Policy::accept_all(2, 1), &rates, &table);
        let rho = average_reward(&d, &model);
        assert!(close(rho, 2.0 / 3.0));
        let rec = relative_bias_recursive(rho, &d, &model);
        let mat = relative_bias_matrix(rho, &d, &model);
        for (got, want) in rec.iter().zip([1.0 / 3.0, 2.0 / 3.0]) {
            assert!(close(*got, want));
        }
        for (got, want) in mat.iter().zip([1.0 / 3.0, 2.0 / 3.0]) {
            assert!(close(*got, want));
        }
        let dense = evaluate_dense(&Policy::accept_all(2, 1), &rates, &model, &table).unwrap();
        assert!(close(dense.gain, 2.0 / 3.0));
        for (got, want) in dense.bias.iter().zip([1.0, 2.0 / 3.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reject_all_evaluates_to_zero() {
        let model = three_state();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let eval = evaluate(&Policy::reject_all(2), &rates, &model, &table);
        assert_eq!(eval.gain, 0.0);
        assert_eq!(eval.relative_bias, vec![0.0, 0.0]);
        let dense = evaluate_dense(&Policy::reject_all(2), &rates, &model, &table).unwrap();
        assert!(dense.gain.abs() < 1e-15);
        assert!(dense.bias.iter().all(|h| h.abs() < 1e-15));
    }

    #[test]
    fn single_state_bias_is_gain_over_service() {
        let model = QueueModel::new(1, 1, 0.7, vec![JobClass::new(2.0, 0.0, 1.3)], 1.0, 2.0).unwrap();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let d = effective_dynamics(&Policy::accept_all(1, 1), &rates, &table);
        let rho = average_reward(&d, &model);
        assert!(close(rho, 2.6 * 0.7 / 2.0));
        assert!(close(relative_bias_matrix(rho, &d, &model)[0], rho / 0.7));
        assert!(close(relative_bias_recursive(rho, &d, &model)[0], rho / 0.7));
    }

    #[test]
    fn top_state_bias_carries_the_gain() {
        let model = QueueModel::new(
            9,
            3,
            0.4,
            vec![JobClass::new(6.0, 0.3, 0.8), JobClass::new(2.0, 0.1, 0.9)],
            1.0,
            3.0,
        )
        .unwrap();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let eval = evaluate(&Policy::from_thresholds(9, &[8, 4]), &rates, &model, &table);
        assert!(close(model.max_service_rate() * eval.relative_bias[8], eval.gain));
        let h = eval.full_bias();
        assert_eq!(h[9], 0.0);
        assert!(close(h[0] - h[1], eval.relative_bias[0]));
    }

    #[test]
    fn balance_residuals_vanish_for_closed_form() {
        let model = QueueModel::new(
            12,
            2,
            0.5,
            vec![JobClass::new(5.0, 0.2, 0.6), JobClass::new(3.0, 0.0, 0.7)],
            1.0,
            2.0,
        )
        .unwrap();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let policy = Policy::from_thresholds(12, &[10, 6]);
        let d = effective_dynamics(&policy, &rates, &table);
        let eval = evaluate_dynamics(&d, &model);
        for (res, scale) in balance_residuals(&eval, &d, &model) {
            assert!(res.abs() <= 1e-12 * scale.max(1.0), "{res} at scale {scale}");
        }
    }
}
