use super::{improve, Method, SolveError, SolveResult};
use crate::model::{effective_dynamics, evaluate, Evaluation, Policy, QueueModel, RateField, RewardTable};

/// Relative slack allowed when checking birth rates against `Lambda_max`.
const RATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ValueIterationOptions {
    pub max_iterations: usize,
}

impl Default for ValueIterationOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
        }
    }
}

/// Discrete-time chain obtained by uniformizing a policy's birth-death
/// process at rate `U = Lambda_max + mu_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedChain {
    pub rate: f64,
    /// `P(s, s+1)`
    pub up: Vec<f64>,
    /// `P(s, s-1)`
    pub down: Vec<f64>,
    /// `R_pi(s) / U`
    pub reward: Vec<f64>,
}

impl UniformizedChain {
    pub fn num_states(&self) -> usize {
        self.up.len()
    }

    pub fn stay(&self, s: usize) -> f64 {
        1.0 - self.up[s] - self.down[s]
    }

    /// `R/U + P u`
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.num_states();
        (0..n)
            .map(|s| {
                let mut next = self.reward[s] + self.stay(s) * u[s];
                if s + 1 < n {
                    next += self.up[s] * u[s + 1];
                }
                if s > 0 {
                    next += self.down[s] * u[s - 1];
                }
                next
            })
            .collect()
    }

    /// Dense transition matrix, row-major.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        (0..n)
            .map(|s| {
                let mut row = vec![0.0; n];
                row[s] = self.stay(s);
                if s + 1 < n {
                    row[s + 1] = self.up[s];
                }
                if s > 0 {
                    row[s - 1] = self.down[s];
                }
                row
            })
            .collect()
    }
}

fn uniformization_rate(rates: &RateField, model: &QueueModel) -> Result<f64, SolveError> {
    let bound = model.lambda_max;
    for s in 0..model.capacity {
        let rate = rates.global(s);
        if rate > bound * (1.0 + RATE_SLACK) {
            return Err(SolveError::RateAboveBound { state: s, rate, bound });
        }
    }
    Ok(bound + model.max_service_rate())
}

pub fn uniformize(
    policy: &Policy,
    rates: &RateField,
    model: &QueueModel,
    table: &RewardTable,
) -> Result<UniformizedChain, SolveError> {
    rates.check_shape(model)?;
    policy.check_shape(model.capacity, model.num_classes())?;
    let rate = uniformization_rate(rates, model)?;
    let dynamics = effective_dynamics(policy, rates, table);
    let capacity = model.capacity;
    Ok(UniformizedChain {
        rate,
        up: (0..=capacity).map(|s| dynamics.birth[s] / rate).collect(),
        down: (0..=capacity).map(|s| model.service_rate_at(s) / rate).collect(),
        reward: dynamics.reward.iter().map(|r| r / rate).collect(),
    })
}

/// Initial values `u(s) = h(s) - h(0)` built from a relative bias.
pub fn warm_start(eval: &Evaluation) -> Vec<f64> {
    let mut u = Vec::with_capacity(eval.relative_bias.len() + 1);
    let mut acc = 0.0;
    u.push(0.0);
    for &d in &eval.relative_bias {
        acc -= d;
        u.push(acc);
    }
    u
}

fn relative_differences(u: &[f64]) -> Vec<f64> {
    u.windows(2).map(|w| w[0] - w[1]).collect()
}

/// One Bellman sweep of the uniformized chain with the greedy policy.
fn sweep(u: &[f64], rates: &RateField, model: &QueueModel, table: &RewardTable, rate: f64) -> (Vec<f64>, Policy) {
    let policy = improve(table, &relative_differences(u));
    let capacity = model.capacity;
    let next = (0..=capacity)
        .map(|s| {
            let mut drift = 0.0;
            if s < capacity {
                let du = u[s] - u[s + 1];
                for &i in policy.accepted(s) {
                    drift += rates.rate(i, s) * (table.reward(i, s) - du);
                }
            }
            if s > 0 {
                drift += model.service_rate_at(s) * (u[s - 1] - u[s]);
            }
            u[s] + drift / rate
        })
        .collect();
    (next, policy)
}

/// Relative value iteration on the uniformized chain. Stops when the span
/// of `u_{l+1} - u_l` drops below `eps / U`. The returned policy is the
/// one that produced `u_{l+1}` (greedy in `u_l`) and is `eps`-optimal in
/// gain.
pub fn value_iteration(
    rates: &RateField,
    model: &QueueModel,
    table: &RewardTable,
    eps: f64,
    initial: Option<&[f64]>,
) -> Result<SolveResult, SolveError> {
    value_iteration_with(rates, model, table, eps, initial, &ValueIterationOptions::default())
}

pub fn value_iteration_with(
    rates: &RateField,
    model: &QueueModel,
    table: &RewardTable,
    eps: f64,
    initial: Option<&[f64]>,
    options: &ValueIterationOptions,
) -> Result<SolveResult, SolveError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(SolveError::InvalidTolerance(eps));
    }
    rates.check_shape(model)?;
    let rate = uniformization_rate(rates, model)?;
    let capacity = model.capacity;
    let mut u = match initial {
        Some(u0) if u0.len() == capacity + 1 => u0.to_vec(),
        Some(u0) => {
            return Err(crate::model::ModelError::Dimension(format!(
                "initial values have length {}, expected {}",
                u0.len(),
                capacity + 1
            ))
            .into())
        }
        None => vec![0.0; capacity + 1],
    };

    for iteration in 1..=options.max_iterations {
        let (next, greedy) = sweep(&u, rates, model, table, rate);
        let (lo, hi) = next
            .iter()
            .zip(&u)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let span = hi - lo;
        // keep values bounded; the span is shift invariant
        let anchor = next[capacity];
        u = next.into_iter().map(|x| x - anchor).collect();
        if span < eps / rate {
            let eval = evaluate(&greedy, rates, model, table);
            return Ok(SolveResult {
                policy: greedy,
                eval,
                iterations: iteration,
                method: Method::ValueIteration,
                vi_residual: Some(span * rate),
            });
        }
    }
    Err(SolveError::NonTermination {
        method: Method::ValueIteration,
        limit: options.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_rewards, JobClass};
    use crate::solvers::policy_iteration;

    fn three_state() -> QueueModel {
        QueueModel::new(2, 1, 1.0, vec![JobClass::new(1.0, 0.0, 1.0)], 1.0, 1.0).unwrap()
    }

    #[test]
    fn three_state_transition_rows() {
        let model = three_state();
        let chain = uniformize(
            &Policy::accept_all(2, 1),
            &RateField::from_model(&model),
            &model,
            &expected_rewards(&model),
        )
        .unwrap();
        assert_eq!(chain.rate, 2.0);
        assert_eq!(
            chain.transition_matrix(),
            vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 0.5, 0.5]]
        );
        assert_eq!(chain.reward, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn rate_above_bound_is_rejected() {
        let model = three_state();
        let rates = RateField::constant(2, &[1.5]);
        let err = uniformize(&Policy::accept_all(2, 1), &rates, &model, &expected_rewards(&model)).unwrap_err();
        assert!(matches!(err, SolveError::RateAboveBound { state: 0, .. }));
    }

    #[test]
    fn agrees_with_policy_iteration() {
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
        let pi = policy_iteration(&rates, &model, &table, &Policy::accept_all(20, 2)).unwrap();
        let vi = value_iteration(&rates, &model, &table, 1e-8, None).unwrap();
        assert!(vi.eval.gain >= pi.eval.gain - 1e-8);
        assert!(vi.eval.gain <= pi.eval.gain + 1e-12);
        assert!(vi.vi_residual.unwrap() < 1e-8);
    }

    #[test]
    fn exact_warm_start_converges_immediately() {
        let model = three_state();
        let table = expected_rewards(&model);
        let rates = RateField::from_model(&model);
        let pi = policy_iteration(&rates, &model, &table, &Policy::reject_all(2)).unwrap();
        let u0 = warm_start(&pi.eval);
        let vi = value_iteration(&rates, &model, &table, 1e-9, Some(&u0)).unwrap();
        assert!(vi.iterations <= 2);
        assert_eq!(vi.policy, pi.policy);
    }

    #[test]
    fn warm_start_reconstructs_bias_differences() {
        let eval = Evaluation {
            gain: 1.0,
            relative_bias: vec![0.5, 0.25],
        };
        assert_eq!(warm_start(&eval), vec![0.0, -0.5, -0.75]);
    }

    #[test]
    fn nonpositive_tolerance_is_an_error() {
        let model = three_state();
        let err = value_iteration(&RateField::from_model(&model), &model, &expected_rewards(&model), 0.0, None)
            .unwrap_err();
        assert!(matches!(err, SolveError::InvalidTolerance(_)));
    }
}
