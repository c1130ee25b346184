use serde::Serialize;

use super::{Evaluation, QueueModel, RateField};

/// Relative slack on the upper comparisons; `dh(S-1) = rho/mu(S)` holds
/// with equality and rounding may put it one ulp above.
const BOUND_SLACK: f64 = 1e-9;

/// Outcome of checking an evaluation against the bias and gain bounds that
/// hold for gain-optimal policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasBoundReport {
    /// `dh(s) > 0` per state.
    pub positive: Vec<bool>,
    /// `dh(s) <= rho / mu_max` per state.
    pub below_gain_ratio: Vec<bool>,
    /// `rho <= sum_i lambda_i(0) R_i`.
    pub gain_below_empty_state_rate: bool,
    /// `rho <= Lambda_max R_max`.
    pub gain_below_global_cap: bool,
}

impl BiasBoundReport {
    pub fn all_pass(&self) -> bool {
        self.positive.iter().all(|&b| b)
            && self.below_gain_ratio.iter().all(|&b| b)
            && self.gain_below_empty_state_rate
            && self.gain_below_global_cap
    }

    /// States violating either per-state bound.
    pub fn violations(&self) -> Vec<usize> {
        (0..self.positive.len())
            .filter(|&s| !(self.positive[s] && self.below_gain_ratio[s]))
            .collect()
    }
}

pub fn check_bias_bounds(eval: &Evaluation, model: &QueueModel, rates: &RateField) -> BiasBoundReport {
    let rho = eval.gain;
    let cap = rho / model.max_service_rate();
    let slack = |bound: f64| bound + BOUND_SLACK * bound.abs().max(f64::MIN_POSITIVE);
    let positive = eval.relative_bias.iter().map(|&d| d > 0.0).collect();
    let below_gain_ratio = eval.relative_bias.iter().map(|&d| d <= slack(cap)).collect();
    let empty_state_rate: f64 = model
        .classes
        .iter()
        .enumerate()
        .map(|(i, class)| rates.rate(i, 0) * class.reward)
        .sum();
    BiasBoundReport {
        positive,
        below_gain_ratio,
        gain_below_empty_state_rate: rho <= slack(empty_state_rate),
        gain_below_global_cap: rho <= slack(model.lambda_max * model.max_reward()),
    }
}
