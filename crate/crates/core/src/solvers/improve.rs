use crate::model::{Evaluation, Policy, QueueModel, RateField, RewardTable};

/// Absolute tolerance for comparing a reward with the relative bias.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// How to treat `r_i(s) = dh(s)` in the improvement step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Admit tied classes. Policy iteration then converges to the
    /// bias-optimal policy.
    #[default]
    Accept,
    /// Admit only classes with strictly larger reward.
    Reject,
}

pub fn improve(table: &RewardTable, relative_bias: &[f64]) -> Policy {
    improve_with_rule(table, relative_bias, TieRule::Accept)
}

pub fn improve_with_rule(table: &RewardTable, relative_bias: &[f64], rule: TieRule) -> Policy {
    let accept = (0..table.num_states())
        .map(|s| {
            let bar = relative_bias[s];
            table
                .priority_order(s)
                .iter()
                .copied()
                .take_while(|&i| {
                    let r = table.reward(i, s);
                    match rule {
                        TieRule::Accept => r >= bar - TIE_TOLERANCE,
                        TieRule::Reject => r > bar + TIE_TOLERANCE,
                    }
                })
                .collect()
        })
        .collect();
    Policy::from_sets(accept)
}

/// Per state `s = 0..=S`, the Bellman right-hand side maximized over the
/// `m+1` priority prefixes minus the gain. Zero everywhere (up to rounding)
/// iff the evaluation satisfies the optimality equation.
pub fn bellman_gaps(eval: &Evaluation, rates: &RateField, model: &QueueModel, table: &RewardTable) -> Vec<f64> {
    let capacity = model.capacity;
    let dh = &eval.relative_bias;
    (0..=capacity)
        .map(|s| {
            let down = if s > 0 { model.service_rate_at(s) * dh[s - 1] } else { 0.0 };
            let mut best = 0.0_f64;
            if s < capacity {
                let mut running = 0.0;
                for &i in table.priority_order(s) {
                    running += rates.rate(i, s) * (table.reward(i, s) - dh[s]);
                    best = best.max(running);
                }
            }
            best + down - eval.gain
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admits_every_class_clearing_the_bar() {
        let table = RewardTable::from_rewards(vec![vec![1.0]; 2]);
        let p = improve(&table, &[1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(p, Policy::accept_all(2, 1));
    }

    #[test]
    fn bar_above_all_rewards_rejects_everything() {
        let table = RewardTable::from_rewards(vec![vec![3.0, 2.0], vec![1.0, 0.5]]);
        let p = improve(&table, &[3.5, 1.5]);
        assert_eq!(p, Policy::reject_all(2));
    }

    #[test]
    fn exact_tie_is_admitted() {
        let table = RewardTable::from_rewards(vec![vec![3.0, 2.0]]);
        assert_eq!(improve(&table, &[2.0]).accepted(0), &[0, 1]);
        assert_eq!(improve_with_rule(&table, &[2.0], TieRule::Reject).accepted(0), &[0]);
    }

    #[test]
    fn admitted_sets_follow_state_priority() {
        let table = RewardTable::from_rewards(vec![vec![1.0, 4.0, 2.0]]);
        assert_eq!(improve(&table, &[1.5]).accepted(0), &[1, 2]);
    }
}
