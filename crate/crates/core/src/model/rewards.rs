use serde::{Deserialize, Serialize};

use super::QueueModel;

/// Expected admission rewards `r_i(s)` for states `0..S-1`, with the
/// per-state priority order of the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    /// `rewards[s][i]`
    rewards: Vec<Vec<f64>>,
    /// `priority[s]` lists class indices by decreasing reward; ties go to
    /// the smaller index.
    priority: Vec<Vec<usize>>,
}

impl RewardTable {
    /// Builds a table from explicit rewards indexed `[state][class]`.
    pub fn from_rewards(rewards: Vec<Vec<f64>>) -> Self {
        let priority = rewards.iter().map(|row| priority_order(row)).collect();
        Self { rewards, priority }
    }

    pub fn num_states(&self) -> usize {
        self.rewards.len()
    }

    pub fn num_classes(&self) -> usize {
        self.rewards.first().map_or(0, Vec::len)
    }

    pub fn reward(&self, class: usize, state: usize) -> f64 {
        self.rewards[state][class]
    }

    /// All class rewards at `state`.
    pub fn rewards_at(&self, state: usize) -> &[f64] {
        &self.rewards[state]
    }

    pub fn priority_order(&self, state: usize) -> &[usize] {
        &self.priority[state]
    }

    pub fn max_reward_at(&self, state: usize) -> f64 {
        self.rewards[state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn priority_order(row: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    // stable sort keeps the smaller index first on ties
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    order
}

/// Expected reward of admitting each class in each state.
///
/// With linear holding costs the waiting time of a job admitted in state
/// `s >= c` is Erlang(`s-c+1`, `c*mu`), so
/// `r_i(s) = R_i - gamma_i * (s-c+1)/(c*mu)`; for `s < c` the job starts
/// service immediately and `r_i(s) = R_i`. A model carrying an
/// `expected_cost` table uses `r_i(s) = R_i - expected_cost[i][s]` instead.
pub fn expected_rewards(model: &QueueModel) -> RewardTable {
    let c = model.servers;
    let cmu = model.max_service_rate();
    let rewards = (0..model.capacity)
        .map(|s| {
            model
                .classes
                .iter()
                .enumerate()
                .map(|(i, class)| {
                    let cost = match &model.expected_cost {
                        Some(table) => table[i][s],
                        None => {
                            let waiting_stages = (s + 1).saturating_sub(c) as f64;
                            class.holding_cost * waiting_stages / cmu
                        }
                    };
                    class.reward - cost
                })
                .collect()
        })
        .collect();
    RewardTable::from_rewards(rewards)
}
