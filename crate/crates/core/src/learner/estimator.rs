use serde::{Deserialize, Serialize};

use super::LearnerError;

/// Whether large inter-arrival times are zeroed out before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    #[default]
    Enabled,
    /// Plain empirical mean.
    Disabled,
}

/// Online estimate of the global arrival rate and class frequencies.
///
/// Within an episode the rate is estimated from the truncated running mean
/// of inter-arrival times; the `t`-th gap `L` contributes
/// `L * 1{L <= sqrt(2t / (Lambda_min^2 ln(1/delta)))}`. The mean restarts at
/// every episode while class counts accumulate over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorState {
    pub tau: u64,
    pub inv_mean: f64,
    pub delta: f64,
    pub episode_counts: Vec<u64>,
    pub cumulative_counts: Vec<u64>,
    pub total: u64,
    lambda_min: f64,
    truncation: Truncation,
}

impl EstimatorState {
    pub fn new(num_classes: usize, lambda_min: f64, truncation: Truncation) -> Self {
        Self {
            tau: 0,
            inv_mean: 0.0,
            delta: 0.5,
            episode_counts: vec![0; num_classes],
            cumulative_counts: vec![0; num_classes],
            total: 0,
            lambda_min,
            truncation,
        }
    }

    /// Resets the per-episode mean and fixes the episode's confidence level.
    pub fn start_episode(&mut self, delta: f64) -> Result<(), LearnerError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LearnerError::InvalidConfidence(delta));
        }
        self.delta = delta;
        self.tau = 0;
        self.inv_mean = 0.0;
        self.episode_counts.iter_mut().for_each(|n| *n = 0);
        Ok(())
    }

    pub fn threshold(&self, t: u64) -> f64 {
        match self.truncation {
            Truncation::Enabled => {
                (2.0 * t as f64 / (self.lambda_min.powi(2) * (1.0 / self.delta).ln())).sqrt()
            }
            Truncation::Disabled => f64::INFINITY,
        }
    }

    pub fn update(&mut self, gap: f64, class: usize) -> Result<(), LearnerError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(LearnerError::InvalidConfidence(self.delta));
        }
        debug_assert!(gap >= 0.0);
        self.tau += 1;
        let kept = if gap <= self.threshold(self.tau) { gap } else { 0.0 };
        self.inv_mean += (kept - self.inv_mean) / self.tau as f64;
        self.episode_counts[class] += 1;
        self.cumulative_counts[class] += 1;
        self.total += 1;
        Ok(())
    }

    /// `1 / inv_mean`, infinite while the mean is zero.
    pub fn lambda_hat(&self) -> f64 {
        if self.inv_mean > 0.0 {
            1.0 / self.inv_mean
        } else {
            f64::INFINITY
        }
    }

    /// Cumulative empirical class frequencies; uniform before any arrival.
    pub fn p_hat(&self) -> Vec<f64> {
        let m = self.cumulative_counts.len();
        if self.total == 0 {
            return vec![1.0 / m as f64; m];
        }
        self.cumulative_counts
            .iter()
            .map(|&n| n as f64 / self.total as f64)
            .collect()
    }
}
