use serde::{Deserialize, Serialize};

use super::LearnerError;

/// Doubling episode schedule: `t_1` given, `t_k = 2^(k-2) t_1` for `k >= 2`,
/// so episode `k` ends at `T_k = 2^(k-1) t_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSchedule {
    pub t1: f64,
}

impl EpisodeSchedule {
    pub fn new(t1: f64) -> Result<Self, LearnerError> {
        if !(t1.is_finite() && t1 > 0.0) {
            return Err(LearnerError::InvalidSchedule(format!("t1 must be positive, got {t1}")));
        }
        Ok(Self { t1 })
    }

    /// `t_k`, with `k` starting at 1.
    pub fn duration(&self, k: u32) -> f64 {
        assert!(k >= 1);
        if k == 1 {
            self.t1
        } else {
            self.t1 * 2f64.powi(k as i32 - 2)
        }
    }

    /// `T_k`
    pub fn end(&self, k: u32) -> f64 {
        assert!(k >= 1);
        self.t1 * 2f64.powi(k as i32 - 1)
    }

    /// `delta_k = 1 / (mu t_k)`
    pub fn delta(&self, k: u32, service_rate: f64) -> f64 {
        1.0 / (service_rate * self.duration(k))
    }

    /// Smallest `K` with `T_K >= horizon`.
    pub fn episodes_for_horizon(&self, horizon: f64) -> Result<u32, LearnerError> {
        if !(horizon >= self.t1) {
            return Err(LearnerError::InvalidSchedule(format!(
                "horizon {horizon} is shorter than t1 = {}",
                self.t1
            )));
        }
        let mut k = 1;
        while self.end(k) < horizon * (1.0 - 1e-12) {
            k += 1;
        }
        Ok(k)
    }
}
