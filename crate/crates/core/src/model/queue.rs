use serde::{Deserialize, Serialize};

use super::ModelError;

/// One job class: immediate admission reward, linear holding-cost rate and
/// Poisson arrival rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobClass {
    #[serde(rename = "R")]
    pub reward: f64,
    #[serde(rename = "gamma", default)]
    pub holding_cost: f64,
    #[serde(rename = "lambda")]
    pub arrival_rate: f64,
}

impl JobClass {
    pub fn new(reward: f64, holding_cost: f64, arrival_rate: f64) -> Self {
        Self {
            reward,
            holding_cost,
            arrival_rate,
        }
    }
}

/// An M/M/c/S queue with `m` job classes.
///
/// States are the number of jobs in the system, `0..=capacity`. With `s`
/// jobs present the total service rate is `min(s, c) * mu`.
///
/// The JSON form uses the short keys `S`, `c`, `mu`, `classes`
/// (`[{R, gamma, lambda}]`), `lambda_min` and `lambda_max`. An optional
/// `expected_cost` table (`[class][state]`, states `0..S-1`) replaces the
/// linear holding-cost computation with user-supplied expected costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    #[serde(rename = "S")]
    pub capacity: usize,
    #[serde(rename = "c")]
    pub servers: usize,
    #[serde(rename = "mu")]
    pub service_rate: f64,
    pub classes: Vec<JobClass>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_cost: Option<Vec<Vec<f64>>>,
}

impl QueueModel {
    /// Builds and validates a model with linear holding costs.
    pub fn new(
        capacity: usize,
        servers: usize,
        service_rate: f64,
        classes: Vec<JobClass>,
        lambda_min: f64,
        lambda_max: f64,
    ) -> Result<Self, ModelError> {
        let model = Self {
            capacity,
            servers,
            service_rate,
            classes,
            lambda_min,
            lambda_max,
            expected_cost: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// Replaces the Erlang-mean holding cost with an explicit table of
    /// expected costs `E[C_i(W(s))]`, indexed `[class][state]`.
    pub fn with_expected_cost(mut self, table: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        self.expected_cost = Some(table);
        self.validate()?;
        Ok(self)
    }

    /// Parses a JSON model document. Errors name the offending key.
    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let model: Self = serde_path_to_error::deserialize(de).map_err(|err| ModelError::Parse {
            key: err.path().to_string(),
            message: err.inner().to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |key: &str, reason: String| ModelError::Invalid {
            key: key.to_string(),
            reason,
        };
        if self.capacity == 0 {
            return Err(invalid("S", "capacity must be positive".into()));
        }
        if self.servers == 0 || self.servers > self.capacity {
            return Err(invalid(
                "c",
                format!("servers must lie in 1..={}, got {}", self.capacity, self.servers),
            ));
        }
        if !(self.service_rate.is_finite() && self.service_rate > 0.0) {
            return Err(invalid("mu", format!("service rate must be positive, got {}", self.service_rate)));
        }
        if self.classes.is_empty() {
            return Err(invalid("classes", "at least one job class is required".into()));
        }
        for (i, class) in self.classes.iter().enumerate() {
            if !(class.reward.is_finite() && class.reward >= 0.0) {
                return Err(invalid(&format!("classes[{i}].R"), format!("reward must be nonnegative, got {}", class.reward)));
            }
            if !(class.holding_cost.is_finite() && class.holding_cost >= 0.0) {
                return Err(invalid(
                    &format!("classes[{i}].gamma"),
                    format!("holding cost must be nonnegative, got {}", class.holding_cost),
                ));
            }
            if !(class.arrival_rate.is_finite() && class.arrival_rate > 0.0) {
                return Err(invalid(
                    &format!("classes[{i}].lambda"),
                    format!("arrival rate must be positive, got {}", class.arrival_rate),
                ));
            }
        }
        if !(self.lambda_min.is_finite() && self.lambda_min > 0.0) {
            return Err(invalid("lambda_min", format!("must be positive, got {}", self.lambda_min)));
        }
        if !(self.lambda_max.is_finite() && self.lambda_max >= self.lambda_min) {
            return Err(invalid(
                "lambda_max",
                format!("must be at least lambda_min = {}, got {}", self.lambda_min, self.lambda_max),
            ));
        }
        let total = self.total_arrival_rate();
        if total < self.lambda_min || total > self.lambda_max {
            return Err(invalid(
                "lambda_max",
                format!(
                    "global arrival rate {total} lies outside [{}, {}]",
                    self.lambda_min, self.lambda_max
                ),
            ));
        }
        if let Some(table) = &self.expected_cost {
            if table.len() != self.classes.len() {
                return Err(invalid(
                    "expected_cost",
                    format!("expected {} rows (one per class), got {}", self.classes.len(), table.len()),
                ));
            }
            for (i, row) in table.iter().enumerate() {
                if row.len() != self.capacity {
                    return Err(invalid(
                        &format!("expected_cost[{i}]"),
                        format!("expected {} entries (states 0..S-1), got {}", self.capacity, row.len()),
                    ));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(&format!("expected_cost[{i}]"), "entries must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Total service rate with `s` jobs in the system.
    pub fn service_rate_at(&self, s: usize) -> f64 {
        s.min(self.servers) as f64 * self.service_rate
    }

    /// `mu(S) = c * mu`.
    pub fn max_service_rate(&self) -> f64 {
        self.service_rate_at(self.capacity)
    }

    pub fn total_arrival_rate(&self) -> f64 {
        self.classes.iter().map(|c| c.arrival_rate).sum()
    }

    pub fn arrival_rates(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.arrival_rate).collect()
    }

    pub fn max_reward(&self) -> f64 {
        self.classes.iter().map(|c| c.reward).fold(0.0, f64::max)
    }
}
