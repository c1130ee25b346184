use serde::{Deserialize, Serialize};

use super::{ModelError, QueueModel};

/// Per-class arrival rates that may depend on the state, `lambda_i(s)` for
/// `s = 0..=S`. The row for the full state `S` never affects the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateField {
    rows: Vec<Vec<f64>>,
}

impl RateField {
    /// The model's true, state-independent rates.
    pub fn from_model(model: &QueueModel) -> Self {
        Self::constant(model.capacity, &model.arrival_rates())
    }

    pub fn constant(capacity: usize, rates: &[f64]) -> Self {
        Self {
            rows: vec![rates.to_vec(); capacity + 1],
        }
    }

    /// Rows indexed by state `0..=S`; all rows must have the same length and
    /// nonnegative finite entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.len() < 2 || width == 0 {
            return Err(ModelError::Dimension("rate field needs at least two states and one class".into()));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(ModelError::Dimension(format!(
                    "rate row {s} has {} classes, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return Err(ModelError::Invalid {
                    key: format!("rates[{s}]"),
                    reason: "arrival rates must be finite and nonnegative".into(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn capacity(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn num_classes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rate(&self, class: usize, state: usize) -> f64 {
        self.rows[state][class]
    }

    pub fn rates_at(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    /// `Lambda(s) = sum_i lambda_i(s)`.
    pub fn global(&self, state: usize) -> f64 {
        self.rows[state].iter().sum()
    }

    pub fn is_state_independent(&self) -> bool {
        self.rows.iter().all(|row| row == &self.rows[0])
    }

    pub fn check_shape(&self, model: &QueueModel) -> Result<(), ModelError> {
        if self.capacity() != model.capacity || self.num_classes() != model.num_classes() {
            return Err(ModelError::Dimension(format!(
                "rate field is {}x{}, model needs {}x{}",
                self.rows.len(),
                self.num_classes(),
                model.capacity + 1,
                model.num_classes()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_constant_global_rate() {
        let f = RateField::constant(4, &[1.0, 0.5]);
        assert_eq!(f.capacity(), 4);
        assert!(f.is_state_independent());
        for s in 0..=4 {
            assert_eq!(f.global(s), 1.5);
        }
    }

    #[test]
    fn rows_are_validated() {
        assert!(RateField::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(RateField::from_rows(vec![vec![1.0], vec![-1.0]]).is_err());
        assert!(RateField::from_rows(vec![vec![1.0]]).is_err());
        let f = RateField::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(!f.is_state_independent());
        assert_eq!(f.rate(1, 1), 0.5);
    }
}
