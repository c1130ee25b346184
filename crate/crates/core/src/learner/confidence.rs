use serde::Serialize;

use super::{EstimatorState, LearnerError};
use crate::model::{QueueModel, RateField, RewardTable};

/// Plausible global rates and class distributions after an episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSet {
    pub lambda_hat: f64,
    pub eps_lambda: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_bar: f64,
    pub p_hat: Vec<f64>,
    pub eps_p: f64,
    /// The raw interval missed `[Lambda_min, Lambda_bar]` and was clamped.
    pub clamped: bool,
}

impl ConfidenceSet {
    /// The first episode's set: the largest rate and every class
    /// distribution.
    pub fn initial(model: &QueueModel) -> Self {
        let m = model.num_classes();
        Self {
            lambda_hat: model.lambda_max,
            eps_lambda: 0.0,
            lambda_lo: model.lambda_max,
            lambda_hi: model.lambda_max,
            lambda_bar: model.lambda_max,
            p_hat: vec![1.0 / m as f64; m],
            eps_p: 2.0,
            clamped: false,
        }
    }

    pub fn contains_rate(&self, rate: f64) -> bool {
        self.lambda_lo <= rate && rate <= self.lambda_hi
    }

    /// L1 distance from `p_hat` within `eps_p`.
    pub fn contains_distribution(&self, p: &[f64]) -> bool {
        let dist: f64 = p.iter().zip(&self.p_hat).map(|(a, b)| (a - b).abs()).sum();
        dist <= self.eps_p
    }
}

/// `4 (Lambda_max^2 / Lambda_min) sqrt((2/nu) ln(1/delta))`
pub fn rate_radius(nu: u64, delta: f64, model: &QueueModel) -> f64 {
    4.0 * model.lambda_max.powi(2) / model.lambda_min * ((2.0 / nu as f64) * (1.0 / delta).ln()).sqrt()
}

/// `sqrt((2m/N) ln(2/delta))`
pub fn distribution_radius(num_classes: usize, total: u64, delta: f64) -> f64 {
    ((2.0 * num_classes as f64 / total as f64) * (2.0 / delta).ln()).sqrt()
}

/// Upper rate bound obtained by inverting the inverse-mean interval, with
/// `eps = (4/Lambda_min) sqrt((2/nu) ln(1/delta))`.
pub fn refine_lambda_bar(lambda_hat: f64, nu: u64, delta: f64, model: &QueueModel) -> f64 {
    let eps = 4.0 / model.lambda_min * ((2.0 / nu as f64) * (1.0 / delta).ln()).sqrt();
    refine_lambda_bar_with_radius(lambda_hat, eps, model)
}

pub fn refine_lambda_bar_with_radius(lambda_hat: f64, eps: f64, model: &QueueModel) -> f64 {
    let lambda_max = model.lambda_max;
    let additive = lambda_hat + lambda_max.powi(2) * eps;
    if lambda_hat * eps >= 1.0 {
        lambda_max.min(additive)
    } else {
        lambda_max.min(lambda_hat / (1.0 - lambda_hat * eps)).min(additive)
    }
}

/// Confidence set from the estimator at the end of an episode.
pub fn build_confidence(state: &EstimatorState, model: &QueueModel) -> Result<ConfidenceSet, LearnerError> {
    if state.tau == 0 {
        return Err(LearnerError::EmptyEpisode);
    }
    let delta = state.delta;
    let nu = state.tau;
    let lambda_hat = state.lambda_hat();
    let eps_lambda = rate_radius(nu, delta, model);
    let p_hat = state.p_hat();
    let eps_p = distribution_radius(model.num_classes(), state.total, delta);

    let (lambda_lo, lambda_hi, lambda_bar, clamped) = if lambda_hat.is_infinite() {
        (model.lambda_min, model.lambda_max, model.lambda_max, false)
    } else {
        let bar = refine_lambda_bar(lambda_hat, nu, delta, model);
        let lo = (lambda_hat - eps_lambda).max(model.lambda_min);
        let hi = (lambda_hat + eps_lambda).min(bar);
        if lo <= hi {
            (lo, hi, bar, false)
        } else {
            let v = lambda_hat.clamp(model.lambda_min, bar.max(model.lambda_min));
            (v, v, bar, true)
        }
    };
    Ok(ConfidenceSet {
        lambda_hat,
        eps_lambda,
        lambda_lo,
        lambda_hi,
        lambda_bar,
        p_hat,
        eps_p,
        clamped,
    })
}

/// Distribution in the L1 ball around `p_hat` maximizing the expected
/// reward when classes are ranked by `priority` (best first): move up to
/// `eps_p / 2` mass onto the best class, taken from the worst classes
/// first.
pub fn optimistic_distribution(p_hat: &[f64], eps_p: f64, priority: &[usize]) -> Vec<f64> {
    let mut p = p_hat.to_vec();
    let top = priority[0];
    if eps_p / 2.0 >= 1.0 - p[top] {
        p.iter_mut().for_each(|x| *x = 0.0);
        p[top] = 1.0;
        return p;
    }
    let shift = (eps_p / 2.0).max(0.0);
    p[top] += shift;
    let mut excess = shift;
    for &i in priority.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if i == top {
            continue;
        }
        if excess >= p[i] {
            excess -= p[i];
            p[i] = 0.0;
        } else {
            p[i] -= excess;
            excess = 0.0;
        }
    }
    p
}

/// Optimistic rate field: the largest plausible global rate split by the
/// per-state optimistic class distribution. The full state copies the row
/// below it.
pub fn optimistic_model(conf: &ConfidenceSet, table: &RewardTable) -> RateField {
    let capacity = table.num_states();
    let mut rows: Vec<Vec<f64>> = (0..capacity)
        .map(|s| {
            optimistic_distribution(&conf.p_hat, conf.eps_p, table.priority_order(s))
                .into_iter()
                .map(|p| conf.lambda_hi * p)
                .collect()
        })
        .collect();
    rows.push(rows[capacity - 1].clone());
    RateField::from_rows(rows).expect("optimistic rates are finite and nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_rewards, JobClass};

    fn model() -> QueueModel {
        QueueModel::new(
            20,
            5,
            0.3,
            vec![JobClass::new(20.0, 0.1, 1.0), JobClass::new(10.0, 0.1, 1.0)],
            1.0,
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn rate_radius_value() {
        let eps = rate_radius(512, 0.01, &model());
        let expected = 64.0 * (2.0 * 100f64.ln() / 512.0).sqrt();
        assert!((eps - expected).abs() < 1e-12);
        assert!((eps - 8.584).abs() < 1e-3, "{eps}");
    }

    #[test]
    fn distribution_radius_value() {
        let eps = distribution_radius(2, 800, 0.01);
        assert!((eps - 0.1628).abs() < 1e-4, "{eps}");
    }

    #[test]
    fn lambda_bar_branches() {
        let m = model();
        assert_eq!(refine_lambda_bar_with_radius(2.0, 0.6, &m), 4.0);
        assert!((refine_lambda_bar_with_radius(2.0, 0.1, &m) - 2.5).abs() < 1e-12);
        let tiny = refine_lambda_bar_with_radius(2.0, 1e-12, &m);
        assert!((tiny - 2.0).abs() < 1e-9);
    }

    #[test]
    fn optimistic_distribution_examples() {
        assert_eq!(optimistic_distribution(&[0.5, 0.5], 0.2, &[0, 1]), vec![0.6, 0.4]);
        assert_eq!(optimistic_distribution(&[0.2, 0.3, 0.5], 2.0, &[1, 0, 2]), vec![0.0, 1.0, 0.0]);
        assert_eq!(optimistic_distribution(&[0.2, 0.8], 0.0, &[0, 1]), vec![0.2, 0.8]);
        // mass comes from the worst class first
        let p = optimistic_distribution(&[0.2, 0.5, 0.3], 0.8, &[0, 1, 2]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn initial_set_gives_point_mass_on_top_class() {
        let m = model();
        let table = expected_rewards(&m);
        let rates = optimistic_model(&ConfidenceSet::initial(&m), &table);
        for s in 0..=20 {
            assert_eq!(rates.rates_at(s), &[4.0, 0.0]);
        }
    }

    #[test]
    fn infinite_estimate_uses_full_range() {
        let m = model();
        let mut e = EstimatorState::new(2, 1.0, super::super::Truncation::Enabled);
        e.start_episode(0.01).unwrap();
        e.update(100.0, 0).unwrap();
        let conf = build_confidence(&e, &m).unwrap();
        assert_eq!((conf.lambda_lo, conf.lambda_hi), (1.0, 4.0));
    }

    #[test]
    fn empty_episode_is_an_error() {
        let mut e = EstimatorState::new(2, 1.0, super::super::Truncation::Enabled);
        e.start_episode(0.01).unwrap();
        assert!(matches!(build_confidence(&e, &model()), Err(LearnerError::EmptyEpisode)));
    }
}
