use serde::Serialize;

use super::HarnessError;
use crate::model::QueueModel;
use crate::solvers::Method;

/// Constants of the regret bound
/// `a sqrt(T ln(2 mu T)) + b (1 + log2(T / t1)) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub method: Method,
    pub policy_iteration: BoundConstants,
    pub value_iteration: BoundConstants,
    /// Span term of the value-iteration bound.
    pub v: f64,
    /// `v` is evaluated with every optimistic birth rate set to
    /// `Lambda_max`, its largest admissible value.
    pub v_worst_case: bool,
    pub t1: f64,
    pub points: Vec<(f64, f64)>,
}

impl BoundCurve {
    pub fn constants(&self) -> BoundConstants {
        match self.method {
            Method::PolicyIteration => self.policy_iteration,
            Method::ValueIteration => self.value_iteration,
        }
    }

    pub fn value_at(&self, horizon: f64, service_rate: f64) -> f64 {
        evaluate_bound(self.constants(), horizon, service_rate, self.t1)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["T", "bound"])?;
        for &(t, b) in &self.points {
            out.write_record([t.to_string(), b.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn evaluate_bound(k: BoundConstants, horizon: f64, service_rate: f64, t1: f64) -> f64 {
    k.a * (horizon * (2.0 * service_rate * horizon).ln()).sqrt() + k.b * (1.0 + (horizon / t1).log2()) + k.c
}

/// `(Lambda_max R_max / mu) max_s sum_{q=s+1}^S prod_{p=s+1}^{q-1} Lambda_max / mu(p+1)`
pub fn span_constant(model: &QueueModel) -> f64 {
    let lambda_max = model.lambda_max;
    let scale = lambda_max * model.max_reward() / model.service_rate;
    let capacity = model.capacity;
    (0..capacity)
        .map(|s| {
            let mut total = 0.0;
            let mut product = 1.0;
            for q in s + 1..=capacity {
                total += product;
                if q < capacity {
                    product *= lambda_max / model.service_rate_at(q + 1);
                }
            }
            scale * total
        })
        .fold(0.0, f64::max)
}

pub fn bound_constants(model: &QueueModel, rho_star: f64, t1: f64) -> (BoundConstants, BoundConstants, f64) {
    let lambda = model.total_arrival_rate();
    let lambda_max = model.lambda_max;
    let lambda_min = model.lambda_min;
    let mu = model.service_rate;
    let mu_max = model.max_service_rate();
    let r_max = model.max_reward();
    let m = model.num_classes() as f64;
    let v = span_constant(model);

    let confidence = 4.0 * lambda_max.powi(2) / (lambda_min * lambda.sqrt()) + (m * lambda).sqrt();
    let rho_term = (4.0 / mu + 14.0 / lambda) * rho_star;
    let c = rho_star * t1;
    let pi = BoundConstants {
        a: 14.0 * confidence * (1.0 + lambda_max / mu_max) * r_max,
        b: rho_term + model.capacity as f64 * lambda_max * r_max / mu_max,
        c,
    };
    let vi = BoundConstants {
        a: 14.0 * confidence * (r_max + v),
        b: rho_term + r_max + v,
        c,
    };
    (pi, vi, v)
}

/// Regret bound for the learner run with `method`, sampled on `grid`.
pub fn theoretical_bound(
    model: &QueueModel,
    rho_star: f64,
    t1: f64,
    grid: &[f64],
    method: Method,
) -> Result<BoundCurve, HarnessError> {
    if let Some(&bad) = grid.iter().find(|&&t| !(t >= t1) || 2.0 * model.service_rate * t <= 1.0) {
        return Err(HarnessError::InvalidGrid(format!(
            "bound is defined for T >= t1 = {t1} with 2 mu T > 1, got T = {bad}"
        )));
    }
    let (pi, vi, v) = bound_constants(model, rho_star, t1);
    let mut curve = BoundCurve {
        method,
        policy_iteration: pi,
        value_iteration: vi,
        v,
        v_worst_case: true,
        t1,
        points: Vec::new(),
    };
    curve.points = grid.iter().map(|&t| (t, curve.value_at(t, model.service_rate))).collect();
    Ok(curve)
}
