//! Lower bounds on the diameter of the admission-control MDP.
//!
//! The diameter is bounded below by the expected number of uniformized
//! steps (rate `U = Lambda + mu(S)`) needed to reach `S` from `S-1` under
//! the accept-all policy, which reduces to
//!
//! ```text
//! D >= (1 - Lambda/U) * sum_{s=0}^{S-1} prod_{x=s+1}^{S-1} mu(x)/Lambda
//! ```
//!
//! and has closed forms for the single-server, infinite-server and general
//! multi-server queues.

use serde::{Deserialize, Serialize};

use super::{ModelError, QueueModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueKind {
    /// `c = 1 < S`
    SingleServer,
    /// `c = S`
    InfiniteServer,
    /// `1 < c < S`
    MultiServer,
}

impl QueueKind {
    pub fn of(model: &QueueModel) -> Self {
        if model.servers == model.capacity {
            QueueKind::InfiniteServer
        } else if model.servers == 1 {
            QueueKind::SingleServer
        } else {
            QueueKind::MultiServer
        }
    }
}

/// `(r^n - 1)/(r - 1)`, replaced by its limit `n` at `r = 1`.
fn geometric_sum(ratio: f64, n: usize) -> f64 {
    if (ratio - 1.0).abs() <= 1e-12 {
        n as f64
    } else {
        (ratio.powi(n as i32) - 1.0) / (ratio - 1.0)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `sum_{s<n} (Lambda/mu)^s / s!`
fn truncated_exponential(n: usize, load: f64) -> f64 {
    (0..n).map(|s| load.powi(s as i32) / factorial(s)).sum()
}

/// `sum_{s<n} prod_{x=s+1}^{n-1} x mu / Lambda`, equal to
/// `(n-1)! (mu/Lambda)^(n-1) sum_{s<n} (Lambda/mu)^s / s!` but free of
/// factorial overflow.
fn erlang_tail(n: usize, service_rate: f64, global_rate: f64) -> f64 {
    let mut total = 0.0;
    let mut term = 1.0;
    for s in (0..n).rev() {
        total += term;
        term *= s as f64 * service_rate / global_rate;
    }
    total
}

/// Closed-form lower bound on the diameter for global arrival rate `Lambda`.
pub fn diameter_lower_bound(model: &QueueModel, global_rate: f64) -> Result<f64, ModelError> {
    if !(global_rate.is_finite() && global_rate > 0.0) {
        return Err(ModelError::Invalid {
            key: "lambda".into(),
            reason: format!("global arrival rate must be positive, got {global_rate}"),
        });
    }
    let capacity = model.capacity;
    let servers = model.servers;
    let mu = model.service_rate;
    let lambda = global_rate;
    let bound = match QueueKind::of(model) {
        QueueKind::SingleServer => mu / (lambda + mu) * geometric_sum(mu / lambda, capacity),
        QueueKind::InfiniteServer => {
            let smu = capacity as f64 * mu;
            let tail = (mu / lambda).powi(capacity as i32 - 1)
                * factorial(capacity - 1)
                * truncated_exponential(capacity, lambda / mu);
            let tail = if tail.is_finite() { tail } else { erlang_tail(capacity, mu, lambda) };
            smu / (lambda + smu) * tail
        }
        QueueKind::MultiServer => {
            let c = servers as f64;
            let cmu = c * mu;
            let ratio = cmu / lambda;
            let busy = c.powi((capacity - servers - 1) as i32)
                * factorial(servers)
                * (mu / lambda).powi(capacity as i32 - 1)
                * truncated_exponential(servers, lambda / mu);
            let busy = if busy.is_finite() {
                busy
            } else {
                ratio.powi((capacity - servers) as i32) * erlang_tail(servers, mu, lambda)
            };
            cmu / (lambda + cmu) * (geometric_sum(ratio, capacity - servers) + busy)
        }
    };
    Ok(bound)
}

/// Direct evaluation of the generic bound
/// `(1 - Lambda/U) sum_{s<S} prod_{x=s+1}^{S-1} mu(x)/Lambda`.
pub fn diameter_lower_bound_direct(model: &QueueModel, global_rate: f64) -> f64 {
    let capacity = model.capacity;
    let uniformization = global_rate + model.max_service_rate();
    let mut total = 0.0;
    let mut term = 1.0;
    for s in (0..capacity).rev() {
        total += term;
        term *= model.service_rate_at(s) / global_rate;
    }
    (1.0 - global_rate / uniformization) * total
}
