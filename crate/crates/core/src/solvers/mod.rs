//! Exact planners for a known (possibly state-dependent) rate field.
//!
//! Both solvers share the improvement rule: admit class `i` in state `s`
//! iff `r_i(s) >= dh(s)`, ties admitted. The admitted set is therefore
//! always a prefix of the state's priority order and the action space is
//! never enumerated as subsets.

mod improve;
mod policy_iteration;
mod value_iteration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Evaluation, ModelError, Policy};

pub use improve::{bellman_gaps, improve, improve_with_rule, TieRule, TIE_TOLERANCE};
pub use policy_iteration::{policy_iteration, policy_iteration_with, PolicyIterationOptions};
pub use value_iteration::{
    uniformize, value_iteration, value_iteration_with, warm_start, UniformizedChain, ValueIterationOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "PI", alias = "pi")]
    PolicyIteration,
    #[serde(rename = "VI", alias = "vi")]
    ValueIteration,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pi" => Ok(Method::PolicyIteration),
            "vi" => Ok(Method::ValueIteration),
            other => Err(format!("unknown solver `{other}`, expected `pi` or `vi`")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::PolicyIteration => "PI",
            Method::ValueIteration => "VI",
        })
    }
}

/// Output of a planner: the policy, its exact evaluation under the rates it
/// was solved for, and solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub policy: Policy,
    #[serde(flatten)]
    pub eval: Evaluation,
    pub iterations: usize,
    pub method: Method,
    /// Span of the last value-iteration difference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vi_residual: Option<f64>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{method} did not terminate within {limit} iterations")]
    NonTermination { method: Method, limit: usize },
    #[error("birth rate {rate} in state {state} exceeds the uniformization bound {bound}")]
    RateAboveBound { state: usize, rate: f64, bound: f64 },
    #[error("value iteration tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}
