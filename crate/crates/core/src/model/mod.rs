//! The admission-control CTMDP: model definition, expected rewards,
//! policies, and exact policy evaluation.

mod bias_bounds;
mod diameter;
mod evaluation;
mod policy;
mod queue;
mod rates;
mod rewards;

use thiserror::Error;

pub use bias_bounds::{check_bias_bounds, BiasBoundReport};
pub use diameter::{diameter_lower_bound, diameter_lower_bound_direct, QueueKind};
pub use evaluation::{
    average_reward, balance_residuals, bias_transfer_matrix, effective_dynamics, evaluate, evaluate_dense,
    evaluate_dense_dynamics, evaluate_dynamics, relative_bias_matrix, relative_bias_recursive,
    stationary_distribution, DenseEvaluation, Dynamics, Evaluation,
};
pub use policy::Policy;
pub use queue::{JobClass, QueueModel};
pub use rates::RateField;
pub use rewards::{expected_rewards, RewardTable};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to parse `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular evaluation system")]
    Singular,
}
