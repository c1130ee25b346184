//! Optimistic learning of the arrival process.
//!
//! Each episode the learner builds a confidence set for the global arrival
//! rate and the class distribution, plans on the most favourable model in
//! that set, and runs the resulting policy on the true queue for the
//! episode's duration.

mod confidence;
mod estimator;
mod schedule;
mod ucrl;

use thiserror::Error;

use crate::model::ModelError;
use crate::solvers::SolveError;

pub use confidence::{
    build_confidence, distribution_radius, optimistic_distribution, optimistic_model, rate_radius, refine_lambda_bar,
    refine_lambda_bar_with_radius, ConfidenceSet,
};
pub use estimator::{EstimatorState, Truncation};
pub use schedule::EpisodeSchedule;
pub use ucrl::{ucrl_ac_run, write_episodes_csv, EpisodeRecord, LearnRun, LearnerConfig};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("confidence parameter must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("no arrivals were observed in the previous episode")]
    EmptyEpisode,
    #[error("invalid episode schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
