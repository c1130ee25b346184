//! Experiment orchestration: configuration files, multi-seed learning
//! runs, regret bounds and CSV/JSON outputs.
//!
//! Output files written by [`run_experiment`]:
//!
//! | file | columns |
//! |------|---------|
//! | `regret_seed_<n>.csv` | `T,delta` |
//! | `regret_agg.csv` | `T,mean,lo,hi` |
//! | `episodes.csv` | one row per run and episode |
//! | `bound.csv` | `T,bound` |
//! | `solve.json` | exact solution of the true model |
//! | `meta.json` | config echo, run seeds, bound constants |

mod bounds;
mod config;
mod experiment;

use std::path::PathBuf;

use thiserror::Error;

use crate::learner::LearnerError;
use crate::model::ModelError;
use crate::solvers::SolveError;

pub use bounds::{bound_constants, span_constant, theoretical_bound, BoundConstants, BoundCurve};
pub use config::{log_grid, ExperimentConfig};
pub use experiment::{
    aggregate, quantile, run_experiment, run_in_memory, run_learners, solve_json, solve_true_model, AggregatePoint,
    ExperimentOutcome,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("invalid checkpoint grid: {0}")]
    InvalidGrid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}
