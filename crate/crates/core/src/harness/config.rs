use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::learner::{EpisodeSchedule, LearnerConfig, Truncation};
use crate::model::{ModelError, QueueModel};
use crate::solvers::Method;

fn default_seeds() -> usize {
    1
}

fn default_grid_points() -> usize {
    200
}

/// Experiment keys that sit next to the model keys in a config document.
#[derive(Debug, Clone, Deserialize)]
struct ExperimentFields {
    t1: f64,
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    episodes: Option<u32>,
    #[serde(default = "default_seeds", alias = "num_seeds")]
    seeds: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_solver")]
    solver: Method,
    #[serde(default)]
    checkpoints: Option<Vec<f64>>,
    #[serde(default = "default_grid_points")]
    grid_points: usize,
    #[serde(default)]
    vi_eps: Option<f64>,
    #[serde(default)]
    truncation: Truncation,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn default_solver() -> Method {
    Method::PolicyIteration
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub model: QueueModel,
    pub t1: f64,
    pub episodes: u32,
    /// Number of independent learning runs.
    pub seeds: usize,
    /// Master seed from which every run's seed is drawn.
    pub seed: u64,
    pub solver: Method,
    /// Explicit checkpoint times; `None` uses `grid_points` log-spaced
    /// times in `[t1, T]`.
    pub checkpoints: Option<Vec<f64>>,
    pub grid_points: usize,
    pub vi_eps: Option<f64>,
    pub truncation: Truncation,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: QueueModel, t1: f64, episodes: u32) -> Self {
        Self {
            model,
            t1,
            episodes,
            seeds: 1,
            seed: 0,
            solver: Method::PolicyIteration,
            checkpoints: None,
            grid_points: default_grid_points(),
            vi_eps: None,
            truncation: Truncation::Enabled,
            out: None,
        }
    }

    /// Parses a JSON document holding the model keys and the experiment
    /// keys. Errors name the offending key.
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let model = QueueModel::from_json_str(text)?;
        let de = &mut serde_json::Deserializer::from_str(text);
        let fields: ExperimentFields = serde_path_to_error::deserialize(de).map_err(|err| ModelError::Parse {
            key: err.path().to_string(),
            message: err.inner().to_string(),
        })?;
        let schedule = EpisodeSchedule::new(fields.t1).map_err(|e| invalid("t1", e.to_string()))?;
        let episodes = match (fields.horizon, fields.episodes) {
            (None, None) => return Err(invalid("horizon", "either `horizon` or `episodes` is required".into())),
            (Some(h), None) => schedule
                .episodes_for_horizon(h)
                .map_err(|e| invalid("horizon", e.to_string()))?,
            (None, Some(k)) => k,
            (Some(h), Some(k)) => {
                if (schedule.end(k.max(1)) - h).abs() > 1e-9 * h.abs() {
                    return Err(invalid(
                        "horizon",
                        format!("horizon {h} disagrees with {k} episodes ending at {}", schedule.end(k.max(1))),
                    ));
                }
                k
            }
        };
        let config = Self {
            model,
            t1: fields.t1,
            episodes,
            seeds: fields.seeds,
            seed: fields.seed,
            solver: fields.solver,
            checkpoints: fields.checkpoints,
            grid_points: fields.grid_points,
            vi_eps: fields.vi_eps,
            truncation: fields.truncation,
            out: fields.out,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model.validate()?;
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(invalid("t1", format!("must be positive, got {}", self.t1)));
        }
        if self.episodes == 0 {
            return Err(invalid("episodes", "at least one episode is required".into()));
        }
        if self.seeds == 0 {
            return Err(invalid("seeds", "at least one seed is required".into()));
        }
        if let Some(eps) = self.vi_eps {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(invalid("vi_eps", format!("must be positive, got {eps}")));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> EpisodeSchedule {
        EpisodeSchedule { t1: self.t1 }
    }

    /// `T_K`, the end of the last episode.
    pub fn horizon(&self) -> f64 {
        self.schedule().end(self.episodes)
    }

    /// Checkpoint times inside `[t1, T]`.
    pub fn checkpoint_grid(&self) -> Vec<f64> {
        let horizon = self.horizon();
        match &self.checkpoints {
            Some(times) => times.clone(),
            None => log_grid(self.t1, horizon, self.grid_points),
        }
    }

    /// One seed per run, drawn from the master seed.
    pub fn run_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.seeds).map(|_| rng.random()).collect()
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            t1: self.t1,
            episodes: self.episodes,
            method: self.solver,
            vi_eps: self.vi_eps,
            truncation: self.truncation,
            checkpoints: self.checkpoint_grid(),
        }
    }
}

fn invalid(key: &str, reason: String) -> HarnessError {
    HarnessError::Config(ModelError::Invalid {
        key: key.into(),
        reason,
    })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let ratio = (hi / lo).ln();
            let mut grid: Vec<f64> = (0..n)
                .map(|j| lo * (ratio * j as f64 / (n - 1) as f64).exp())
                .collect();
            grid[0] = lo;
            grid[n - 1] = hi;
            grid
        }
    }
}
