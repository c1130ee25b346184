use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    build_confidence, optimistic_model, ConfidenceSet, EpisodeSchedule, EstimatorState, LearnerError, Truncation,
};
use crate::model::{evaluate, expected_rewards, Policy, QueueModel, RateField};
use crate::sim::{rng_for, simulate, RegretAccumulator, RegretSeries};
use crate::solvers::{policy_iteration, value_iteration, warm_start, Method, SolveResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub t1: f64,
    pub episodes: u32,
    pub method: Method,
    /// Fixed VI tolerance; `None` uses `R_max / t_k` in episode `k`.
    pub vi_eps: Option<f64>,
    pub truncation: Truncation,
    /// Times at which the regret is recorded besides episode ends.
    pub checkpoints: Vec<f64>,
}

impl LearnerConfig {
    pub fn new(t1: f64, episodes: u32, method: Method) -> Self {
        Self {
            t1,
            episodes,
            method,
            vi_eps: None,
            truncation: Truncation::Enabled,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub k: u32,
    pub t_k: f64,
    pub end: f64,
    pub delta: f64,
    /// Confidence set the episode's policy was computed from.
    pub confidence: ConfidenceSet,
    /// No arrivals in the previous episode, so its set was reused.
    pub carried_forward: bool,
    pub policy: Policy,
    pub thresholds: Option<Vec<usize>>,
    pub optimistic_gain: f64,
    pub solver_iterations: usize,
    pub arrivals: usize,
    pub regret_at_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnRun {
    pub seed: u64,
    pub rho_star: f64,
    pub optimal_policy: Policy,
    pub episodes: Vec<EpisodeRecord>,
    pub regret: RegretSeries,
}

impl LearnRun {
    pub fn final_policy(&self) -> &Policy {
        &self.episodes.last().expect("at least one episode").policy
    }
}

/// Runs the optimistic learner against the true `model` for
/// `config.episodes` doubling episodes.
pub fn ucrl_ac_run(model: &QueueModel, config: &LearnerConfig, seed: u64) -> Result<LearnRun, LearnerError> {
    model.validate()?;
    if config.episodes == 0 {
        return Err(LearnerError::InvalidSchedule("at least one episode is required".into()));
    }
    let schedule = EpisodeSchedule::new(config.t1)?;
    let capacity = model.capacity;
    let m = model.num_classes();
    let table = expected_rewards(model);
    let true_rates = RateField::from_model(model);
    let optimum = policy_iteration(&true_rates, model, &table, &Policy::accept_all(capacity, m))?;
    let rho_star = optimum.eval.gain;
    let r_max = model.max_reward();

    let mut estimator = EstimatorState::new(m, model.lambda_min, config.truncation);
    let mut regret = RegretAccumulator::new(rho_star, config.checkpoints.clone());
    let mut confidence = ConfidenceSet::initial(model);
    let mut previous: Option<SolveResult> = None;
    let mut state = 0;
    let mut episodes = Vec::with_capacity(config.episodes as usize);

    for k in 1..=config.episodes {
        let mut carried_forward = false;
        if k > 1 {
            match build_confidence(&estimator, model) {
                Ok(conf) => confidence = conf,
                Err(LearnerError::EmptyEpisode) => carried_forward = true,
                Err(e) => return Err(e),
            }
        }
        let t_k = schedule.duration(k);
        let delta = schedule.delta(k, model.service_rate);
        estimator.start_episode(delta)?;

        let rates = optimistic_model(&confidence, &table);
        let solved = match config.method {
            Method::PolicyIteration => policy_iteration(&rates, model, &table, &Policy::accept_all(capacity, m))?,
            Method::ValueIteration => {
                let eps = config.vi_eps.unwrap_or(r_max / t_k);
                let u0 = previous
                    .as_ref()
                    .map(|p| warm_start(&evaluate(&p.policy, &rates, model, &table)));
                value_iteration(&rates, model, &table, eps, u0.as_deref())?
            }
        };

        let mut rng = rng_for(seed, k as u64);
        let log = simulate(model, &true_rates, &solved.policy, &table, t_k, state, &mut rng);
        for (&gap, &class) in log.inter_arrivals.iter().zip(&log.arrival_classes) {
            estimator.update(gap, class)?;
        }
        regret.push(&log, &table);
        state = log.final_state;

        episodes.push(EpisodeRecord {
            k,
            t_k,
            end: schedule.end(k),
            delta,
            confidence: confidence.clone(),
            carried_forward,
            thresholds: solved.policy.trunk_reservation_levels(m),
            policy: solved.policy.clone(),
            optimistic_gain: solved.eval.gain,
            solver_iterations: solved.iterations,
            arrivals: log.total_arrivals(),
            regret_at_end: regret.current(),
        });
        previous = Some(solved);
    }

    Ok(LearnRun {
        seed,
        rho_star,
        optimal_policy: optimum.policy,
        episodes,
        regret: regret.finish(),
    })
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// One row per episode and run. Lists are `;`-separated; a policy that is
/// not a trunk reservation is written as JSON in `policy`.
pub fn write_episodes_csv<W: Write>(writer: W, runs: &[LearnRun]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "seed",
        "k",
        "t_k",
        "T_k",
        "lambda_hat",
        "eps_lambda",
        "lambda_lo",
        "lambda_hi",
        "lambda_bar",
        "eps_p",
        "p_hat",
        "thresholds",
        "policy",
        "rho_tilde",
        "regret",
        "arrivals",
        "carried_forward",
    ])?;
    for run in runs {
        for e in &run.episodes {
            let c = &e.confidence;
            let policy = if e.thresholds.is_some() {
                String::new()
            } else {
                serde_json::to_string(&e.policy).expect("policy serializes")
            };
            out.write_record([
                run.seed.to_string(),
                e.k.to_string(),
                e.t_k.to_string(),
                e.end.to_string(),
                c.lambda_hat.to_string(),
                c.eps_lambda.to_string(),
                c.lambda_lo.to_string(),
                c.lambda_hi.to_string(),
                c.lambda_bar.to_string(),
                c.eps_p.to_string(),
                join(&c.p_hat),
                e.thresholds.as_deref().map(join).unwrap_or_default(),
                policy,
                e.optimistic_gain.to_string(),
                e.regret_at_end.to_string(),
                e.arrivals.to_string(),
                e.carried_forward.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
