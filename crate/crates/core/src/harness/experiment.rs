use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{theoretical_bound, BoundCurve, ExperimentConfig, HarnessError};
use crate::learner::{ucrl_ac_run, write_episodes_csv, LearnRun};
use crate::model::{diameter_lower_bound, expected_rewards, Policy, RateField};
use crate::solvers::{policy_iteration, SolveResult};

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregatePoint {
    #[serde(rename = "T")]
    pub time: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Mean and 2.5%/97.5% quantiles across runs at each shared checkpoint.
pub fn aggregate(runs: &[LearnRun]) -> Vec<AggregatePoint> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .regret
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &(time, _))| {
            let mut values: Vec<f64> = runs.iter().map(|r| r.regret.checkpoints[j].1).collect();
            values.sort_by(f64::total_cmp);
            AggregatePoint {
                time,
                mean: values.iter().sum::<f64>() / values.len() as f64,
                lo: quantile(&values, 0.025),
                hi: quantile(&values, 0.975),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub solve: SolveResult,
    pub diameter_lower_bound: f64,
    pub runs: Vec<LearnRun>,
    pub aggregate: Vec<AggregatePoint>,
    pub bound: BoundCurve,
}

/// Exact solve of the true model by policy iteration.
pub fn solve_true_model(config: &ExperimentConfig) -> Result<SolveResult, HarnessError> {
    let model = &config.model;
    let table = expected_rewards(model);
    let rates = RateField::from_model(model);
    Ok(policy_iteration(
        &rates,
        model,
        &table,
        &Policy::accept_all(model.capacity, model.num_classes()),
    )?)
}

/// Runs every seed in parallel and collects results in seed order.
pub fn run_learners(config: &ExperimentConfig) -> Result<Vec<LearnRun>, HarnessError> {
    let learner = config.learner_config();
    config
        .run_seeds()
        .into_par_iter()
        .map(|seed| ucrl_ac_run(&config.model, &learner, seed).map_err(HarnessError::from))
        .collect()
}

/// Runs the experiment without touching the file system.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let solve = solve_true_model(config)?;
    let diameter = diameter_lower_bound(&config.model, config.model.total_arrival_rate())?;
    let runs = run_learners(config)?;
    let aggregate = aggregate(&runs);
    let times: Vec<f64> = aggregate.iter().map(|p| p.time).filter(|&t| t >= config.t1).collect();
    let bound = theoretical_bound(&config.model, solve.eval.gain, config.t1, &times, config.solver)?;
    Ok(ExperimentOutcome {
        solve,
        diameter_lower_bound: diameter,
        runs,
        aggregate,
        bound,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), HarnessError> {
    let file = create(path)?;
    serde_json::to_writer_pretty(file, value).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

/// Writes `solve.json` for an exact solve.
pub fn solve_json(solve: &SolveResult, diameter: f64, num_classes: usize) -> serde_json::Value {
    json!({
        "method": solve.method,
        "rho": solve.eval.gain,
        "nabla_h": solve.eval.relative_bias,
        "policy": solve.policy,
        "thresholds": solve.policy.trunk_reservation_levels(num_classes),
        "iterations": solve.iterations,
        "diameter_lower_bound": diameter,
    })
}

/// Runs the experiment and writes every output file into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome, HarnessError> {
    std::fs::create_dir_all(out).map_err(|source| HarnessError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let outcome = run_in_memory(config)?;
    let path = |name: &str| -> PathBuf { out.join(name) };

    for (n, run) in outcome.runs.iter().enumerate() {
        let p = path(&format!("regret_seed_{n}.csv"));
        run.regret.write_csv(create(&p)?).map_err(csv_err(&p))?;
    }

    let p = path("regret_agg.csv");
    {
        let mut w = csv::Writer::from_writer(create(&p)?);
        for point in &outcome.aggregate {
            w.serialize(point).map_err(csv_err(&p))?;
        }
        w.flush().map_err(|source| HarnessError::Io { path: p.clone(), source })?;
    }

    let p = path("episodes.csv");
    write_episodes_csv(create(&p)?, &outcome.runs).map_err(csv_err(&p))?;

    let p = path("bound.csv");
    outcome.bound.write_csv(create(&p)?).map_err(csv_err(&p))?;

    write_json(
        &path("solve.json"),
        &solve_json(&outcome.solve, outcome.diameter_lower_bound, config.model.num_classes()),
    )?;

    let seeds = config.run_seeds();
    write_json(
        &path("meta.json"),
        &json!({
            "config": config,
            "horizon": config.horizon(),
            "run_seeds": seeds,
            "seed_files": (0..seeds.len()).map(|n| format!("regret_seed_{n}.csv")).collect::<Vec<_>>(),
            "band": "empirical 2.5% and 97.5% quantiles across runs, linear interpolation",
            "bound": {
                "method": outcome.bound.method,
                "policy_iteration": outcome.bound.policy_iteration,
                "value_iteration": outcome.bound.value_iteration,
                "V": outcome.bound.v,
                "V_worst_case": outcome.bound.v_worst_case,
            },
            "versions": { "admission-control": env!("CARGO_PKG_VERSION") },
        }),
    )?;
    Ok(outcome)
}
