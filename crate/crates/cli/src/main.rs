use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use admission_control::harness::{
    log_grid, run_experiment, solve_json, theoretical_bound, ExperimentConfig,
};
use admission_control::learner::EpisodeSchedule;
use admission_control::model::{
    diameter_lower_bound, effective_dynamics, expected_rewards, stationary_distribution, Policy, QueueModel,
    RateField,
};
use admission_control::sim::{rng_for, simulate};
use admission_control::solvers::{policy_iteration, value_iteration, Method, SolveResult};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "admctl", version, about = "Admission control to a multi-class M/M/c/S queue")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model exactly and print the policy, gain and relative bias.
    Solve(Common),
    /// Simulate a fixed policy on the true model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Class thresholds, e.g. `20,10`; defaults to the optimal policy.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<usize>>,
    },
    /// Run the learner over several seeds and write CSV/JSON outputs.
    Learn(Common),
    /// Regret bound curve over a log-spaced time grid.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Closed-form lower bound on the diameter.
    Diameter {
        #[command(flatten)]
        common: Common,
        /// Global arrival rate; defaults to the sum of the class rates.
        #[arg(long)]
        lambda: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with the model (and, for `learn`, experiment) keys.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_parser = parse_method)]
    solver: Option<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    /// Value iteration tolerance.
    #[arg(long)]
    eps: Option<f64>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

impl Common {
    fn document(&self) -> Result<Value> {
        let text = fs::read_to_string(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", self.config.display()))
    }

    fn model(&self) -> Result<QueueModel> {
        let text = serde_json::to_string(&self.document()?)?;
        QueueModel::from_json_str(&text).with_context(|| format!("invalid model in {}", self.config.display()))
    }

    /// Experiment config with command-line overrides applied before
    /// validation.
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut doc = self.document()?;
        let map = doc
            .as_object_mut()
            .ok_or_else(|| anyhow!("{} must hold a JSON object", self.config.display()))?;
        if let Some(t1) = self.t1 {
            map.insert("t1".into(), json!(t1));
        }
        if let Some(horizon) = self.horizon {
            map.insert("horizon".into(), json!(horizon));
            map.remove("episodes");
        }
        if let Some(seed) = self.seed {
            map.insert("seed".into(), json!(seed));
        }
        if let Some(seeds) = self.seeds {
            map.insert("seeds".into(), json!(seeds));
        }
        if let Some(solver) = self.solver {
            map.insert("solver".into(), json!(solver));
        }
        if let Some(eps) = self.eps {
            map.insert("vi_eps".into(), json!(eps));
        }
        ExperimentConfig::from_json_str(&serde_json::to_string(&doc)?)
            .with_context(|| format!("invalid experiment config in {}", self.config.display()))
    }

    fn solve(&self, model: &QueueModel) -> Result<SolveResult> {
        let table = expected_rewards(model);
        let rates = RateField::from_model(model);
        let solved = match self.solver.unwrap_or(Method::PolicyIteration) {
            Method::PolicyIteration => {
                policy_iteration(&rates, model, &table, &Policy::accept_all(model.capacity, model.num_classes()))?
            }
            Method::ValueIteration => {
                let eps = self.eps.ok_or_else(|| anyhow!("--solver vi requires --eps"))?;
                value_iteration(&rates, model, &table, eps, None)?
            }
        };
        Ok(solved)
    }
}

fn write_out(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn print_json(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn solve_cmd(common: &Common) -> Result<()> {
    let model = common.model()?;
    let solved = common.solve(&model)?;
    let diameter = diameter_lower_bound(&model, model.total_arrival_rate())?;
    let mut report = solve_json(&solved, diameter, model.num_classes());
    if let Some(residual) = solved.vi_residual {
        report["vi_residual"] = json!(residual);
    }
    if let Some(dir) = &common.out {
        write_out(dir, "solve.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    print_json(&report)
}

fn simulate_cmd(common: &Common, thresholds: Option<&[usize]>) -> Result<()> {
    let model = common.model()?;
    let table = expected_rewards(&model);
    let rates = RateField::from_model(&model);
    let policy = match thresholds {
        Some(levels) => {
            if levels.len() != model.num_classes() {
                bail!("expected {} thresholds, got {}", model.num_classes(), levels.len());
            }
            Policy::from_thresholds(model.capacity, levels)
        }
        None => common.solve(&model)?.policy,
    };
    let duration = common.horizon.unwrap_or(1e5 / model.service_rate);
    if !(duration.is_finite() && duration > 0.0) {
        bail!("--horizon must be positive, got {duration}");
    }
    let log = simulate(&model, &rates, &policy, &table, duration, 0, &mut rng_for(common.seed.unwrap_or(0), 0));
    let dynamics = effective_dynamics(&policy, &rates, &table);
    let stationary = stationary_distribution(&dynamics.birth, &model);
    let occupancy: Vec<f64> = log.sojourn.iter().map(|t| t / duration).collect();
    let exact_gain: f64 = stationary.iter().zip(&dynamics.reward).map(|(p, r)| p * r).sum();
    let admitted: u64 = log.admissions.iter().flatten().sum();

    if let Some(dir) = &common.out {
        let mut buf = Vec::new();
        log.write_events_csv(&mut buf)?;
        write_out(dir, "events.csv", &buf)?;
    }
    print_json(&json!({
        "thresholds": policy.trunk_reservation_levels(model.num_classes()),
        "duration": duration,
        "arrivals": log.total_arrivals(),
        "admitted": admitted,
        "reward_rate": log.reward_collected / duration,
        "exact_gain": exact_gain,
        "occupancy": occupancy,
        "stationary": stationary,
    }))
}

fn learn_cmd(common: &Common) -> Result<()> {
    let config = common.experiment()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run_experiment(&config, &out)?;
    let finals: Vec<Option<f64>> = outcome.runs.iter().map(|r| r.regret.final_regret()).collect();
    print_json(&json!({
        "out": out,
        "horizon": config.horizon(),
        "episodes": config.episodes,
        "rho_star": outcome.solve.eval.gain,
        "final_regret": finals,
    }))
}

fn bounds_cmd(common: &Common, points: usize) -> Result<()> {
    let model = common.model()?;
    let doc = common.document()?;
    let t1 = common
        .t1
        .or_else(|| doc.get("t1").and_then(Value::as_f64))
        .ok_or_else(|| anyhow!("`t1` is required (config key or --t1)"))?;
    let schedule = EpisodeSchedule::new(t1)?;
    let horizon = match common.horizon.or_else(|| doc.get("horizon").and_then(Value::as_f64)) {
        Some(h) => h,
        None => match doc.get("episodes").and_then(Value::as_u64) {
            Some(k) => schedule.end(k as u32),
            None => bail!("a horizon is required (config `horizon`/`episodes` or --horizon)"),
        },
    };
    let rho_star = common.solve(&model)?.eval.gain;
    let method = common.solver.unwrap_or(Method::PolicyIteration);
    let curve = theoretical_bound(&model, rho_star, t1, &log_grid(t1, horizon, points), method)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    match &common.out {
        Some(dir) => {
            write_out(dir, "bound.csv", &buf)?;
            print_json(&serde_json::to_value(curve.constants())?)
        }
        None => {
            print!("{}", String::from_utf8(buf)?);
            Ok(())
        }
    }
}

fn diameter_cmd(common: &Common, lambda: Option<f64>) -> Result<()> {
    let model = common.model()?;
    let rate = lambda.unwrap_or_else(|| model.total_arrival_rate());
    println!("{:.4}", diameter_lower_bound(&model, rate)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(common) => solve_cmd(common),
        Command::Simulate { common, thresholds } => simulate_cmd(common, thresholds.as_deref()),
        Command::Learn(common) => learn_cmd(common),
        Command::Bounds { common, points } => bounds_cmd(common, *points),
        Command::Diameter { common, lambda } => diameter_cmd(common, *lambda),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
