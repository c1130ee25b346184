//! Python bindings: models, exact solvers, simulation, the learner and
//! regret bounds. Results come back as plain dictionaries.

use std::path::PathBuf;

use admission_control::harness::{run_experiment as run_harness, theoretical_bound, ExperimentConfig};
use admission_control::learner::{ucrl_ac_run, LearnerConfig};
use admission_control::model::{
    diameter_lower_bound, evaluate as evaluate_policy, expected_rewards, JobClass, Policy, QueueModel, RateField,
};
use admission_control::sim::{rng_for, simulate as run_simulation};
use admission_control::solvers::{policy_iteration, value_iteration, Method, SolveResult};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().map_err(value_error)
}

#[pyclass(name = "QueueModel", frozen)]
struct PyQueueModel {
    inner: QueueModel,
}

#[pymethods]
impl PyQueueModel {
    /// `classes` holds `(R, gamma, lambda)` triples.
    #[new]
    fn new(
        capacity: usize,
        servers: usize,
        mu: f64,
        classes: Vec<(f64, f64, f64)>,
        lambda_min: f64,
        lambda_max: f64,
    ) -> PyResult<Self> {
        let classes = classes.into_iter().map(|(r, g, l)| JobClass::new(r, g, l)).collect();
        QueueModel::new(capacity, servers, mu, classes, lambda_min, lambda_max)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        QueueModel::from_json_str(text).map(|inner| Self { inner }).map_err(value_error)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_error)
    }

    #[getter]
    fn capacity(&self) -> usize {
        self.inner.capacity
    }

    #[getter]
    fn servers(&self) -> usize {
        self.inner.servers
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.service_rate
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    /// `r_i(s)` for every state `0..S-1`, indexed `[s][i]`.
    fn expected_rewards(&self) -> Vec<Vec<f64>> {
        let table = expected_rewards(&self.inner);
        (0..table.num_states()).map(|s| table.rewards_at(s).to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "QueueModel(S={}, c={}, mu={}, classes={})",
            self.inner.capacity,
            self.inner.servers,
            self.inner.service_rate,
            self.inner.num_classes()
        )
    }
}

#[pyclass(name = "Policy", frozen)]
struct PyPolicy {
    inner: Policy,
}

#[pymethods]
impl PyPolicy {
    /// Admitted class sets for states `0..S-1`.
    #[new]
    fn new(sets: Vec<Vec<usize>>) -> Self {
        Self {
            inner: Policy::from_sets(sets),
        }
    }

    #[staticmethod]
    fn accept_all(capacity: usize, num_classes: usize) -> Self {
        Self {
            inner: Policy::accept_all(capacity, num_classes),
        }
    }

    /// Class `i` is admitted in state `s` iff `s < levels[i]`.
    #[staticmethod]
    fn from_thresholds(capacity: usize, levels: Vec<usize>) -> Self {
        Self {
            inner: Policy::from_thresholds(capacity, &levels),
        }
    }

    fn accepted(&self, state: usize) -> PyResult<Vec<usize>> {
        if state >= self.inner.capacity() {
            return Err(value_error(format!("state {state} is not below S = {}", self.inner.capacity())));
        }
        Ok(self.inner.accepted(state).to_vec())
    }

    fn sets(&self) -> Vec<Vec<usize>> {
        self.inner.sets().to_vec()
    }

    /// Per-class thresholds, or `None` when the policy is not of that form.
    fn thresholds(&self, num_classes: usize) -> Option<Vec<usize>> {
        self.inner.trunk_reservation_levels(num_classes)
    }

    fn __eq__(&self, other: PyRef<'_, PyPolicy>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Policy({:?})", self.inner.sets())
    }
}

fn rate_field(model: &QueueModel, rates: Option<Vec<Vec<f64>>>) -> PyResult<RateField> {
    let field = match rates {
        Some(rows) => RateField::from_rows(rows).map_err(value_error)?,
        None => RateField::from_model(model),
    };
    field.check_shape(model).map_err(value_error)?;
    Ok(field)
}

fn solve_dict<'py>(py: Python<'py>, solved: SolveResult, num_classes: usize) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("method", solved.method.to_string())?;
    out.set_item("rho", solved.eval.gain)?;
    out.set_item("nabla_h", solved.eval.relative_bias)?;
    out.set_item("iterations", solved.iterations)?;
    out.set_item("vi_residual", solved.vi_residual)?;
    out.set_item("thresholds", solved.policy.trunk_reservation_levels(num_classes))?;
    out.set_item("policy", Py::new(py, PyPolicy { inner: solved.policy })?)?;
    Ok(out)
}

/// Gain and relative bias of `policy`; `rates` is an optional `[s][i]`
/// table for states `0..=S`.
#[pyfunction]
#[pyo3(signature = (model, policy, rates=None))]
fn evaluate<'py>(
    py: Python<'py>,
    model: PyRef<'py, PyQueueModel>,
    policy: PyRef<'py, PyPolicy>,
    rates: Option<Vec<Vec<f64>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = &model.inner;
    policy.inner.check_shape(model.capacity, model.num_classes()).map_err(value_error)?;
    let rates = rate_field(model, rates)?;
    let eval = evaluate_policy(&policy.inner, &rates, model, &expected_rewards(model));
    let out = PyDict::new(py);
    out.set_item("rho", eval.gain)?;
    out.set_item("nabla_h", eval.relative_bias)?;
    Ok(out)
}

/// Exact solve by policy iteration (`"pi"`) or value iteration (`"vi"`,
/// needs `eps`).
#[pyfunction]
#[pyo3(signature = (model, method="pi", eps=None, rates=None))]
fn solve<'py>(
    py: Python<'py>,
    model: PyRef<'py, PyQueueModel>,
    method: &str,
    eps: Option<f64>,
    rates: Option<Vec<Vec<f64>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = &model.inner;
    let rates = rate_field(model, rates)?;
    let table = expected_rewards(model);
    let solved = match parse_method(method)? {
        Method::PolicyIteration => policy_iteration(
            &rates,
            model,
            &table,
            &Policy::accept_all(model.capacity, model.num_classes()),
        ),
        Method::ValueIteration => {
            let eps = eps.ok_or_else(|| value_error("value iteration needs `eps`"))?;
            value_iteration(&rates, model, &table, eps, None)
        }
    }
    .map_err(value_error)?;
    solve_dict(py, solved, model.num_classes())
}

/// Simulates `policy` on the true model for `duration` time units.
#[pyfunction]
#[pyo3(signature = (model, policy, duration, seed=0, initial_state=0))]
fn simulate<'py>(
    py: Python<'py>,
    model: PyRef<'py, PyQueueModel>,
    policy: PyRef<'py, PyPolicy>,
    duration: f64,
    seed: u64,
    initial_state: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let model = &model.inner;
    policy.inner.check_shape(model.capacity, model.num_classes()).map_err(value_error)?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(value_error(format!("duration must be positive, got {duration}")));
    }
    if initial_state > model.capacity {
        return Err(value_error(format!("initial state {initial_state} exceeds S = {}", model.capacity)));
    }
    let table = expected_rewards(model);
    let rates = RateField::from_model(model);
    let log = run_simulation(model, &rates, &policy.inner, &table, duration, initial_state, &mut rng_for(seed, 0));
    let out = PyDict::new(py);
    out.set_item("duration", log.duration)?;
    out.set_item("final_state", log.final_state)?;
    out.set_item("reward", log.reward_collected)?;
    out.set_item("occupancy", log.sojourn.iter().map(|t| t / duration).collect::<Vec<_>>())?;
    out.set_item("arrivals_by_class", log.arrivals_by_class)?;
    out.set_item("admissions", log.admissions)?;
    Ok(out)
}

/// One learning run; returns the regret checkpoints and per-episode
/// thresholds.
#[pyfunction]
#[pyo3(signature = (model, t1, episodes, method="pi", seed=0, checkpoints=None))]
fn learn<'py>(
    py: Python<'py>,
    model: PyRef<'py, PyQueueModel>,
    t1: f64,
    episodes: u32,
    method: &str,
    seed: u64,
    checkpoints: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = &model.inner;
    let mut config = LearnerConfig::new(t1, episodes, parse_method(method)?);
    config.checkpoints = checkpoints.unwrap_or_default();
    let run = ucrl_ac_run(model, &config, seed).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("rho_star", run.rho_star)?;
    out.set_item("regret", run.regret.checkpoints.clone())?;
    out.set_item(
        "thresholds",
        run.episodes.iter().map(|e| e.thresholds.clone()).collect::<Vec<_>>(),
    )?;
    out.set_item(
        "lambda_hat",
        run.episodes.iter().map(|e| e.confidence.lambda_hat).collect::<Vec<_>>(),
    )?;
    out.set_item(
        "optimal_thresholds",
        run.optimal_policy.trunk_reservation_levels(model.num_classes()),
    )?;
    Ok(out)
}

/// Runs a full experiment from a JSON config and writes its files to `out`.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str, out: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig::from_json_str(config_json).map_err(value_error)?;
    let outcome = run_harness(&config, &out).map_err(value_error)?;
    let result = PyDict::new(py);
    result.set_item("rho_star", outcome.solve.eval.gain)?;
    result.set_item(
        "final_regret",
        outcome.runs.iter().map(|r| r.regret.final_regret()).collect::<Vec<_>>(),
    )?;
    result.set_item("horizon", config.horizon())?;
    Ok(result)
}

/// Regret bound `a sqrt(T ln(2 mu T)) + b (1 + log2(T/t1)) + c` on `grid`.
#[pyfunction]
#[pyo3(signature = (model, rho_star, t1, grid, method="pi"))]
fn bound<'py>(
    py: Python<'py>,
    model: PyRef<'py, PyQueueModel>,
    rho_star: f64,
    t1: f64,
    grid: Vec<f64>,
    method: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let curve = theoretical_bound(&model.inner, rho_star, t1, &grid, parse_method(method)?).map_err(value_error)?;
    let k = curve.constants();
    let out = PyDict::new(py);
    out.set_item("a", k.a)?;
    out.set_item("b", k.b)?;
    out.set_item("c", k.c)?;
    out.set_item("V", curve.v)?;
    out.set_item("points", curve.points)?;
    Ok(out)
}

/// Closed-form diameter lower bound; `lam` defaults to the total class rate.
#[pyfunction]
#[pyo3(signature = (model, lam=None))]
fn diameter(model: PyRef<'_, PyQueueModel>, lam: Option<f64>) -> PyResult<f64> {
    let rate = lam.unwrap_or_else(|| model.inner.total_arrival_rate());
    diameter_lower_bound(&model.inner, rate).map_err(value_error)
}

#[pymodule]
fn admission_control_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQueueModel>()?;
    m.add_class::<PyPolicy>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(bound, m)?)?;
    m.add_function(wrap_pyfunction!(diameter, m)?)?;
    Ok(())
}
