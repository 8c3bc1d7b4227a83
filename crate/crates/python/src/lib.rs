//! Python bindings for the charging scheduler.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use chargesched::model::{ChargingRequest, CostModel, RequestId};
use chargesched::offline::{solve_offline as solve, verify_kkt, KKT_TOL};
use chargesched::online::{run_online as run, AlgorithmKind};
use chargesched::sim::{self, ScenarioConfig};
use chargesched::time::TimeStamp;
use chargesched::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Internal(_) | Error::OnlineFault { .. } | Error::OracleDidNotConverge { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A charging request. Times are hours and are rounded to the tick grid.
#[pyclass(name = "Request", module = "chargesched_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRequest {
    inner: ChargingRequest,
}

#[pymethods]
impl PyRequest {
    #[new]
    fn new(
        id: u32,
        arrival_h: f64,
        deadline_h: f64,
        demand_kwh: f64,
        max_rate_kw: f64,
        capacity_kwh: f64,
    ) -> PyResult<Self> {
        let time = |h: f64| TimeStamp::from_hours(h).ok_or_else(|| PyValueError::new_err(format!("bad time {h}")));
        let inner = ChargingRequest::new(
            RequestId(id),
            time(arrival_h)?,
            time(deadline_h)?,
            demand_kwh,
            max_rate_kw,
            capacity_kwh,
        )
        .map_err(to_py)?;
        Ok(PyRequest { inner })
    }

    #[getter]
    fn id(&self) -> u32 {
        self.inner.id.0
    }
    #[getter]
    fn arrival_h(&self) -> f64 {
        self.inner.arrival.hours()
    }
    #[getter]
    fn deadline_h(&self) -> f64 {
        self.inner.deadline.hours()
    }
    #[getter]
    fn demand_kwh(&self) -> f64 {
        self.inner.demand
    }
    #[getter]
    fn max_rate_kw(&self) -> f64 {
        self.inner.max_rate
    }

    fn __repr__(&self) -> String {
        let r = &self.inner;
        format!(
            "Request(id={}, arrival_h={}, deadline_h={}, demand_kwh={}, max_rate_kw={})",
            r.id.0,
            r.arrival.hours(),
            r.deadline.hours(),
            r.demand,
            r.max_rate
        )
    }
}

fn unwrap_requests(requests: Vec<PyRef<'_, PyRequest>>) -> Vec<ChargingRequest> {
    requests.iter().map(|r| r.inner.clone()).collect()
}

fn cost_model(a: f64, b: f64) -> PyResult<CostModel> {
    CostModel::new(a, b).map_err(to_py)
}

/// Optimal schedule for a fully known set of requests.
#[pyclass(name = "OfflineSolution", module = "chargesched_py", frozen)]
pub struct PyOfflineSolution {
    #[pyo3(get)]
    cost: f64,
    /// (start_h, end_h, total_kw) per interval.
    #[pyo3(get)]
    intervals: Vec<(f64, f64, f64)>,
    /// Request id to its rate in each interval it spans.
    #[pyo3(get)]
    rates: BTreeMap<u32, Vec<f64>>,
    #[pyo3(get)]
    kkt_passed: bool,
    #[pyo3(get)]
    kkt_max_violation: f64,
}

#[pyfunction]
#[pyo3(signature = (requests, a = 1e-4, b = 6e-5))]
fn solve_offline(py: Python<'_>, requests: Vec<PyRef<'_, PyRequest>>, a: f64, b: f64) -> PyResult<PyOfflineSolution> {
    let reqs = unwrap_requests(requests);
    let cost = cost_model(a, b)?;
    py.detach(|| {
        let sol = solve(&reqs, &cost)?;
        let kkt = verify_kkt(&sol.schedule, &reqs, &sol.decomposition, KKT_TOL)?;
        let d = &sol.decomposition;
        let intervals = (0..d.num_intervals())
            .map(|k| {
                let (s, e) = d.bounds(k);
                (s.hours(), e.hours(), sol.schedule.totals()[k])
            })
            .collect();
        let rates = sol
            .schedule
            .entries()
            .iter()
            .map(|e| (e.id.0, e.rates.clone()))
            .collect();
        Ok(PyOfflineSolution {
            cost: sol.cost,
            intervals,
            rates,
            kkt_passed: kkt.passed,
            kkt_max_violation: kkt.max_violation(),
        })
    })
    .map_err(to_py)
}

/// Result of one online execution.
#[pyclass(name = "OnlineRun", module = "chargesched_py", frozen)]
pub struct PyOnlineRun {
    #[pyo3(get)]
    algorithm: String,
    #[pyo3(get)]
    q: f64,
    #[pyo3(get)]
    total_cost: f64,
    /// Request id to delivered energy, kWh.
    #[pyo3(get)]
    delivered: BTreeMap<u32, f64>,
    /// (t_start_h, t_end_h, total_kw) per constant-rate segment.
    #[pyo3(get)]
    trace: Vec<(f64, f64, f64)>,
}

/// Runs an online policy: "oa", "orchard", "orchard:<q>", "avg" or "eg".
#[pyfunction]
#[pyo3(signature = (requests, algorithm, a = 1e-4, b = 6e-5))]
fn run_online(
    py: Python<'_>,
    requests: Vec<PyRef<'_, PyRequest>>,
    algorithm: &str,
    a: f64,
    b: f64,
) -> PyResult<PyOnlineRun> {
    let reqs = unwrap_requests(requests);
    let cost = cost_model(a, b)?;
    let algo: AlgorithmKind = algorithm.parse().map_err(to_py)?;
    let out = py.detach(|| run(&reqs, &cost, algo)).map_err(to_py)?;
    Ok(PyOnlineRun {
        algorithm: algo.name().to_string(),
        q: algo.q(),
        total_cost: out.total_cost,
        delivered: out.delivered.iter().map(|(id, d)| (id.0, *d)).collect(),
        trace: out.trace.iter().map(|s| (s.t_start_h, s.t_end_h, s.total_kw)).collect(),
    })
}

/// Scenario parameters: arrival-rate segments and PEV types.
#[pyclass(name = "ScenarioConfig", module = "chargesched_py", frozen)]
pub struct PyScenarioConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    /// Reference scenario 1, 2 or 3.
    #[staticmethod]
    fn builtin(scenario: u8) -> PyResult<Self> {
        Ok(PyScenarioConfig {
            inner: ScenarioConfig::builtin(scenario).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyScenarioConfig {
            inner: ScenarioConfig::load(&path).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pyfunction]
fn generate_instance(config: &PyScenarioConfig, seed: u64) -> PyResult<Vec<PyRequest>> {
    let reqs = sim::generate_instance(&config.inner, seed).map_err(to_py)?;
    Ok(reqs.into_iter().map(|inner| PyRequest { inner }).collect())
}

type ResultTuple = (u64, String, f64, f64, f64, f64);

/// One row per (replication, algorithm): (seed, algorithm, q, cost, offline_cost, ratio).
#[pyfunction]
fn simulate(
    py: Python<'_>,
    config: &PyScenarioConfig,
    algorithms: Vec<String>,
    replications: usize,
    seed: u64,
) -> PyResult<Vec<ResultTuple>> {
    let algos = algorithms
        .iter()
        .map(|s| s.parse::<AlgorithmKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let cfg = config.inner.clone();
    let results = py
        .detach(|| sim::simulate(&cfg, &algos, replications, seed))
        .map_err(to_py)?;
    Ok(chargesched::report::result_rows(&results)
        .into_iter()
        .map(|r| (r.seed, r.algorithm, r.q, r.cost, r.offline_cost, r.ratio))
        .collect())
}

#[pymodule]
fn chargesched_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRequest>()?;
    m.add_class::<PyOfflineSolution>()?;
    m.add_class::<PyOnlineRun>()?;
    m.add_class::<PyScenarioConfig>()?;
    m.add_function(wrap_pyfunction!(solve_offline, m)?)?;
    m.add_function(wrap_pyfunction!(run_online, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
