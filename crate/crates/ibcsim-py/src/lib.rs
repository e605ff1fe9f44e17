//! Python bindings for the ibcsim simulator.
//!
//! Exposes scenario generation, the three solvers and the decentralized
//! runtime as an in-process extension module:
//!
//! ```text
//! import ibcsim_py as ibc
//! cfg = ibc.ScenarioConfig.desk_preset(seed=7)
//! scenario = ibc.Scenario.generate(cfg)
//! params = ibc.AlgorithmParams("proposed", cfg.num_users, qos=1.5)
//! result = ibc.run(scenario, params)
//! print(result.rates, result.sum_rate)
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ibcsim::algorithms;
use ibcsim::bench;
use ibcsim::model::Dimensions;
use ibcsim::runtime;
use ibcsim::scenario;

fn to_py_err(e: ibcsim::Error) -> PyErr {
    match e {
        ibcsim::Error::Domain(_) | ibcsim::Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Scenario configuration: dimensions, geometry, powers and the seed.
#[pyclass(name = "ScenarioConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: scenario::ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[new]
    #[pyo3(signature = (
        num_tx = 10,
        rx_per_tx = 2,
        tx_antennas = 8,
        rx_antennas = 4,
        streams = 1,
        drop_radius = 400.0,
        min_pair_distance = 3.0,
        tx_power_dbm = 35.0,
        noise_dbm = -100.0,
        pathloss_ref_db = 41.0,
        pathloss_exponent = 3.5,
        seed = 0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        num_tx: usize,
        rx_per_tx: usize,
        tx_antennas: usize,
        rx_antennas: usize,
        streams: usize,
        drop_radius: f64,
        min_pair_distance: f64,
        tx_power_dbm: f64,
        noise_dbm: f64,
        pathloss_ref_db: f64,
        pathloss_exponent: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let dims = Dimensions::uniform(num_tx, rx_per_tx, tx_antennas, rx_antennas, streams)
            .map_err(to_py_err)?;
        let inner = scenario::ScenarioConfig {
            dims,
            drop_radius,
            min_pair_distance,
            tx_power_dbm,
            noise_dbm,
            pathloss_ref_db,
            pathloss_exponent,
            seed,
        };
        inner.validate().map_err(to_py_err)?;
        Ok(PyScenarioConfig { inner })
    }

    /// Small 3-transmitter deployment for fast experiments.
    #[staticmethod]
    #[pyo3(signature = (seed = 0))]
    fn desk_preset(seed: u64) -> Self {
        PyScenarioConfig {
            inner: scenario::ScenarioConfig {
                seed,
                ..scenario::ScenarioConfig::desk_preset()
            },
        }
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.inner.dims.num_rx
    }

    #[getter]
    fn num_tx(&self) -> usize {
        self.inner.dims.num_tx
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn with_seed(&self, seed: u64) -> Self {
        PyScenarioConfig {
            inner: scenario::ScenarioConfig {
                seed,
                ..self.inner.clone()
            },
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(num_tx={}, num_users={}, antennas={}x{}, seed={})",
            self.inner.dims.num_tx,
            self.inner.dims.num_rx,
            self.inner.dims.tx_antennas,
            self.inner.dims.rx_antennas,
            self.inner.seed
        )
    }
}

/// One generated drop: positions, serving map and channels.
#[pyclass(name = "Scenario")]
struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn generate(config: &PyScenarioConfig) -> PyResult<Self> {
        let inner = scenario::generate(&config.inner).map_err(to_py_err)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = scenario::Scenario::from_json(text).map_err(to_py_err)?;
        Ok(PyScenario { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py_err)
    }

    #[getter]
    fn tx_positions(&self) -> Vec<(f64, f64)> {
        self.inner
            .topology
            .tx_positions
            .iter()
            .map(|p| (p[0], p[1]))
            .collect()
    }

    #[getter]
    fn rx_positions(&self) -> Vec<(f64, f64)> {
        self.inner
            .topology
            .rx_positions
            .iter()
            .map(|p| (p[0], p[1]))
            .collect()
    }

    #[getter]
    fn serving(&self) -> Vec<usize> {
        self.inner.topology.serving.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(num_tx={}, num_users={}, seed={})",
            self.inner.config.dims.num_tx, self.inner.config.dims.num_rx, self.inner.config.seed
        )
    }
}

/// Solver selection and constants.
#[pyclass(name = "AlgorithmParams", skip_from_py_object)]
#[derive(Clone)]
struct PyAlgorithmParams {
    inner: algorithms::AlgorithmParams,
}

#[pymethods]
impl PyAlgorithmParams {
    /// `mode` is one of "wmmse", "qos_hard", "proposed". `qos` is the
    /// common minimum rate in bits/s/Hz; `qos_per_user` overrides it.
    #[new]
    #[pyo3(signature = (
        mode,
        num_users,
        qos = 0.0,
        qos_per_user = None,
        penalty_slope = None,
        multiplier_step = None,
        max_iters = None,
        obj_tol = None,
        deactivation_eps = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mode: &str,
        num_users: usize,
        qos: f64,
        qos_per_user: Option<Vec<f64>>,
        penalty_slope: Option<f64>,
        multiplier_step: Option<f64>,
        max_iters: Option<usize>,
        obj_tol: Option<f64>,
        deactivation_eps: Option<f64>,
    ) -> PyResult<Self> {
        let mode: algorithms::AlgorithmMode = mode.parse().map_err(to_py_err)?;
        let mut inner = algorithms::AlgorithmParams::new(mode, num_users).with_uniform_qos(qos);
        if let Some(qos_vec) = qos_per_user {
            inner.qos = qos_vec;
        }
        if let Some(v) = penalty_slope {
            inner.penalty_slope = v;
        }
        if let Some(v) = multiplier_step {
            inner.multiplier_step = v;
        }
        if let Some(v) = max_iters {
            inner.max_iters = v;
        }
        if let Some(v) = obj_tol {
            inner.obj_tol = v;
        }
        if let Some(v) = deactivation_eps {
            inner.deactivation_eps = v;
        }
        inner.validate(num_users).map_err(to_py_err)?;
        Ok(PyAlgorithmParams { inner })
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode.to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "AlgorithmParams(mode={}, qos={:?}, max_iters={})",
            self.inner.mode, self.inner.qos, self.inner.max_iters
        )
    }
}

/// Final allocation of one run.
#[pyclass(name = "AllocationResult")]
struct PyAllocationResult {
    inner: algorithms::AllocationResult,
}

#[pymethods]
impl PyAllocationResult {
    #[getter]
    fn rates(&self) -> Vec<f64> {
        self.inner.rates.clone()
    }

    #[getter]
    fn relaxations(&self) -> Vec<f64> {
        self.inner.relaxations.clone()
    }

    #[getter]
    fn satisfied(&self) -> Vec<bool> {
        self.inner.satisfied.clone()
    }

    #[getter]
    fn deactivated(&self) -> Vec<bool> {
        self.inner.deactivated.clone()
    }

    #[getter]
    fn sum_rate(&self) -> f64 {
        self.inner.sum_rate
    }

    #[getter]
    fn penalized_objective(&self) -> f64 {
        self.inner.penalized_objective
    }

    #[getter]
    fn iterations_used(&self) -> usize {
        self.inner.iterations_used
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn objective_history(&self) -> Vec<f64> {
        self.inner.objective_history.clone()
    }

    #[getter]
    fn max_power_ratio(&self) -> f64 {
        self.inner.max_power_ratio
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "AllocationResult(sum_rate={:.4}, converged={}, iterations={})",
            self.inner.sum_rate, self.inner.converged, self.inner.iterations_used
        )
    }
}

/// Signaling audit of a decentralized run.
#[pyclass(name = "EventTrace")]
struct PyEventTrace {
    inner: runtime::EventTrace,
}

#[pymethods]
impl PyEventTrace {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Newline-delimited JSON records.
    fn to_ndjson(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_ndjson(&mut buf).map_err(to_py_err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Runs the centralized solver on one drop.
#[pyfunction]
fn run(scenario: &PyScenario, params: &PyAlgorithmParams) -> PyResult<PyAllocationResult> {
    let inner = algorithms::run(&scenario.inner, &params.inner).map_err(to_py_err)?;
    Ok(PyAllocationResult { inner })
}

/// Runs the decentralized message-passing engine on one drop.
#[pyfunction]
#[pyo3(signature = (scenario, params, pilot_noise_var = 0.0))]
fn run_decentralized(
    scenario: &PyScenario,
    params: &PyAlgorithmParams,
    pilot_noise_var: f64,
) -> PyResult<(PyAllocationResult, PyEventTrace)> {
    let (result, trace) =
        runtime::run_decentralized(&scenario.inner, &params.inner, pilot_noise_var)
            .map_err(to_py_err)?;
    Ok((
        PyAllocationResult { inner: result },
        PyEventTrace { inner: trace },
    ))
}

/// Shannon rate of a single stream, bits/s/Hz.
#[pyfunction]
fn stream_rate(sinr: f64) -> PyResult<f64> {
    ibcsim::model::stream_rate(sinr).map_err(to_py_err)
}

/// Runs a Monte-Carlo campaign from a JSON config string; writes
/// results.csv and summary.json under `out_dir` and returns their paths.
#[pyfunction]
fn run_campaign_json(config_json: &str, out_dir: &str) -> PyResult<(String, String)> {
    let config: bench::CampaignConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let results = bench::run_campaign(&config).map_err(to_py_err)?;
    let (csv, summary) =
        bench::write_results(&results, std::path::Path::new(out_dir)).map_err(to_py_err)?;
    Ok((
        csv.to_string_lossy().into_owned(),
        summary.to_string_lossy().into_owned(),
    ))
}

#[pymodule]
fn ibcsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyAlgorithmParams>()?;
    m.add_class::<PyAllocationResult>()?;
    m.add_class::<PyEventTrace>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_decentralized, m)?)?;
    m.add_function(wrap_pyfunction!(stream_rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign_json, m)?)?;
    Ok(())
}
