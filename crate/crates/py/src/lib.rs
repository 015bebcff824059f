//! Python bindings for the sidelink broadcast simulator.
//!
//! Exposes the load planner, highway deployment, error-rate tables, and
//! the Monte Carlo engine in-process, so analysis notebooks can drive the
//! simulator without shelling out to the CLI:
//!
//!     import sidelink_sim_py as sim
//!     plan = sim.plan_load(ivd_m=10.0)
//!     summary = sim.run_point(ivd_m=50.0, retx=True, iterations=2000)
//!     print(plan.mcs, summary.effective_prr)

use std::path::PathBuf;

use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sidelink_sim::channel::{mw_to_dbm, noise_power_mw, LinkBudget};
use sidelink_sim::config::RootConfig;
use sidelink_sim::engine::{run, SimConfig, TableSet};
use sidelink_sim::l2s::{bler_lookup, load_table, save_table, L2sTable};
use sidelink_sim::metrics::{ci95_halfwidth, effective_prr};
use sidelink_sim::scenario::{deploy, Deployment, ScenarioConfig};
use sidelink_sim::traffic::{LoadPlan, McsTable, TrafficConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Spectral-efficiency ladder indexed by MCS.
#[pyclass(skip_from_py_object, name = "McsTable")]
#[derive(Clone)]
struct PyMcsTable {
    inner: McsTable,
}

#[pymethods]
impl PyMcsTable {
    /// The built-in 21-entry QPSK/16QAM ladder.
    #[new]
    fn new() -> Self {
        Self {
            inner: McsTable::default(),
        }
    }

    /// Loads an `index,spectral_efficiency` file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: McsTable::from_file(&path).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Spectral efficiency in bit/s/Hz, or None for an unknown index.
    fn spectral_efficiency(&self, mcs: u8) -> Option<f64> {
        self.inner.spectral_efficiency(mcs)
    }

    fn max_index(&self) -> u8 {
        self.inner.max_index()
    }

    fn max_spectral_efficiency(&self) -> f64 {
        self.inner.max_spectral_efficiency()
    }

    /// Smallest index whose efficiency reaches `required_se`, or None if
    /// even the top of the ladder falls short.
    fn select(&self, required_se: f64) -> Option<u8> {
        sidelink_sim::traffic::select_mcs(&self.inner, required_se)
    }

    fn __repr__(&self) -> String {
        format!(
            "McsTable(len={}, max_se={:.6})",
            self.inner.len(),
            self.inner.max_spectral_efficiency()
        )
    }
}

/// Result of sizing one cell's load: UE count, offered volume, chosen
/// MCS, and the reception-ratio cap under overload.
#[pyclass(skip_from_py_object, name = "LoadPlan", get_all)]
#[derive(Clone)]
struct PyLoadPlan {
    ivd_m: f64,
    message_rate_hz: f64,
    retx: bool,
    ue_per_bs: u64,
    data_volume_bps: f64,
    data_volume_mbps: f64,
    required_se: f64,
    selected_mcs: Option<u8>,
    mcs: u8,
    ue_supported: u64,
    prr_max: f64,
    overloaded: bool,
}

impl From<LoadPlan> for PyLoadPlan {
    fn from(p: LoadPlan) -> Self {
        Self {
            ivd_m: p.ivd_m,
            message_rate_hz: p.message_rate_hz,
            retx: p.retx,
            ue_per_bs: p.ue_per_bs,
            data_volume_bps: p.data_volume_bps,
            data_volume_mbps: p.data_volume_mbps_display(),
            required_se: p.required_se,
            selected_mcs: p.selected_mcs,
            mcs: p.applied_mcs,
            ue_supported: p.ue_supported,
            prr_max: p.prr_max,
            overloaded: p.overloaded(),
        }
    }
}

#[pymethods]
impl PyLoadPlan {
    fn __repr__(&self) -> String {
        format!(
            "LoadPlan(ivd_m={}, retx={}, ue_per_bs={}, mcs={}, overloaded={}, prr_max={:.4})",
            self.ivd_m, self.retx, self.ue_per_bs, self.mcs, self.overloaded, self.prr_max
        )
    }
}

/// Sizes one cell: UEs per station, offered bit volume, and the smallest
/// MCS that carries it; an overloaded cell caps `prr_max` below 1.
#[pyfunction]
#[pyo3(signature = (ivd_m, message_rate_hz=10.0, retx=false, packet_size_bytes=256, bandwidth_hz=10.0e6, isd_m=1732.0, lane_count=6, mcs_table=None))]
#[allow(clippy::too_many_arguments)]
fn plan_load(
    ivd_m: f64,
    message_rate_hz: f64,
    retx: bool,
    packet_size_bytes: u32,
    bandwidth_hz: f64,
    isd_m: f64,
    lane_count: u32,
    mcs_table: Option<PyRef<'_, PyMcsTable>>,
) -> PyResult<PyLoadPlan> {
    let builtin = McsTable::default();
    let table = mcs_table.as_ref().map_or(&builtin, |t| &t.inner);
    let traffic = TrafficConfig {
        packet_size_bytes,
        message_rate_hz,
    };
    sidelink_sim::traffic::plan_load(
        table,
        &traffic,
        bandwidth_hz,
        isd_m,
        ivd_m,
        lane_count,
        retx,
    )
    .map(PyLoadPlan::from)
    .map_err(value_err)
}

/// A dropped highway: vehicles on their lanes plus the roadside base
/// stations, with nearest-station assignment already applied.
#[pyclass(name = "Deployment")]
struct PyDeployment {
    inner: Deployment,
}

#[pymethods]
impl PyDeployment {
    #[new]
    #[pyo3(signature = (ivd_m=10.0, rng_seed=1, highway_length_m=3464.0, lane_count=6, lane_width_m=4.0, isd_m=1732.0, bs_count=2, comm_range_m=400.0, random_lane_offsets=true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ivd_m: f64,
        rng_seed: u64,
        highway_length_m: f64,
        lane_count: u32,
        lane_width_m: f64,
        isd_m: f64,
        bs_count: u32,
        comm_range_m: f64,
        random_lane_offsets: bool,
    ) -> PyResult<Self> {
        let cfg = ScenarioConfig {
            highway_length_m,
            lane_count,
            lane_width_m,
            ivd_m,
            isd_m,
            bs_count,
            comm_range_m,
            rng_seed,
            random_lane_offsets,
        };
        Ok(Self {
            inner: deploy(&cfg).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.vehicles().len()
    }

    fn vehicle_count(&self) -> usize {
        self.inner.vehicles().len()
    }

    fn base_station_count(&self) -> usize {
        self.inner.base_stations().len()
    }

    /// (x_min, x_max) of the region whose transmitters are evaluated.
    fn eval_region(&self) -> (f64, f64) {
        self.inner.eval_region()
    }

    /// List of (id, lane, x_m, y_m, controlling_bs).
    fn vehicles(&self) -> Vec<(u32, u32, f64, f64, u32)> {
        self.inner
            .vehicles()
            .iter()
            .map(|v| (v.id, v.lane, v.x_m, v.y_m, v.controlling_bs))
            .collect()
    }

    /// List of (id, x_m, y_m).
    fn base_stations(&self) -> Vec<(u32, f64, f64)> {
        self.inner
            .base_stations()
            .iter()
            .map(|b| (b.id, b.x_m, b.y_m))
            .collect()
    }

    fn in_eval_region(&self, vehicle_id: u32) -> PyResult<bool> {
        self.check_id(vehicle_id)?;
        Ok(self.inner.in_eval_region(vehicle_id))
    }

    /// Ids of the vehicles within `range_m` of the given one.
    fn neighbors_within(&self, vehicle_id: u32, range_m: f64) -> PyResult<Vec<u32>> {
        self.check_id(vehicle_id)?;
        Ok(self.inner.neighbors_within(vehicle_id, range_m))
    }

    fn __repr__(&self) -> String {
        format!(
            "Deployment(vehicles={}, base_stations={})",
            self.inner.vehicles().len(),
            self.inner.base_stations().len()
        )
    }
}

impl PyDeployment {
    fn check_id(&self, vehicle_id: u32) -> PyResult<()> {
        if (vehicle_id as usize) < self.inner.vehicles().len() {
            Ok(())
        } else {
            Err(PyIndexError::new_err(format!(
                "no vehicle with id {vehicle_id}"
            )))
        }
    }
}

/// SNR-to-error-rate curves for one channel condition, indexed by MCS.
#[pyclass(skip_from_py_object, name = "ErrorTable")]
#[derive(Clone)]
struct PyErrorTable {
    inner: L2sTable,
}

#[pymethods]
impl PyErrorTable {
    /// Generates the built-in synthetic curves for one speed; `retx`
    /// selects the combined first-plus-retransmission variant.
    #[staticmethod]
    #[pyo3(signature = (speed_kmh=100.0, retx=false))]
    fn synthetic(speed_kmh: f64, retx: bool) -> PyResult<Self> {
        let config = RootConfig::default();
        let mcs = McsTable::default();
        Ok(Self {
            inner: config.table_for(&mcs, speed_kmh, retx).map_err(value_err)?,
        })
    }

    /// Loads an `mcs,snr_db,bler` file.
    #[staticmethod]
    #[pyo3(signature = (path, label="file", channel="file", speed_kmh=0.0))]
    fn load(path: PathBuf, label: &str, channel: &str, speed_kmh: f64) -> PyResult<Self> {
        Ok(Self {
            inner: load_table(&path, label, channel, speed_kmh).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_table(&self.inner, &path).map_err(runtime_err)
    }

    /// Block error rate at the given SINR, interpolated on the curve.
    fn bler(&self, mcs: u8, sinr_db: f64) -> PyResult<f64> {
        bler_lookup(&self.inner, mcs, sinr_db).map_err(value_err)
    }

    fn mcs_indices(&self) -> Vec<u32> {
        self.inner.curves.iter().map(|c| u32::from(c.mcs)).collect()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn channel(&self) -> String {
        self.inner.channel.clone()
    }

    #[getter]
    fn speed_kmh(&self) -> f64 {
        self.inner.speed_kmh
    }

    fn __repr__(&self) -> String {
        format!(
            "ErrorTable(label={:?}, channel={:?}, speed_kmh={}, curves={})",
            self.inner.label,
            self.inner.channel,
            self.inner.speed_kmh,
            self.inner.curves.len()
        )
    }
}

/// Aggregate outcome of one simulated sweep cell.
#[pyclass(skip_from_py_object, name = "RunSummary", get_all)]
#[derive(Clone)]
struct PyRunSummary {
    evaluated: u64,
    received: u64,
    runtime_prr: f64,
    prr_max: f64,
    effective_prr: f64,
    ci95: f64,
    mean_sinr_db: f64,
    mcs: u8,
    overloaded: bool,
}

#[pymethods]
impl PyRunSummary {
    fn __repr__(&self) -> String {
        format!(
            "RunSummary(evaluated={}, received={}, runtime_prr={:.4}, effective_prr={:.4})",
            self.evaluated, self.received, self.runtime_prr, self.effective_prr
        )
    }
}

/// Runs one cell end to end with the baseline setup: drop the highway,
/// size the load, generate the error tables, and simulate.
#[pyfunction]
#[pyo3(signature = (ivd_m, message_rate_hz=10.0, speed_kmh=100.0, retx=false, iterations=1000, seed=1, parallel=true))]
#[allow(clippy::too_many_arguments)]
fn run_point(
    ivd_m: f64,
    message_rate_hz: f64,
    speed_kmh: f64,
    retx: bool,
    iterations: u64,
    seed: u64,
    parallel: bool,
) -> PyResult<PyRunSummary> {
    let config = RootConfig::default();
    let mcs = config.mcs_table().map_err(value_err)?;
    let deployment = deploy(&config.scenario_config(ivd_m, seed)).map_err(value_err)?;
    let traffic = config.traffic_config(message_rate_hz).map_err(value_err)?;
    let plan = sidelink_sim::traffic::plan_load(
        &mcs,
        &traffic,
        config.link.bandwidth_hz,
        config.scenario.isd_m,
        ivd_m,
        config.scenario.lane_count,
        retx,
    )
    .map_err(value_err)?;
    let tables = TableSet {
        first: config.table_for(&mcs, speed_kmh, false).map_err(value_err)?,
        retx: if retx {
            Some(config.table_for(&mcs, speed_kmh, true).map_err(value_err)?)
        } else {
            None
        },
    };
    let sim = SimConfig {
        iterations,
        retx_enabled: retx,
        rng_seed: seed,
        comm_range_m: config.scenario.comm_range_m,
        record_iterations: false,
        parallel,
    };
    let budget = LinkBudget::default();
    let result = run(&deployment, &plan, &budget, &tables, &sim).map_err(runtime_err)?;
    Ok(PyRunSummary {
        evaluated: result.evaluated,
        received: result.received,
        runtime_prr: result.runtime_prr,
        prr_max: plan.prr_max,
        effective_prr: effective_prr(plan.prr_max, result.runtime_prr),
        ci95: ci95_halfwidth(result.received, result.evaluated),
        mean_sinr_db: result.sinr.mean_db().unwrap_or(f64::NAN),
        mcs: plan.applied_mcs,
        overloaded: plan.overloaded(),
    })
}

/// One row of a finished sweep.
#[pyclass(skip_from_py_object, name = "SweepPoint", get_all)]
#[derive(Clone)]
struct PySweepPoint {
    ivd_m: f64,
    message_rate_hz: f64,
    speed_kmh: f64,
    retx: bool,
    mcs: u8,
    overloaded: bool,
    ue_per_bs: u64,
    data_volume_mbps: f64,
    prr_max: f64,
    runtime_prr: f64,
    effective_prr: f64,
    ci95: f64,
    mean_sinr_db: f64,
    evaluated: u64,
    received: u64,
}

#[pymethods]
impl PySweepPoint {
    fn __repr__(&self) -> String {
        format!(
            "SweepPoint(ivd_m={}, retx={}, effective_prr={:.4})",
            self.ivd_m, self.retx, self.effective_prr
        )
    }
}

/// A finished sweep: result rows, per-cell failures, written files.
#[pyclass(skip_from_py_object, name = "SweepOutcome", get_all)]
#[derive(Clone)]
struct PySweepOutcome {
    points: Vec<PySweepPoint>,
    failures: Vec<String>,
    files: Vec<String>,
    config_fingerprint: String,
}

#[pymethods]
impl PySweepOutcome {
    fn __repr__(&self) -> String {
        format!(
            "SweepOutcome(points={}, failures={})",
            self.points.len(),
            self.failures.len()
        )
    }
}

/// Runs the full configured sweep and writes all result files, exactly
/// like the CLI. `config_path=None` uses the baseline configuration.
#[pyfunction]
#[pyo3(signature = (output_dir, config_path=None, seed=None, parallel=true))]
fn run_sweep(
    output_dir: PathBuf,
    config_path: Option<PathBuf>,
    seed: Option<u64>,
    parallel: bool,
) -> PyResult<PySweepOutcome> {
    let mut config = match config_path {
        Some(path) => sidelink_sim::config::load_config(&path).map_err(value_err)?,
        None => RootConfig::default(),
    };
    if let Some(seed) = seed {
        config.sim.rng_seed = seed;
    }
    let outcome =
        sidelink_sim::sweep::run_sweep(&config, &output_dir, parallel).map_err(runtime_err)?;
    Ok(PySweepOutcome {
        points: outcome
            .result
            .points
            .iter()
            .map(|p| PySweepPoint {
                ivd_m: p.ivd_m,
                message_rate_hz: p.message_rate_hz,
                speed_kmh: p.speed_kmh,
                retx: p.retx,
                mcs: p.mcs,
                overloaded: p.overloaded,
                ue_per_bs: p.ue_per_bs,
                data_volume_mbps: p.data_volume_mbps,
                prr_max: p.prr_max,
                runtime_prr: p.runtime_prr,
                effective_prr: p.effective_prr,
                ci95: p.ci95,
                mean_sinr_db: p.mean_sinr_db,
                evaluated: p.evaluated,
                received: p.received,
            })
            .collect(),
        failures: outcome
            .failures
            .iter()
            .map(|f| {
                format!(
                    "ivd {} rate {} speed {} retx {}: {}",
                    f.ivd_m, f.message_rate_hz, f.speed_kmh, f.retx, f.message
                )
            })
            .collect(),
        files: outcome
            .files
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        config_fingerprint: outcome.result.config_fingerprint,
    })
}

/// Two-slope line-of-sight pathloss in dB.
#[pyfunction]
#[pyo3(signature = (distance_m, carrier_freq_hz=5.9e9, h_tx_m=1.5, h_rx_m=1.5))]
fn pathloss_db(distance_m: f64, carrier_freq_hz: f64, h_tx_m: f64, h_rx_m: f64) -> f64 {
    sidelink_sim::channel::pathloss_db(distance_m, carrier_freq_hz, h_tx_m, h_rx_m)
}

/// Linear-domain average of two SINR values given in dB.
#[pyfunction]
fn combine_sinr_db(first_db: f64, second_db: f64) -> f64 {
    sidelink_sim::engine::combine_sinr_db(first_db, second_db)
}

/// Thermal noise power in dBm over the given bandwidth.
#[pyfunction]
#[pyo3(signature = (bandwidth_hz=10.0e6, noise_figure_db=9.0))]
fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    mw_to_dbm(noise_power_mw(bandwidth_hz, noise_figure_db))
}

#[pymodule]
fn sidelink_sim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMcsTable>()?;
    m.add_class::<PyLoadPlan>()?;
    m.add_class::<PyDeployment>()?;
    m.add_class::<PyErrorTable>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_class::<PySweepPoint>()?;
    m.add_class::<PySweepOutcome>()?;
    m.add_function(wrap_pyfunction!(plan_load, m)?)?;
    m.add_function(wrap_pyfunction!(run_point, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(pathloss_db, m)?)?;
    m.add_function(wrap_pyfunction!(combine_sinr_db, m)?)?;
    m.add_function(wrap_pyfunction!(noise_power_dbm, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
