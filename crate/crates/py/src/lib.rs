use nhqc_core::engine::{evolve as core_evolve, SimConfig};
use nhqc_core::harness::{self, GateSpec, HarnessError, InitialState, RunConfig, SweepSpec};
use nhqc_core::linalg::{project_qubit, state_fidelity, QubitDensity, QutritDensity};
use nhqc_core::protocol::{build_schedule, target_unitary as core_target, Protocol};
use nhqc_core::tomography::TomoInput;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::str::FromStr;

fn to_py_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Config(_) => PyValueError::new_err(e.to_string()),
        HarnessError::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    protocol: Option<&str>,
    gate: &str,
    rabi_khz: f64,
    kappa_khz: f64,
    delta: f64,
    delta_omega: f64,
    detuning_mode: &str,
    shots: u64,
    seed: u64,
    steps: usize,
    initial_state: &str,
) -> PyResult<RunConfig> {
    let mut cfg = RunConfig {
        gate: GateSpec::parse(gate).map_err(to_py_err)?,
        rabi_khz,
        kappa_khz,
        delta,
        delta_omega,
        detuning_mode: detuning_mode.parse().map_err(PyValueError::new_err)?,
        shots,
        seed,
        steps_per_segment: steps,
        initial_state: InitialState::parse(initial_state).map_err(to_py_err)?,
        ..RunConfig::default()
    };
    if let Some(p) = protocol {
        cfg.protocols = vec![Protocol::from_str(p).map_err(PyValueError::new_err)?];
    }
    Ok(cfg)
}

/// Gate durations in microseconds, keyed by protocol name.
#[pyfunction]
#[pyo3(signature = (gate = "sqrtx", rabi_khz = 47.1))]
fn durations_us(py: Python<'_>, gate: &str, rabi_khz: f64) -> PyResult<Py<PyDict>> {
    let cfg = RunConfig {
        gate: GateSpec::parse(gate).map_err(to_py_err)?,
        rabi_khz,
        ..RunConfig::default()
    };
    let params = cfg.gate_params().map_err(to_py_err)?;
    let out = PyDict::new_bound(py);
    for protocol in Protocol::ALL {
        let schedule = build_schedule(protocol, &params);
        out.set_item(protocol.name(), schedule.total_duration() * 1.0e6)?;
    }
    Ok(out.into())
}

/// Ideal 2×2 holonomic gate as nested (re, im) pairs, rows over (|e⟩, |g⟩).
#[pyfunction]
#[pyo3(signature = (gate = "sqrtx"))]
fn target_unitary(gate: &str) -> PyResult<Vec<Vec<(f64, f64)>>> {
    let cfg = RunConfig {
        gate: GateSpec::parse(gate).map_err(to_py_err)?,
        ..RunConfig::default()
    };
    let u = core_target(&cfg.gate_params().map_err(to_py_err)?);
    Ok((0..2)
        .map(|i| (0..2).map(|j| (u[(i, j)].re, u[(i, j)].im)).collect())
        .collect())
}

/// Integrate one protocol; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (
    protocol, gate = "sqrtx", rabi_khz = 47.1, kappa_khz = 0.0, delta = 0.0,
    delta_omega = 0.0, detuning_mode = "common", shots = 0, seed = 0,
    steps = 2000, initial_state = "g",
))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    protocol: &str,
    gate: &str,
    rabi_khz: f64,
    kappa_khz: f64,
    delta: f64,
    delta_omega: f64,
    detuning_mode: &str,
    shots: u64,
    seed: u64,
    steps: usize,
    initial_state: &str,
) -> PyResult<Py<PyDict>> {
    let cfg = build_config(
        Some(protocol),
        gate,
        rabi_khz,
        kappa_khz,
        delta,
        delta_omega,
        detuning_mode,
        shots,
        seed,
        steps,
        initial_state,
    )?;
    let params = cfg.gate_params().map_err(to_py_err)?;
    let which = Protocol::from_str(protocol).map_err(PyValueError::new_err)?;
    let schedule = build_schedule(which, &params);
    let input = match cfg.initial_state {
        InitialState::G => TomoInput::G,
        InitialState::E => TomoInput::E,
        InitialState::Gx => TomoInput::Gx,
        InitialState::Gy => TomoInput::Gy,
    };
    let rho0 = QutritDensity::from_pure(&input.qutrit_ket());
    let result = core_evolve(
        &schedule,
        &rho0,
        &cfg.noise_model(),
        &SimConfig {
            steps_per_segment: cfg.steps_per_segment,
            record_stride: cfg.record_stride,
            rng_seed: cfg.seed,
        },
    )
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;

    let target = QubitDensity::from_pure(&(core_target(&params) * input.qubit_ket()));
    let (block, _) = project_qubit(&result.final_state);
    let fidelity = state_fidelity(&block.project_physical(), &target)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let (p_e, p_g, p_a) = result.final_state.populations();

    let out = PyDict::new_bound(py);
    out.set_item("state_fidelity", fidelity)?;
    out.set_item("final_leakage", result.final_leakage)?;
    out.set_item("accumulated_pa_us", result.accumulated_pa * 1.0e6)?;
    out.set_item("populations", (p_e, p_g, p_a))?;
    out.set_item("duration_us", schedule.total_duration() * 1.0e6)?;
    Ok(out.into())
}

/// Trajectory CSV for one protocol (same format as the CLI `evolve`).
#[pyfunction]
#[pyo3(signature = (
    protocol, gate = "sqrtx", rabi_khz = 47.1, kappa_khz = 0.0, delta = 0.0,
    delta_omega = 0.0, detuning_mode = "common", shots = 0, seed = 0,
    steps = 2000, initial_state = "g",
))]
#[allow(clippy::too_many_arguments)]
fn evolve_csv(
    protocol: &str,
    gate: &str,
    rabi_khz: f64,
    kappa_khz: f64,
    delta: f64,
    delta_omega: f64,
    detuning_mode: &str,
    shots: u64,
    seed: u64,
    steps: usize,
    initial_state: &str,
) -> PyResult<String> {
    let cfg = build_config(
        Some(protocol),
        gate,
        rabi_khz,
        kappa_khz,
        delta,
        delta_omega,
        detuning_mode,
        shots,
        seed,
        steps,
        initial_state,
    )?;
    harness::run_evolve(&cfg).map_err(to_py_err)
}

/// Process tomography: χ (re/im nested lists) and the process fidelity.
#[pyfunction]
#[pyo3(signature = (
    protocol, gate = "sqrtx", rabi_khz = 47.1, kappa_khz = 0.0, delta = 0.0,
    delta_omega = 0.0, detuning_mode = "common", shots = 0, seed = 0, steps = 2000,
))]
#[allow(clippy::too_many_arguments)]
fn process_tomography(
    py: Python<'_>,
    protocol: &str,
    gate: &str,
    rabi_khz: f64,
    kappa_khz: f64,
    delta: f64,
    delta_omega: f64,
    detuning_mode: &str,
    shots: u64,
    seed: u64,
    steps: usize,
) -> PyResult<Py<PyDict>> {
    let cfg = build_config(
        Some(protocol),
        gate,
        rabi_khz,
        kappa_khz,
        delta,
        delta_omega,
        detuning_mode,
        shots,
        seed,
        steps,
        "g",
    )?;
    let (doc, _) = harness::run_tomo(&cfg).map_err(to_py_err)?;
    let out = PyDict::new_bound(py);
    for key in ["chi_re", "chi_im", "chi_trace", "process_fidelity"] {
        let json = serde_json::to_string(&doc[key])
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let module = py.import_bound("json")?;
        out.set_item(key, module.call_method1("loads", (json,))?)?;
    }
    Ok(out.into())
}

/// Sweep CSV over kappa_khz | delta | delta_omega for all three protocols.
#[pyfunction]
#[pyo3(signature = (
    param, from_value, to_value, points, gate = "sqrtx", rabi_khz = 47.1,
    kappa_khz = 0.0, delta = 0.0, delta_omega = 0.0, detuning_mode = "common",
    shots = 0, seed = 0, steps = 2000,
))]
#[allow(clippy::too_many_arguments)]
fn sweep_csv(
    param: &str,
    from_value: f64,
    to_value: f64,
    points: usize,
    gate: &str,
    rabi_khz: f64,
    kappa_khz: f64,
    delta: f64,
    delta_omega: f64,
    detuning_mode: &str,
    shots: u64,
    seed: u64,
    steps: usize,
) -> PyResult<String> {
    let cfg = build_config(
        None,
        gate,
        rabi_khz,
        kappa_khz,
        delta,
        delta_omega,
        detuning_mode,
        shots,
        seed,
        steps,
        "g",
    )?;
    let spec = SweepSpec {
        parameter: harness::SweepParameter::parse(param).map_err(to_py_err)?,
        from: from_value,
        to: to_value,
        points,
    };
    spec.validate().map_err(to_py_err)?;
    harness::run_sweep(&cfg, &spec).map_err(to_py_err)
}

#[pymodule]
fn nhqc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(durations_us, m)?)?;
    m.add_function(wrap_pyfunction!(target_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_csv, m)?)?;
    m.add_function(wrap_pyfunction!(process_tomography, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
