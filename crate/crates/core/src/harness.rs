//! Composition of the other modules into reproducible experiment runs:
//! trajectory traces, process tomography, and parameter sweeps, with CSV /
//! JSON / SVG outputs.
//!
//! Unit conventions at this boundary: `rabi_khz` is Ω/2π in kHz and is
//! converted with 2π×10³ to rad/s; `kappa_khz` is a plain decay rate and is
//! converted with 10³ to s⁻¹ (no 2π); `delta` is in units of Ω; `delta_omega`
//! is fractional. Output times are in microseconds. All numeric CSV values
//! are printed with 12 significant digits so outputs are byte-reproducible.

use crate::engine::{self, DetuningMode, NoiseModel, SimConfig};
use crate::linalg::{state_fidelity, QubitDensity, QutritDensity};
use crate::protocol::{build_schedule, target_unitary, GateParams, Protocol};
use crate::tomography::{
    self, ideal_chi, process_fidelity, reconstruct_block, reconstruct_state, simulate_measurement,
    stokes_from_record, ChannelOutputs, MeasurementRecord, TomoInput,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl From<engine::EngineError> for HarnessError {
    fn from(e: engine::EngineError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

impl From<tomography::TomoError> for HarnessError {
    fn from(e: tomography::TomoError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

/// Gate selection: a named preset or explicit (θ, φ, γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSpec {
    Named(GatePreset),
    Explicit { theta: f64, phi: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatePreset {
    Sqrtx,
    Tgate,
}

impl GateSpec {
    /// Parse "sqrtx", "tgate", or "θ,φ,γ" in radians.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "sqrtx" => Ok(GateSpec::Named(GatePreset::Sqrtx)),
            "tgate" => Ok(GateSpec::Named(GatePreset::Tgate)),
            other => {
                let parts: Vec<&str> = other.split(',').collect();
                if parts.len() != 3 {
                    return Err(HarnessError::Config(format!(
                        "gate must be 'sqrtx', 'tgate', or 'theta,phi,gamma', got '{s}'"
                    )));
                }
                let vals: Result<Vec<f64>, _> =
                    parts.iter().map(|p| p.trim().parse::<f64>()).collect();
                let vals = vals.map_err(|e| {
                    HarnessError::Config(format!("bad gate angles '{s}': {e}"))
                })?;
                Ok(GateSpec::Explicit {
                    theta: vals[0],
                    phi: vals[1],
                    gamma: vals[2],
                })
            }
        }
    }

    pub fn angles(&self) -> (f64, f64, f64) {
        match self {
            GateSpec::Named(GatePreset::Sqrtx) => (PI / 2.0, 0.0, PI / 2.0),
            GateSpec::Named(GatePreset::Tgate) => (0.0, 0.0, PI / 4.0),
            GateSpec::Explicit { theta, phi, gamma } => (*theta, *phi, *gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    G,
    E,
    Gx,
    Gy,
}

impl InitialState {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "g" => Ok(InitialState::G),
            "e" => Ok(InitialState::E),
            "gx" => Ok(InitialState::Gx),
            "gy" => Ok(InitialState::Gy),
            other => Err(HarnessError::Config(format!(
                "unknown initial state '{other}'"
            ))),
        }
    }

    fn as_tomo_input(&self) -> TomoInput {
        match self {
            InitialState::G => TomoInput::G,
            InitialState::E => TomoInput::E,
            InitialState::Gx => TomoInput::Gx,
            InitialState::Gy => TomoInput::Gy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub protocols: Vec<Protocol>,
    pub gate: GateSpec,
    pub rabi_khz: f64,
    pub kappa_khz: f64,
    pub delta: f64,
    pub delta_omega: f64,
    pub detuning_mode: DetuningMode,
    pub shots: u64,
    pub steps_per_segment: usize,
    pub record_stride: usize,
    pub seed: u64,
    pub initial_state: InitialState,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocols: Protocol::ALL.to_vec(),
            gate: GateSpec::Named(GatePreset::Sqrtx),
            rabi_khz: 47.1,
            kappa_khz: 0.0,
            delta: 0.0,
            delta_omega: 0.0,
            detuning_mode: DetuningMode::Common,
            shots: 0,
            steps_per_segment: 2000,
            record_stride: 10,
            seed: 0,
            initial_state: InitialState::G,
        }
    }
}

impl RunConfig {
    /// Ω in rad/s (Ω/2π quoted in kHz carries the 2π).
    pub fn omega(&self) -> f64 {
        self.rabi_khz * 2.0 * PI * 1.0e3
    }

    /// κ in s⁻¹ (quoted kHz decay rates are plain inverse time).
    pub fn kappa(&self) -> f64 {
        self.kappa_khz * 1.0e3
    }

    /// Detuning in rad/s (`delta` is in units of Ω).
    pub fn delta_rad(&self) -> f64 {
        self.delta * self.omega()
    }

    pub fn gate_params(&self) -> Result<GateParams, HarnessError> {
        if !(self.rabi_khz > 0.0 && self.rabi_khz.is_finite()) {
            return Err(HarnessError::Config(format!(
                "rabi_khz must be positive, got {}",
                self.rabi_khz
            )));
        }
        let (theta, phi, gamma) = self.gate.angles();
        GateParams::new(theta, phi, gamma, self.omega())
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            kappa: self.kappa(),
            branching_g_over_e: 3.0 / 22.0,
            delta: self.delta_rad(),
            delta_omega: self.delta_omega,
            detuning_mode: self.detuning_mode,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            steps_per_segment: self.steps_per_segment,
            record_stride: self.record_stride,
            rng_seed: self.seed,
        }
    }

    fn single_protocol(&self) -> Result<Protocol, HarnessError> {
        match self.protocols.as_slice() {
            [p] => Ok(*p),
            other => Err(HarnessError::Config(format!(
                "this command needs exactly one protocol, got {}",
                other.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Kappa,
    Delta,
    DeltaOmega,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Kappa => "kappa_khz",
            SweepParameter::Delta => "delta",
            SweepParameter::DeltaOmega => "delta_omega",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "kappa" | "kappa_khz" => Ok(SweepParameter::Kappa),
            "delta" => Ok(SweepParameter::Delta),
            "delta_omega" | "delta-omega" => Ok(SweepParameter::DeltaOmega),
            other => Err(HarnessError::Config(format!(
                "unknown sweep parameter '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.from < self.to) {
            return Err(HarnessError::Config(format!(
                "sweep range must satisfy from < to, got [{}, {}]",
                self.from, self.to
            )));
        }
        if self.points < 2 {
            return Err(HarnessError::Config(format!(
                "sweep needs at least 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.to - self.from) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.from + i as f64 * step).collect()
    }

    /// Default sweep ranges: κ ∈ [0, 100] kHz, Δ and δ_Ω ∈ [−0.2, 0.2], 21 points.
    pub fn default_for(parameter: SweepParameter) -> Self {
        match parameter {
            SweepParameter::Kappa => Self {
                parameter,
                from: 0.0,
                to: 100.0,
                points: 21,
            },
            SweepParameter::Delta | SweepParameter::DeltaOmega => Self {
                parameter,
                from: -0.2,
                to: 0.2,
                points: 21,
            },
        }
    }
}

/// 12 significant digits, the fixed CSV number format.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

fn target_state(cfg: &RunConfig, params: &GateParams) -> QubitDensity {
    let ket0 = cfg.initial_state.as_tomo_input().qubit_ket();
    let ket = target_unitary(params) * ket0;
    QubitDensity::from_pure(&ket)
}

fn initial_qutrit(cfg: &RunConfig) -> QutritDensity {
    QutritDensity::from_pure(&cfg.initial_state.as_tomo_input().qutrit_ket())
}

fn record_for_state(
    state: &QutritDensity,
    shots: u64,
    seed: u64,
    index: u64,
) -> MeasurementRecord {
    simulate_measurement(state, shots, seed ^ index)
}

/// Trajectory CSV: one row per recorded time with populations, Stokes
/// components, and fidelity to the ideal final state.
pub fn run_evolve(cfg: &RunConfig) -> Result<String, HarnessError> {
    let protocol = cfg.single_protocol()?;
    let params = cfg.gate_params()?;
    let schedule = build_schedule(protocol, &params);
    let result = engine::evolve(
        &schedule,
        &initial_qutrit(cfg),
        &cfg.noise_model(),
        &cfg.sim_config(),
    )?;
    let target = target_state(cfg, &params);

    let mut out = String::from("t_us,p_e,p_g,p_a,s_x,s_y,s_z,fidelity_to_target\n");
    for (i, (t, state)) in result
        .trajectory
        .times
        .iter()
        .zip(&result.trajectory.states)
        .enumerate()
    {
        let (p_e, p_g, p_a) = state.populations();
        let m = record_for_state(state, cfg.shots, cfg.seed, i as u64);
        let s = stokes_from_record(&m);
        let rec = reconstruct_block(&m).project_physical();
        let f = state_fidelity(&rec, &target)
            .map_err(|e| HarnessError::Numerical(e.to_string()))?;
        let row = [
            t * 1.0e6,
            if cfg.shots > 0 { m.p_e } else { p_e },
            if cfg.shots > 0 { m.p_g } else { p_g },
            if cfg.shots > 0 { 1.0 - m.p_e - m.p_g } else { p_a },
            s.s_x,
            s.s_y,
            s.s_z,
            f,
        ];
        let cells: Vec<String> = row.iter().map(|v| fmt_sig(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

struct TomoRun {
    chi: tomography::ProcessMatrix,
    fidelity: f64,
    records: Vec<(TomoInput, MeasurementRecord)>,
}

fn run_process_tomography(
    cfg: &RunConfig,
    protocol: Protocol,
    noise: &NoiseModel,
    seed: u64,
) -> Result<TomoRun, HarnessError> {
    let params = cfg.gate_params()?;
    let schedule = build_schedule(protocol, &params);
    let mut outputs = Vec::with_capacity(4);
    let mut records = Vec::with_capacity(4);
    for (k, input) in TomoInput::ALL.iter().enumerate() {
        let rho0 = QutritDensity::from_pure(&input.qutrit_ket());
        let result = engine::evolve(&schedule, &rho0, noise, &cfg.sim_config())?;
        let m = record_for_state(&result.final_state, cfg.shots, seed, (k as u64) << 32);
        records.push((*input, m));
        outputs.push(reconstruct_state(&m, true));
    }
    let channel = ChannelOutputs {
        rho_g: outputs[0],
        rho_e: outputs[1],
        rho_x: outputs[2],
        rho_y: outputs[3],
    };
    let chi = tomography::process_tomography(&channel)?;
    let chi_id = ideal_chi(&target_unitary(&params));
    let fidelity = process_fidelity(&chi, &chi_id)?;
    Ok(TomoRun {
        chi,
        fidelity,
        records,
    })
}

/// Process tomography of the configured gate: χ as JSON plus a histogram CSV
/// of its entries.
pub fn run_tomo(cfg: &RunConfig) -> Result<(serde_json::Value, String), HarnessError> {
    let protocol = cfg.single_protocol()?;
    let noise = cfg.noise_model();
    let run = run_process_tomography(cfg, protocol, &noise, cfg.seed)?;

    let chi_re: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| run.chi.chi[(i, j)].re).collect())
        .collect();
    let chi_im: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| run.chi.chi[(i, j)].im).collect())
        .collect();
    let records: serde_json::Map<String, serde_json::Value> = run
        .records
        .iter()
        .map(|(input, m)| {
            (
                input.label().to_string(),
                json!({
                    "p_g": m.p_g, "p_e": m.p_e, "p_x": m.p_x, "p_y": m.p_y,
                    "shots": m.shots,
                }),
            )
        })
        .collect();
    let doc = json!({
        "protocol": protocol.name(),
        "rabi_khz": cfg.rabi_khz,
        "kappa_khz": cfg.kappa_khz,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "chi_re": chi_re,
        "chi_im": chi_im,
        "chi_trace": run.chi.trace(),
        "process_fidelity": run.fidelity,
        "records": records,
    });

    let labels = ["I", "X", "Y", "Z"];
    let mut csv = String::from("row,col,re,im\n");
    for i in 0..4 {
        for j in 0..4 {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                labels[i],
                labels[j],
                fmt_sig(run.chi.chi[(i, j)].re),
                fmt_sig(run.chi.chi[(i, j)].im)
            ));
        }
    }
    Ok((doc, csv))
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param_name: &'static str,
    pub param_value: f64,
    pub protocol: Protocol,
    pub state_fidelity: f64,
    pub process_fidelity: f64,
    pub accumulated_pa_us: f64,
    pub final_leakage: f64,
}

fn apply_sweep_value(cfg: &RunConfig, parameter: SweepParameter, value: f64) -> RunConfig {
    let mut point = cfg.clone();
    match parameter {
        SweepParameter::Kappa => point.kappa_khz = value,
        SweepParameter::Delta => point.delta = value,
        SweepParameter::DeltaOmega => point.delta_omega = value,
    }
    point
}

/// Evaluate all configured protocols on the sweep grid. Points run
/// concurrently with per-point seeds `seed ⊕ index`; rows are merged in grid
/// order so output is deterministic.
pub fn run_sweep_rows(cfg: &RunConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    spec.validate()?;
    cfg.gate_params()?;
    let grid = spec.grid();
    let results: Result<Vec<Vec<SweepRow>>, HarnessError> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let point_cfg = apply_sweep_value(cfg, spec.parameter, value);
            let point_seed = cfg.seed ^ idx as u64;
            let params = point_cfg.gate_params()?;
            let noise = point_cfg.noise_model();
            let target = target_state(&point_cfg, &params);
            let mut rows = Vec::with_capacity(point_cfg.protocols.len());
            for &protocol in &point_cfg.protocols {
                let schedule = build_schedule(protocol, &params);
                let result = engine::evolve(
                    &schedule,
                    &initial_qutrit(&point_cfg),
                    &noise,
                    &point_cfg.sim_config(),
                )?;
                let m = record_for_state(
                    &result.final_state,
                    point_cfg.shots,
                    point_seed,
                    u64::MAX,
                );
                let rec = reconstruct_block(&m).project_physical();
                let f_state = state_fidelity(&rec, &target)
                    .map_err(|e| HarnessError::Numerical(e.to_string()))?;
                let tomo = run_process_tomography(&point_cfg, protocol, &noise, point_seed)?;
                rows.push(SweepRow {
                    param_name: spec.parameter.name(),
                    param_value: value,
                    protocol,
                    state_fidelity: f_state,
                    process_fidelity: tomo.fidelity,
                    accumulated_pa_us: result.accumulated_pa * 1.0e6,
                    final_leakage: result.final_leakage,
                });
            }
            Ok(rows)
        })
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "param_name,param_value,protocol,state_fidelity,process_fidelity,accumulated_pa_us,final_leakage\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.param_name,
            fmt_sig(r.param_value),
            r.protocol.name(),
            fmt_sig(r.state_fidelity),
            fmt_sig(r.process_fidelity),
            fmt_sig(r.accumulated_pa_us),
            fmt_sig(r.final_leakage),
        ));
    }
    out
}

pub fn run_sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<String, HarnessError> {
    Ok(sweep_rows_to_csv(&run_sweep_rows(cfg, spec)?))
}

/// Signed fidelity differences F(+x) − F(−x) for grid points that have a
/// mirror partner, per protocol. Empty when the grid has no such pairs.
pub fn asymmetry_report(rows: &[SweepRow]) -> String {
    let mut out = String::from("protocol,param_value,state_fidelity_diff\n");
    for protocol in Protocol::ALL {
        let series: Vec<&SweepRow> = rows.iter().filter(|r| r.protocol == protocol).collect();
        for r in &series {
            if r.param_value <= 0.0 {
                continue;
            }
            let mirror = series
                .iter()
                .find(|m| (m.param_value + r.param_value).abs() < 1e-12 * r.param_value.abs().max(1.0));
            if let Some(m) = mirror {
                out.push_str(&format!(
                    "{},{},{}\n",
                    protocol.name(),
                    fmt_sig(r.param_value),
                    fmt_sig(r.state_fidelity - m.state_fidelity),
                ));
            }
        }
    }
    out
}

/// Unit-conversion self-check lines for the CLI `selftest` subcommand.
pub fn selftest_report(cfg: &RunConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "rabi_khz {} -> omega {} rad/s (factor 2*pi*1e3)\n",
        cfg.rabi_khz,
        fmt_sig(cfg.omega())
    ));
    out.push_str(&format!(
        "kappa_khz {} -> kappa {} 1/s (factor 1e3, no 2*pi)\n",
        cfg.kappa_khz,
        fmt_sig(cfg.kappa())
    ));
    let (theta, phi, gamma) = cfg.gate.angles();
    out.push_str(&format!(
        "gate angles theta={} phi={} gamma={} rad\n",
        fmt_sig(theta),
        fmt_sig(phi),
        fmt_sig(gamma)
    ));
    if let Ok(params) = cfg.gate_params() {
        for protocol in &cfg.protocols {
            let schedule = build_schedule(*protocol, &params);
            out.push_str(&format!(
                "{} duration {} us\n",
                protocol.name(),
                fmt_sig(schedule.total_duration() * 1.0e6)
            ));
        }
    }
    out
}

/// Minimal line-chart SVG for CSVs produced by this tool.
pub mod plot {
    use super::HarnessError;

    pub enum PlotKind {
        Trajectory,
        Sweep,
    }

    impl PlotKind {
        pub fn parse(s: &str) -> Result<Self, HarnessError> {
            match s.to_ascii_lowercase().as_str() {
                "traj" | "trajectory" => Ok(PlotKind::Trajectory),
                "sweep" => Ok(PlotKind::Sweep),
                other => Err(HarnessError::Config(format!("unknown plot kind '{other}'"))),
            }
        }
    }

    struct Series {
        label: String,
        points: Vec<(f64, f64)>,
    }

    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const MARGIN: f64 = 60.0;

    fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| HarnessError::Config("empty CSV".into()))?;
        let cols: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<String> = line.split(',').map(str::to_string).collect();
            if cells.len() != cols.len() {
                return Err(HarnessError::Config(format!(
                    "ragged CSV row: '{line}'"
                )));
            }
            rows.push(cells);
        }
        if rows.is_empty() {
            return Err(HarnessError::Config("CSV has no data rows".into()));
        }
        Ok((cols, rows))
    }

    fn numeric(cell: &str) -> Result<f64, HarnessError> {
        cell.parse::<f64>()
            .map_err(|e| HarnessError::Config(format!("non-numeric CSV cell '{cell}': {e}")))
    }

    fn column_index(cols: &[String], name: &str) -> Result<usize, HarnessError> {
        cols.iter()
            .position(|c| c == name)
            .ok_or_else(|| HarnessError::Config(format!("CSV is missing column '{name}'")))
    }

    pub fn render(text: &str, kind: PlotKind) -> Result<String, HarnessError> {
        let (cols, rows) = parse_csv(text)?;
        let (x_label, series) = match kind {
            PlotKind::Trajectory => {
                let xi = column_index(&cols, "t_us")?;
                let wanted = ["p_e", "p_g", "p_a", "fidelity_to_target"];
                let mut series = Vec::new();
                for name in wanted {
                    let yi = column_index(&cols, name)?;
                    let mut points = Vec::with_capacity(rows.len());
                    for row in &rows {
                        points.push((numeric(&row[xi])?, numeric(&row[yi])?));
                    }
                    series.push(Series {
                        label: name.to_string(),
                        points,
                    });
                }
                ("t_us".to_string(), series)
            }
            PlotKind::Sweep => {
                let xi = column_index(&cols, "param_value")?;
                let yi = column_index(&cols, "state_fidelity")?;
                let pi = column_index(&cols, "protocol")?;
                let mut labels: Vec<String> = Vec::new();
                for row in &rows {
                    if !labels.contains(&row[pi]) {
                        labels.push(row[pi].clone());
                    }
                }
                let mut series = Vec::new();
                for label in labels {
                    let mut points = Vec::new();
                    for row in &rows {
                        if row[pi] == label {
                            points.push((numeric(&row[xi])?, numeric(&row[yi])?));
                        }
                    }
                    series.push(Series { label, points });
                }
                (rows[0][column_index(&cols, "param_name")?].clone(), series)
            }
        };
        Ok(render_series(&x_label, &series))
    }

    fn render_series(x_label: &str, series: &[Series]) -> String {
        let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 - x0 < f64::EPSILON {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < f64::EPSILON {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        );
        svg.push_str(&format!(
            "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
            m = MARGIN,
            b = H - MARGIN,
            r = W - MARGIN,
            t = MARGIN
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            H - MARGIN / 3.0,
            x_label
        ));
        for (tick, value) in [(x0, x0), (x1, x1)] {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{value:.4}</text>\n",
                sx(tick),
                H - MARGIN + 18.0
            ));
        }
        for value in [y0, y1] {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{value:.4}</text>\n",
                MARGIN - 6.0,
                sy(value) + 4.0
            ));
        }
        for (k, s) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
                W - MARGIN + 4.0,
                MARGIN + 16.0 * k as f64,
                s.label
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_expansion() {
        let (theta, phi, gamma) = GateSpec::Named(GatePreset::Sqrtx).angles();
        assert_eq!((theta, phi, gamma), (PI / 2.0, 0.0, PI / 2.0));
        let (theta, phi, gamma) = GateSpec::Named(GatePreset::Tgate).angles();
        assert_eq!((theta, phi, gamma), (0.0, 0.0, PI / 4.0));
    }

    #[test]
    fn gate_spec_parsing() {
        assert_eq!(
            GateSpec::parse("sqrtx").unwrap(),
            GateSpec::Named(GatePreset::Sqrtx)
        );
        match GateSpec::parse("1.5707963,0,0.7853981").unwrap() {
            GateSpec::Explicit { theta, .. } => assert!((theta - PI / 2.0).abs() < 1e-6),
            other => panic!("expected explicit spec, got {other:?}"),
        }
        assert!(GateSpec::parse("nope").is_err());
        assert!(GateSpec::parse("1,2").is_err());
    }

    #[test]
    fn unit_conversions() {
        let cfg = RunConfig {
            rabi_khz: 47.1,
            kappa_khz: 5.0,
            ..RunConfig::default()
        };
        assert!((cfg.omega() - 2.0 * PI * 47.1e3).abs() < 1e-6);
        assert!((cfg.kappa() - 5.0e3).abs() < 1e-12);
    }

    #[test]
    fn evolve_csv_deterministic_with_shots() {
        let cfg = RunConfig {
            protocols: vec![Protocol::Bnhqc],
            shots: 20000,
            seed: 11,
            steps_per_segment: 200,
            record_stride: 20,
            ..RunConfig::default()
        };
        let a = run_evolve(&cfg).unwrap();
        let b = run_evolve(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.lines().count() > 5);
        assert!(a.starts_with("t_us,p_e,p_g,p_a,"));
    }

    #[test]
    fn evolve_requires_single_protocol() {
        let cfg = RunConfig::default();
        assert!(matches!(run_evolve(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn ideal_evolve_final_row() {
        let cfg = RunConfig {
            protocols: vec![Protocol::Bnhqc],
            steps_per_segment: 1000,
            record_stride: 100,
            ..RunConfig::default()
        };
        let csv = run_evolve(&cfg).unwrap();
        let last = csv.lines().last().unwrap();
        let cells: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
        let p_a = cells[3];
        let fidelity = cells[7];
        assert!(p_a < 1e-6, "final leakage {p_a}");
        assert!(fidelity > 1.0 - 1e-6, "final fidelity {fidelity}");
    }

    #[test]
    fn tomo_ideal_sqrt_x() {
        let cfg = RunConfig {
            protocols: vec![Protocol::Cbnhqc],
            steps_per_segment: 1000,
            record_stride: 1000,
            ..RunConfig::default()
        };
        let (doc, csv) = run_tomo(&cfg).unwrap();
        let f = doc["process_fidelity"].as_f64().unwrap();
        assert!(f > 1.0 - 1e-6, "ideal process fidelity {f}");
        let chi_re = doc["chi_re"].as_array().unwrap();
        let chi_ii = chi_re[0].as_array().unwrap()[0].as_f64().unwrap();
        assert!((chi_ii - 0.5).abs() < 1e-6);
        let chi_im_ix = doc["chi_im"].as_array().unwrap()[0].as_array().unwrap()[1]
            .as_f64()
            .unwrap();
        assert!((chi_im_ix - 0.5).abs() < 1e-6);
        assert_eq!(csv.lines().count(), 17);
    }

    #[test]
    fn sweep_rows_ordered_and_complete() {
        let cfg = RunConfig {
            steps_per_segment: 200,
            record_stride: 200,
            ..RunConfig::default()
        };
        let spec = SweepSpec {
            parameter: SweepParameter::Kappa,
            from: 0.0,
            to: 20.0,
            points: 3,
        };
        let rows = run_sweep_rows(&cfg, &spec).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[0].param_value, 0.0);
        assert_eq!(rows[0].protocol, Protocol::Nhqc);
        assert_eq!(rows[8].param_value, 20.0);
        let csv = sweep_rows_to_csv(&rows);
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn sweep_validation() {
        let bad = SweepSpec {
            parameter: SweepParameter::Delta,
            from: 0.2,
            to: -0.2,
            points: 5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn plot_rejects_empty_csv() {
        assert!(plot::render("", plot::PlotKind::Trajectory).is_err());
        assert!(plot::render("t_us,p_e\n", plot::PlotKind::Trajectory).is_err());
    }

    #[test]
    fn plot_renders_trajectory_svg() {
        let cfg = RunConfig {
            protocols: vec![Protocol::Nhqc],
            steps_per_segment: 100,
            record_stride: 10,
            ..RunConfig::default()
        };
        let csv = run_evolve(&cfg).unwrap();
        let svg = plot::render(&csv, plot::PlotKind::Trajectory).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 4);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);

        let partial: RunConfig =
            serde_json::from_str(r#"{"rabi_khz": 33.3, "kappa_khz": 66.7}"#).unwrap();
        assert_eq!(partial.rabi_khz, 33.3);
        assert_eq!(partial.shots, 0);
    }
}
