//! Lindblad master-equation integration for pulse schedules.
//!
//! The auxiliary state decays through two effective channels |a⟩→|g⟩ and
//! |a⟩→|e⟩ with total rate κ split by the branching ratio κ_g/κ_e. Control
//! errors enter as a fractional Rabi scale (1 + δ_Ω) and a detuning term
//! placed either on |a⟩ (common mode) or across the qubit (differential).
//! Integration is fixed-step fourth-order Runge–Kutta, aligned to segment
//! boundaries so phase discontinuities are never straddled.

use crate::linalg::{c, min_eigenvalue, Mat3, QutritDensity};
use crate::protocol::{segment_hamiltonian, PulseSchedule, Segment};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("time {t} outside schedule [0, {duration}]")]
    OutOfSchedule { t: f64, duration: f64 },
    #[error("integration diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },
    #[error("propagator lost unitarity (deviation {0:.3e})")]
    UnitarityDrift(f64),
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetuningMode {
    #[default]
    Common,
    Differential,
}

impl std::str::FromStr for DetuningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "common" => Ok(DetuningMode::Common),
            "differential" => Ok(DetuningMode::Differential),
            other => Err(format!("unknown detuning mode '{other}'")),
        }
    }
}

/// Dissipation rate, branching ratio, and systematic control errors.
///
/// `kappa` is a plain inverse time (s⁻¹): a quoted decay rate of 5 kHz means
/// κ = 5×10³ s⁻¹, with no 2π factor. Rabi frequencies quoted as Ω/2π do
/// carry the 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kappa: f64,
    pub branching_g_over_e: f64,
    pub delta: f64,
    pub delta_omega: f64,
    pub detuning_mode: DetuningMode,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            branching_g_over_e: 3.0 / 22.0,
            delta: 0.0,
            delta_omega: 0.0,
            detuning_mode: DetuningMode::Common,
        }
    }
}

impl NoiseModel {
    pub fn dissipation_only(kappa: f64) -> Self {
        Self {
            kappa,
            ..Self::default()
        }
    }

    /// κ_g = κ r/(1+r) with r the branching ratio κ_g/κ_e.
    pub fn kappa_g(&self) -> f64 {
        let r = self.branching_g_over_e;
        self.kappa * r / (1.0 + r)
    }

    /// κ_e = κ/(1+r).
    pub fn kappa_e(&self) -> f64 {
        self.kappa / (1.0 + self.branching_g_over_e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub steps_per_segment: usize,
    pub record_stride: usize,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps_per_segment: 2000,
            record_stride: 1,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), EngineError> {
        if self.steps_per_segment < 16 {
            return Err(EngineError::BadConfig(format!(
                "steps_per_segment must be at least 16, got {}",
                self.steps_per_segment
            )));
        }
        if self.record_stride == 0 {
            return Err(EngineError::BadConfig("record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Density matrices sampled on the recorded time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QutritDensity>,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub final_state: QutritDensity,
    pub trajectory: Trajectory,
    /// ∫ ρ_aa(t) dt over the gate, in seconds.
    pub accumulated_pa: f64,
    pub final_leakage: f64,
}

/// Drive Hamiltonian with the Rabi scale (1 + δ_Ω) applied, plus the
/// detuning term Δ|a⟩⟨a| (common) or (Δ/2)(|e⟩⟨e| − |g⟩⟨g|) (differential).
pub fn total_hamiltonian(
    s: &PulseSchedule,
    n: &NoiseModel,
    t: f64,
) -> Result<Mat3, EngineError> {
    let (seg, t_local) = s
        .segment_at(t)
        .map_err(|_| EngineError::OutOfSchedule {
            t,
            duration: s.total_duration(),
        })?;
    Ok(segment_total_hamiltonian(seg, t_local, n))
}

fn segment_total_hamiltonian(seg: &Segment, t_local: f64, n: &NoiseModel) -> Mat3 {
    let mut h = segment_hamiltonian(seg, t_local, 1.0 + n.delta_omega);
    match n.detuning_mode {
        DetuningMode::Common => {
            h[(2, 2)] += c(n.delta, 0.0);
        }
        DetuningMode::Differential => {
            h[(0, 0)] += c(n.delta / 2.0, 0.0);
            h[(1, 1)] -= c(n.delta / 2.0, 0.0);
        }
    }
    h
}

/// −i[H,ρ] + Σ_k κ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}) with L_g = |g⟩⟨a|,
/// L_e = |e⟩⟨a|.
pub fn lindblad_rhs(rho: &Mat3, h: &Mat3, n: &NoiseModel) -> Mat3 {
    let comm = h * rho - rho * h;
    let mut out = comm * c(0.0, -1.0);
    if n.kappa > 0.0 {
        let p_aa = rho[(2, 2)];
        // L_k ρ L_k† = ρ_aa |k⟩⟨k|; L_k†L_k = |a⟩⟨a| for both channels
        out[(1, 1)] += c(n.kappa_g(), 0.0) * p_aa;
        out[(0, 0)] += c(n.kappa_e(), 0.0) * p_aa;
        let half_k = c(0.5 * n.kappa, 0.0);
        for j in 0..3 {
            out[(2, j)] -= half_k * rho[(2, j)];
            out[(j, 2)] -= half_k * rho[(j, 2)];
        }
    }
    out
}

fn hermitize(m: &Mat3) -> Mat3 {
    (m + m.adjoint()) * c(0.5, 0.0)
}

fn rk4_density_step(
    rho: &Mat3,
    seg: &Segment,
    t_local: f64,
    h_step: f64,
    n: &NoiseModel,
) -> Mat3 {
    let h0 = segment_total_hamiltonian(seg, t_local, n);
    let h_mid = segment_total_hamiltonian(seg, t_local + h_step / 2.0, n);
    let h1 = segment_total_hamiltonian(seg, t_local + h_step, n);
    let k1 = lindblad_rhs(rho, &h0, n);
    let k2 = lindblad_rhs(&(rho + k1 * c(h_step / 2.0, 0.0)), &h_mid, n);
    let k3 = lindblad_rhs(&(rho + k2 * c(h_step / 2.0, 0.0)), &h_mid, n);
    let k4 = lindblad_rhs(&(rho + k3 * c(h_step, 0.0)), &h1, n);
    hermitize(&(rho + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h_step / 6.0, 0.0)))
}

const TRACE_DRIFT_LIMIT: f64 = 1e-6;
const EIGEN_DRIFT_LIMIT: f64 = -1e-6;

/// Integrate the Lindblad equation over the full schedule.
///
/// Deterministic for fixed inputs. Errors out if the trace drifts by more
/// than 1e-6 or an eigenvalue falls below −1e-6 at a recorded point.
pub fn evolve(
    s: &PulseSchedule,
    rho0: &QutritDensity,
    n: &NoiseModel,
    cfg: &SimConfig,
) -> Result<SimResult, EngineError> {
    cfg.validate()?;
    let mut rho = *rho0.matrix();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];

    let mut seg_start = 0.0;
    for seg in &s.segments {
        let h_step = seg.duration / cfg.steps_per_segment as f64;
        for i in 0..cfg.steps_per_segment {
            let t_local = i as f64 * h_step;
            rho = rk4_density_step(&rho, seg, t_local, h_step, n);
            let t = seg_start + (i + 1) as f64 * h_step;
            let last = i + 1 == cfg.steps_per_segment;
            if (i + 1) % cfg.record_stride == 0 || last {
                check_physical(&rho, t)?;
                times.push(t);
                states.push(QutritDensity::from_integration(rho));
            }
        }
        seg_start += seg.duration;
    }

    let trajectory = Trajectory { times, states };
    let accumulated_pa = accumulated_excited_population(&trajectory);
    let final_state = trajectory.states.last().expect("nonempty").clone();
    let final_leakage = final_state.leakage();
    Ok(SimResult {
        final_state,
        trajectory,
        accumulated_pa,
        final_leakage,
    })
}

fn check_physical(rho: &Mat3, t: f64) -> Result<(), EngineError> {
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > TRACE_DRIFT_LIMIT {
        return Err(EngineError::Diverged {
            t,
            reason: format!("trace drifted to {tr}"),
        });
    }
    let min_ev = min_eigenvalue(rho);
    if min_ev < EIGEN_DRIFT_LIMIT {
        return Err(EngineError::Diverged {
            t,
            reason: format!("negative eigenvalue {min_ev:.3e}"),
        });
    }
    Ok(())
}

/// Noise-free propagator U(τ) from dU/dt = −iH(t)U, U(0) = I.
pub fn propagator(s: &PulseSchedule, cfg: &SimConfig) -> Result<Mat3, EngineError> {
    cfg.validate()?;
    let noise_free = NoiseModel::default();
    let mut u = Mat3::identity();
    for seg in &s.segments {
        let h_step = seg.duration / cfg.steps_per_segment as f64;
        for i in 0..cfg.steps_per_segment {
            let t_local = i as f64 * h_step;
            u = rk4_propagator_step(&u, seg, t_local, h_step, &noise_free);
        }
    }
    let dev = crate::linalg::max_abs_diff(&(u.adjoint() * u), &Mat3::identity());
    if dev > 1e-6 {
        return Err(EngineError::UnitarityDrift(dev));
    }
    Ok(u)
}

fn rk4_propagator_step(
    u: &Mat3,
    seg: &Segment,
    t_local: f64,
    h_step: f64,
    n: &NoiseModel,
) -> Mat3 {
    let rhs = |m: &Mat3, h: &Mat3| -> Mat3 { h * m * c(0.0, -1.0) };
    let h0 = segment_total_hamiltonian(seg, t_local, n);
    let h_mid = segment_total_hamiltonian(seg, t_local + h_step / 2.0, n);
    let h1 = segment_total_hamiltonian(seg, t_local + h_step, n);
    let k1 = rhs(u, &h0);
    let k2 = rhs(&(u + k1 * c(h_step / 2.0, 0.0)), &h_mid);
    let k3 = rhs(&(u + k2 * c(h_step / 2.0, 0.0)), &h_mid);
    let k4 = rhs(&(u + k3 * c(h_step, 0.0)), &h1);
    u + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h_step / 6.0, 0.0)
}

/// Closed-form noise-free propagator of a single segment.
///
/// In the frame e^{iφ₁(t)|a⟩⟨a|} a constant-amplitude linear-ramp segment is
/// a constant Rabi problem between the bright state and |a⟩ with effective
/// detuning −φ̇₁ and generalized Rabi frequency √(Ω² + φ̇₁²); the dark state
/// is untouched. Transforming back to the lab frame gives the exact result.
pub fn segment_oracle(seg: &Segment) -> Mat3 {
    let half = seg.theta / 2.0;
    let phase = C64::from_polar(1.0, seg.phi);
    let bright = crate::linalg::Ket3::new(c(half.cos(), 0.0), phase * c(half.sin(), 0.0), c(0.0, 0.0));
    let dark = crate::linalg::Ket3::new(c(half.sin(), 0.0), -phase * c(half.cos(), 0.0), c(0.0, 0.0));
    let aux = crate::linalg::Ket3::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));

    let omega = seg.omega;
    let alpha = seg.phi1_slope;
    let tau = seg.duration;
    let omega_r = (omega * omega + alpha * alpha).sqrt();
    // u2 = exp(−iτ [[0, Ω/2], [Ω/2, −α]]) in the (bright, a) basis
    let (cos_half, sinc_half) = if omega_r > 0.0 {
        let x = omega_r * tau / 2.0;
        (x.cos(), x.sin() / omega_r)
    } else {
        (1.0, tau / 2.0)
    };
    let global = C64::from_polar(1.0, alpha * tau / 2.0);
    let u_bb = global * (c(cos_half, 0.0) + c(0.0, -sinc_half * alpha));
    let u_aa = global * (c(cos_half, 0.0) + c(0.0, sinc_half * alpha));
    let u_ba = global * c(0.0, -sinc_half * omega);

    let mut u_rot = dark * dark.adjoint();
    u_rot += (bright * bright.adjoint()) * u_bb;
    u_rot += (bright * aux.adjoint()) * u_ba;
    u_rot += (aux * bright.adjoint()) * u_ba;
    u_rot += (aux * aux.adjoint()) * u_aa;

    // lab frame: U = R†(τ) U_rot R(0), R(t) = diag(1, 1, e^{iφ₁(t)})
    let mut r0 = Mat3::identity();
    r0[(2, 2)] = C64::from_polar(1.0, seg.phi1(0.0));
    let mut r_tau_dag = Mat3::identity();
    r_tau_dag[(2, 2)] = C64::from_polar(1.0, -seg.phi1(tau));
    r_tau_dag * u_rot * r0
}

/// Trapezoid-rule ∫ ρ_aa(t) dt over the recorded grid.
pub fn accumulated_excited_population(t: &Trajectory) -> f64 {
    let mut acc = 0.0;
    for i in 1..t.times.len() {
        let dt = t.times[i] - t.times[i - 1];
        acc += 0.5 * dt * (t.states[i].leakage() + t.states[i - 1].leakage());
    }
    acc
}
