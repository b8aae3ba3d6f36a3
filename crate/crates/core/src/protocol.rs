//! Pulse-schedule synthesis for the three holonomic gate protocols.
//!
//! A gate is specified by (θ, φ, γ, Ω). All three protocols drive the bright
//! state b = cos(θ/2)|e⟩ + e^{iφ} sin(θ/2)|g⟩ through a cyclic excursion to
//! |a⟩ and back, imprinting the holonomy U(θ, φ, γ) = exp(−i(γ/2) n·σ) on the
//! qubit subspace. They differ only in how the auxiliary laser phase φ₁
//! evolves: an abrupt midpoint jump (NHQC), a single time-optimal linear ramp
//! (BNHQC), or two concatenated half-angle ramps offset by π (CBNHQC).

use crate::linalg::{c, pauli, Mat2, Mat3, PauliAxis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid gate parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("time {t} outside schedule [0, {duration}]")]
    OutOfSchedule { t: f64, duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Nhqc,
    Bnhqc,
    Cbnhqc,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Nhqc, Protocol::Bnhqc, Protocol::Cbnhqc];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Nhqc => "NHQC",
            Protocol::Bnhqc => "BNHQC",
            Protocol::Cbnhqc => "CBNHQC",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NHQC" => Ok(Protocol::Nhqc),
            "BNHQC" => Ok(Protocol::Bnhqc),
            "CBNHQC" => Ok(Protocol::Cbnhqc),
            other => Err(format!("unknown protocol '{other}'")),
        }
    }
}

/// Rotation-axis angles (θ, φ), rotation angle γ, and Rabi frequency Ω
/// (angular, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl GateParams {
    pub fn new(theta: f64, phi: f64, gamma: f64, omega: f64) -> Result<Self, ProtocolError> {
        if !(0.0..=PI).contains(&theta) || !theta.is_finite() {
            return Err(ProtocolError::InvalidParam {
                name: "theta",
                value: theta,
            });
        }
        if !phi.is_finite() {
            return Err(ProtocolError::InvalidParam {
                name: "phi",
                value: phi,
            });
        }
        if !(gamma > 0.0 && gamma < 2.0 * PI) {
            return Err(ProtocolError::InvalidParam {
                name: "gamma",
                value: gamma,
            });
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ProtocolError::InvalidParam {
                name: "omega",
                value: omega,
            });
        }
        Ok(Self {
            theta,
            phi,
            gamma,
            omega,
        })
    }

    /// √X preset: θ = π/2, φ = 0, γ = π/2.
    pub fn sqrt_x(omega: f64) -> Result<Self, ProtocolError> {
        Self::new(PI / 2.0, 0.0, PI / 2.0, omega)
    }

    /// T-gate preset: θ = 0, φ = 0, γ = π/4.
    pub fn t_gate(omega: f64) -> Result<Self, ProtocolError> {
        Self::new(0.0, 0.0, PI / 4.0, omega)
    }
}

/// One constant-amplitude piece of the bichromatic drive. The auxiliary-laser
/// phase ramps linearly in segment-local time:
/// φ₁(t) = phi1_offset + phi1_slope · t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub phi1_offset: f64,
    pub phi1_slope: f64,
}

impl Segment {
    pub fn phi1(&self, t_local: f64) -> f64 {
        self.phi1_offset + self.phi1_slope * t_local
    }
}

/// Ordered segments making up one gate; the single source of truth for the
/// drive seen by the integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
    pub protocol: Protocol,
    pub params: GateParams,
}

impl PulseSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Segment containing time `t`, with its local time. At an interior
    /// boundary the later segment applies.
    pub fn segment_at(&self, t: f64) -> Result<(&Segment, f64), ProtocolError> {
        let duration = self.total_duration();
        let eps = duration * 1e-12;
        if t < -eps || t > duration + eps {
            return Err(ProtocolError::OutOfSchedule { t, duration });
        }
        let t = t.clamp(0.0, duration);
        let mut start = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let end = start + seg.duration;
            let last = k == self.segments.len() - 1;
            if t < end || last {
                return Ok((seg, (t - start).min(seg.duration)));
            }
            start = end;
        }
        unreachable!("schedule has at least one segment");
    }
}

/// NHQC midpoint phase-jump convention.
///
/// `Corrected` sets the second-half φ₁ to π − γ so the realised rotation
/// angle is γ for every γ, matching the other two protocols. `LiteralPaper`
/// keeps the printed jump value γ, which realises a rotation by π − γ
/// instead; the two agree only at γ = π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NhqcJump {
    #[default]
    Corrected,
    LiteralPaper,
}

/// CBNHQC ramp-slope convention. `PerSegment` makes each half a full
/// half-angle brachistochrone cycle (slope 2(π−γ/2)/(τ_C/2)); `LiteralPaper`
/// keeps the printed slope 2(π−γ/2)/τ_C, which does not close the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CbnhqcSlope {
    #[default]
    PerSegment,
    LiteralPaper,
}

/// cos(γ/2)·I − i sin(γ/2)·(n·σ) with n = (sinθcosφ, sinθsinφ, cosθ).
pub fn target_unitary(p: &GateParams) -> Mat2 {
    let n = [
        p.theta.sin() * p.phi.cos(),
        p.theta.sin() * p.phi.sin(),
        p.theta.cos(),
    ];
    let n_dot_sigma = pauli(PauliAxis::X) * c(n[0], 0.0)
        + pauli(PauliAxis::Y) * c(n[1], 0.0)
        + pauli(PauliAxis::Z) * c(n[2], 0.0);
    Mat2::identity() * c((p.gamma / 2.0).cos(), 0.0)
        + n_dot_sigma * c(0.0, -(p.gamma / 2.0).sin())
}

/// Two π-area halves of duration π/Ω with the φ₁ jump at the midpoint;
/// total duration τ_N = 2π/Ω.
pub fn build_nhqc(p: &GateParams) -> PulseSchedule {
    build_nhqc_with(p, NhqcJump::default())
}

pub fn build_nhqc_with(p: &GateParams, jump: NhqcJump) -> PulseSchedule {
    let half = PI / p.omega;
    let phi1_second = match jump {
        NhqcJump::Corrected => PI - p.gamma,
        NhqcJump::LiteralPaper => p.gamma,
    };
    let seg = |offset: f64| Segment {
        duration: half,
        omega: p.omega,
        theta: p.theta,
        phi: p.phi,
        phi1_offset: offset,
        phi1_slope: 0.0,
    };
    PulseSchedule {
        segments: vec![seg(0.0), seg(phi1_second)],
        protocol: Protocol::Nhqc,
        params: *p,
    }
}

/// Time-optimal duration τ_B = 2√(π² − (π−γ)²)/Ω for rotation angle γ.
pub fn bnhqc_duration(gamma: f64, omega: f64) -> f64 {
    2.0 * (PI * PI - (PI - gamma).powi(2)).sqrt() / omega
}

/// Single segment with the linear brachistochrone ramp
/// φ₁(t) = 2(π−γ)t/τ_B over duration τ_B.
pub fn build_bnhqc(p: &GateParams) -> PulseSchedule {
    let tau = bnhqc_duration(p.gamma, p.omega);
    PulseSchedule {
        segments: vec![Segment {
            duration: tau,
            omega: p.omega,
            theta: p.theta,
            phi: p.phi,
            phi1_offset: 0.0,
            phi1_slope: 2.0 * (PI - p.gamma) / tau,
        }],
        protocol: Protocol::Bnhqc,
        params: *p,
    }
}

/// Composite duration τ_C = 4√(π² − (π−γ/2)²)/Ω.
pub fn cbnhqc_duration(gamma: f64, omega: f64) -> f64 {
    4.0 * (PI * PI - (PI - gamma / 2.0).powi(2)).sqrt() / omega
}

/// Two half-angle brachistochrone segments with a π phase offset between
/// them; each half is a γ/2 BNHQC cycle of duration τ_C/2.
pub fn build_cbnhqc(p: &GateParams) -> PulseSchedule {
    build_cbnhqc_with(p, CbnhqcSlope::default())
}

pub fn build_cbnhqc_with(p: &GateParams, slope: CbnhqcSlope) -> PulseSchedule {
    let tau_c = cbnhqc_duration(p.gamma, p.omega);
    let half = tau_c / 2.0;
    let ramp = match slope {
        CbnhqcSlope::PerSegment => 2.0 * (PI - p.gamma / 2.0) / half,
        CbnhqcSlope::LiteralPaper => 2.0 * (PI - p.gamma / 2.0) / tau_c,
    };
    let seg = |offset: f64| Segment {
        duration: half,
        omega: p.omega,
        theta: p.theta,
        phi: p.phi,
        phi1_offset: offset,
        phi1_slope: ramp,
    };
    // segment 2 continues the ramp and adds the composite π offset
    PulseSchedule {
        segments: vec![seg(0.0), seg(PI + ramp * half)],
        protocol: Protocol::Cbnhqc,
        params: *p,
    }
}

pub fn build_schedule(protocol: Protocol, p: &GateParams) -> PulseSchedule {
    match protocol {
        Protocol::Nhqc => build_nhqc(p),
        Protocol::Bnhqc => build_bnhqc(p),
        Protocol::Cbnhqc => build_cbnhqc(p),
    }
}

/// Interaction Hamiltonian of the bichromatic drive at time `t`, in basis
/// (|e⟩, |g⟩, |a⟩): H = (Ω/2)e^{iφ₁}[e^{iφ} sin(θ/2)|g⟩ + cos(θ/2)|e⟩]⟨a| + h.c.
pub fn drive_hamiltonian(s: &PulseSchedule, t: f64) -> Result<Mat3, ProtocolError> {
    let (seg, t_local) = s.segment_at(t)?;
    Ok(segment_hamiltonian(seg, t_local, 1.0))
}

/// Segment Hamiltonian at local time, with a fractional Rabi scale factor
/// applied to the drive amplitude.
pub fn segment_hamiltonian(seg: &Segment, t_local: f64, omega_scale: f64) -> Mat3 {
    let amp = seg.omega * omega_scale / 2.0;
    let phase1 = C64::from_polar(1.0, seg.phi1(t_local));
    let h_ea = phase1 * c(amp * (seg.theta / 2.0).cos(), 0.0);
    let h_ga = phase1 * C64::from_polar(amp * (seg.theta / 2.0).sin(), seg.phi);
    let mut h = Mat3::zeros();
    h[(0, 2)] = h_ea;
    h[(1, 2)] = h_ga;
    h[(2, 0)] = h_ea.conj();
    h[(2, 1)] = h_ga.conj();
    h
}
