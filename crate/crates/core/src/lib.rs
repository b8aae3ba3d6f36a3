//! Simulation and benchmarking of nonadiabatic holonomic single-qubit gates
//! (NHQC, BNHQC, CBNHQC) on a dissipative Λ-type three-level system.
//!
//! The crate is split along the pipeline: [`linalg`] holds matrix primitives
//! and fidelity metrics, [`protocol`] turns gate parameters into piecewise
//! pulse schedules, [`engine`] integrates the Lindblad master equation,
//! [`tomography`] reconstructs states and process matrices from (simulated)
//! measurements, and [`harness`] composes everything into reproducible
//! experiment runs with CSV/JSON/SVG outputs.

pub mod engine;
pub mod harness;
pub mod linalg;
pub mod protocol;
pub mod tomography;

pub use engine::{DetuningMode, NoiseModel, SimConfig, SimResult, Trajectory};
pub use linalg::{BlochVector, QubitDensity, QutritDensity};
pub use protocol::{GateParams, Protocol, PulseSchedule, Segment};
pub use tomography::{MeasurementRecord, ProcessMatrix};
