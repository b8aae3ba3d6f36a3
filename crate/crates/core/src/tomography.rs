//! Finite-shot measurement simulation, Stokes-parameter state
//! reconstruction, and χ-matrix process tomography.
//!
//! Reconstruction follows the measured-population pipeline: the four basis
//! populations (P_g, P_e, P_x, P_y) give the Stokes vector
//! s_x = s_0 − 2P_x, s_y = 1 − 2P_y, s_z = 1 − 2P_g, s_0 = P_g + P_e, and
//! the state is ρ = (I + s·σ)/2. The process matrix χ is solved from the
//! channel's action on the input set {|g⟩, |e⟩, |g⟩_x, |g⟩_y} by linear
//! inversion in the Pauli basis {I, X, Y, Z}.

use crate::linalg::{
    c, density_from_stokes, pauli_basis, BlochVector, Ket2, Ket3, Mat2, Mat4, QubitDensity,
    QutritDensity,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("process tomography system is singular")]
    SingularSystem,
    #[error("negative trace product {0:.3e} in process fidelity")]
    NegativeTraceProduct(f64),
}

/// Measured populations in the four detection bases. `shots = 0` means
/// exact expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub p_g: f64,
    pub p_e: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub shots: u64,
}

/// Labels for the process-tomography input set {|g⟩, |e⟩, |g⟩_x, |g⟩_y}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TomoInput {
    G,
    E,
    Gx,
    Gy,
}

impl TomoInput {
    pub const ALL: [TomoInput; 4] = [TomoInput::G, TomoInput::E, TomoInput::Gx, TomoInput::Gy];

    pub fn label(&self) -> &'static str {
        match self {
            TomoInput::G => "g",
            TomoInput::E => "e",
            TomoInput::Gx => "gx",
            TomoInput::Gy => "gy",
        }
    }

    /// Qubit ket in basis (|e⟩, |g⟩): |g⟩_x = (|e⟩−|g⟩)/√2,
    /// |g⟩_y = (|e⟩−i|g⟩)/√2.
    pub fn qubit_ket(&self) -> Ket2 {
        match self {
            TomoInput::G => Ket2::new(c(0.0, 0.0), c(1.0, 0.0)),
            TomoInput::E => Ket2::new(c(1.0, 0.0), c(0.0, 0.0)),
            TomoInput::Gx => Ket2::new(c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)),
            TomoInput::Gy => Ket2::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)),
        }
    }

    /// Same state embedded in the Λ system, with zero |a⟩ amplitude.
    pub fn qutrit_ket(&self) -> Ket3 {
        let q = self.qubit_ket();
        Ket3::new(q[0], q[1], c(0.0, 0.0))
    }
}

fn projection_probability(rho: &QutritDensity, ket: &Ket3) -> f64 {
    (ket.adjoint() * rho.matrix() * ket)[(0, 0)].re
}

/// Exact projection probabilities, each independently replaced by a binomial
/// sample mean when `shots > 0` (the four bases are measured in separate
/// experimental runs).
pub fn simulate_measurement(rho: &QutritDensity, shots: u64, seed: u64) -> MeasurementRecord {
    let kets = [
        TomoInput::G.qutrit_ket(),
        TomoInput::E.qutrit_ket(),
        TomoInput::Gx.qutrit_ket(),
        TomoInput::Gy.qutrit_ket(),
    ];
    let mut probs = [0.0; 4];
    for (p, ket) in probs.iter_mut().zip(&kets) {
        *p = projection_probability(rho, ket).clamp(0.0, 1.0);
    }
    if shots > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in probs.iter_mut() {
            *p = sample_binomial_mean(&mut rng, *p, shots);
        }
    }
    MeasurementRecord {
        p_g: probs[0],
        p_e: probs[1],
        p_x: probs[2],
        p_y: probs[3],
        shots,
    }
}

fn sample_binomial_mean<R: Rng>(rng: &mut R, p: f64, shots: u64) -> f64 {
    let bin = Binomial::new(shots, p).expect("probability clamped to [0, 1]");
    bin.sample(rng) as f64 / shots as f64
}

/// The measured-population Stokes formulas, verbatim; no clipping.
pub fn stokes_from_record(m: &MeasurementRecord) -> BlochVector {
    stokes_from_record_with(m, false)
}

/// With `leakage_consistent` the constants 1 in s_y and s_z are replaced by
/// s_0, for comparison on leaked states.
pub fn stokes_from_record_with(m: &MeasurementRecord, leakage_consistent: bool) -> BlochVector {
    let s_0 = m.p_g + m.p_e;
    let one = if leakage_consistent { s_0 } else { 1.0 };
    BlochVector {
        s_x: s_0 - 2.0 * m.p_x,
        s_y: one - 2.0 * m.p_y,
        s_z: one - 2.0 * m.p_g,
        s_0,
    }
}

/// ρ = (I + s·σ)/2 from the record; with `project`, negative eigenvalues are
/// clipped and the trace rescaled to its pre-projection value.
pub fn reconstruct_state(m: &MeasurementRecord, project: bool) -> QubitDensity {
    let rho = density_from_stokes(&stokes_from_record(m));
    if project {
        rho.project_physical()
    } else {
        rho
    }
}

/// Raw qubit-block reconstruction ρ = (s_0 I + s·σ)/2 with the
/// leakage-consistent Stokes components, so the trace equals the measured
/// qubit population s_0. For an exact record this recovers the top-left 2×2
/// block of the three-level state, leakage counted as loss.
pub fn reconstruct_block(m: &MeasurementRecord) -> QubitDensity {
    let mut s = stokes_from_record_with(m, true);
    // shot noise on independent runs can push s_0 past 1
    if s.s_0 > 1.0 {
        let excess = s.s_0 - 1.0;
        s.s_x -= excess;
        s.s_y -= excess;
        s.s_z -= excess;
        s.s_0 = 1.0;
    }
    let half = c(0.5, 0.0);
    let mat = Mat2::new(
        c(s.s_0 + s.s_z, 0.0) * half,
        c(s.s_x, -s.s_y) * half,
        c(s.s_x, s.s_y) * half,
        c(s.s_0 - s.s_z, 0.0) * half,
    );
    QubitDensity::new(mat).expect("block reconstruction is Hermitian with trace in [0, 1]")
}

/// 4×4 Hermitian process matrix in the operator basis (I, X, Y, Z).
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub chi: Mat4,
}

impl ProcessMatrix {
    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }
}

/// Measured channel outputs for each state of the tomography input set.
#[derive(Debug, Clone)]
pub struct ChannelOutputs {
    pub rho_g: QubitDensity,
    pub rho_e: QubitDensity,
    pub rho_x: QubitDensity,
    pub rho_y: QubitDensity,
}

/// Linear-inversion process tomography over the fixed input set.
///
/// The channel's action on the Pauli basis follows from the outputs:
/// ε(I) = ρ_e + ρ_g, ε(σ_z) = ρ_e − ρ_g, ε(σ_x) = ε(I) − 2ρ_x,
/// ε(σ_y) = ε(I) − 2ρ_y. The 16 unknowns χ_mn then solve
/// Σ_mn χ_mn E_m σ_k E_n† = ε(σ_k).
pub fn process_tomography(out: &ChannelOutputs) -> Result<ProcessMatrix, TomoError> {
    let eps_i = out.rho_e.matrix() + out.rho_g.matrix();
    let eps_z = out.rho_e.matrix() - out.rho_g.matrix();
    let eps_x = eps_i - out.rho_x.matrix() * c(2.0, 0.0);
    let eps_y = eps_i - out.rho_y.matrix() * c(2.0, 0.0);
    let eps = [eps_i, eps_x, eps_y, eps_z];

    let basis = pauli_basis();
    let mut a = DMatrix::<C64>::zeros(16, 16);
    let mut b = DVector::<C64>::zeros(16);
    for k in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                let row = k * 4 + i * 2 + j;
                b[row] = eps[k][(i, j)];
                for m in 0..4 {
                    for n in 0..4 {
                        let op = basis[m] * basis[k] * basis[n].adjoint();
                        a[(row, m * 4 + n)] = op[(i, j)];
                    }
                }
            }
        }
    }
    let chi_flat = a.lu().solve(&b).ok_or(TomoError::SingularSystem)?;
    let mut chi = Mat4::zeros();
    for m in 0..4 {
        for n in 0..4 {
            chi[(m, n)] = chi_flat[m * 4 + n];
        }
    }
    let chi = (chi + chi.adjoint()) * c(0.5, 0.0);
    Ok(ProcessMatrix { chi })
}

/// Rank-1 trace-1 χ of a unitary channel: a_m = ½Tr(E_m†U), χ = a a†.
pub fn ideal_chi(u: &Mat2) -> ProcessMatrix {
    let basis = pauli_basis();
    let a: Vec<C64> = basis
        .iter()
        .map(|e| (e.adjoint() * u).trace() * c(0.5, 0.0))
        .collect();
    let mut chi = Mat4::zeros();
    for m in 0..4 {
        for n in 0..4 {
            chi[(m, n)] = a[m] * a[n].conj();
        }
    }
    ProcessMatrix { chi }
}

/// 𝓕 = √(Tr[χ_exp χ_id]), the square-root form.
pub fn process_fidelity(chi_exp: &ProcessMatrix, chi_id: &ProcessMatrix) -> Result<f64, TomoError> {
    let tr = (chi_exp.chi * chi_id.chi).trace().re;
    if tr < -1e-9 {
        return Err(TomoError::NegativeTraceProduct(tr));
    }
    Ok(tr.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, max_abs_diff, pauli, state_fidelity, Level, PauliAxis};
    use approx::assert_abs_diff_eq;

    fn apply_unitary(u: &Mat2, input: TomoInput) -> QubitDensity {
        let ket = u * input.qubit_ket();
        QubitDensity::from_pure(&ket)
    }

    fn unitary_channel(u: &Mat2) -> ChannelOutputs {
        ChannelOutputs {
            rho_g: apply_unitary(u, TomoInput::G),
            rho_e: apply_unitary(u, TomoInput::E),
            rho_x: apply_unitary(u, TomoInput::Gx),
            rho_y: apply_unitary(u, TomoInput::Gy),
        }
    }

    fn sqrt_x() -> Mat2 {
        (Mat2::identity() + pauli(PauliAxis::X) * c(0.0, -1.0)) * c(FRAC_1_SQRT_2, 0.0)
    }

    #[test]
    fn exact_measurement_of_g() {
        let rho = QutritDensity::basis_state(Level::G);
        let m = simulate_measurement(&rho, 0, 0);
        assert_abs_diff_eq!(m.p_g, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.p_e, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.p_x, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.p_y, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn target_output_state_has_py_zero() {
        // (|g⟩ − i|e⟩)/√2 is orthogonal to |g⟩_y's conjugate pairing
        let ket = Ket3::new(c(0.0, -FRAC_1_SQRT_2), c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0));
        let rho = QutritDensity::from_pure(&ket);
        let m = simulate_measurement(&rho, 0, 0);
        assert_abs_diff_eq!(m.p_y, 0.0, epsilon = 1e-14);
        let s = stokes_from_record(&m);
        assert_abs_diff_eq!(s.s_y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.s_x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.s_z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shot_noise_scale() {
        let third = QutritDensity::new(
            crate::linalg::Mat3::from_diagonal(&Ket3::new(
                c(0.5, 0.0),
                c(0.5, 0.0),
                c(0.0, 0.0),
            )),
        )
        .unwrap();
        let m = simulate_measurement(&third, 20000, 7);
        let sigma = (0.25f64 / 20000.0).sqrt();
        assert!((m.p_g - 0.5).abs() < 5.0 * sigma, "p_g = {}", m.p_g);
    }

    #[test]
    fn stokes_formulas_verbatim() {
        let m = MeasurementRecord {
            p_g: 0.4,
            p_e: 0.4,
            p_x: 0.4,
            p_y: 0.5,
            shots: 0,
        };
        let s = stokes_from_record(&m);
        assert_abs_diff_eq!(s.s_0, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(s.s_x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.s_y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.s_z, 0.2, epsilon = 1e-15);

        let lc = stokes_from_record_with(&m, true);
        assert_abs_diff_eq!(lc.s_y, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(lc.s_z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn reconstruction_round_trip() {
        let ket = Ket3::new(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0));
        let rho3 = QutritDensity::from_pure(&ket);
        let m = simulate_measurement(&rho3, 0, 0);
        let rec = reconstruct_state(&m, false);
        let expect = QubitDensity::from_pure(&Ket2::new(ket[0], ket[1]));
        assert!(max_abs_diff(rec.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn projection_fixes_overlong_bloch_vector() {
        let m = MeasurementRecord {
            p_g: 1.01,
            p_e: -0.01,
            p_x: 0.5,
            p_y: 0.5,
            shots: 0,
        };
        let rec = reconstruct_state(&m, true);
        assert!(rec.min_eigenvalue() >= -1e-12);
        let g = QubitDensity::from_pure(&TomoInput::G.qubit_ket());
        assert!(state_fidelity(&rec, &g).unwrap() >= 0.99);
    }

    #[test]
    fn chi_of_identity() {
        let chi = process_tomography(&unitary_channel(&Mat2::identity())).unwrap();
        let mut expect = Mat4::zeros();
        expect[(0, 0)] = c(1.0, 0.0);
        assert!(approx_eq(&chi.chi, &expect, 1e-10));
    }

    #[test]
    fn chi_of_sqrt_x() {
        let chi = process_tomography(&unitary_channel(&sqrt_x())).unwrap();
        let expect = ideal_chi(&sqrt_x());
        assert!(max_abs_diff(&chi.chi, &expect.chi) < 1e-8);
        assert_abs_diff_eq!(chi.chi[(0, 0)].re, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(chi.chi[(1, 1)].re, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(chi.chi[(0, 1)].im, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(chi.chi[(1, 0)].im, -0.5, epsilon = 1e-10);
    }

    #[test]
    fn chi_of_depolarizing() {
        // full depolarizing: ε(ρ) = I/2·Tr(ρ) → χ = diag(1/4, 1/4, 1/4, 1/4)
        let half = QubitDensity::new(Mat2::identity() * c(0.5, 0.0)).unwrap();
        let out = ChannelOutputs {
            rho_g: half,
            rho_e: half,
            rho_x: half,
            rho_y: half,
        };
        let chi = process_tomography(&out).unwrap();
        let expect = Mat4::identity() * c(0.25, 0.0);
        assert!(approx_eq(&chi.chi, &expect, 1e-10));

        let f = process_fidelity(&chi, &ideal_chi(&Mat2::identity())).unwrap();
        assert_abs_diff_eq!(f, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn ideal_chi_examples() {
        let chi_i = ideal_chi(&Mat2::identity());
        assert_abs_diff_eq!(chi_i.chi[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(chi_i.trace(), 1.0, epsilon = 1e-14);

        let chi_z = ideal_chi(&pauli(PauliAxis::Z));
        assert_abs_diff_eq!(chi_z.chi[(3, 3)].re, 1.0, epsilon = 1e-14);

        let chi_sx = ideal_chi(&sqrt_x());
        assert_abs_diff_eq!(chi_sx.chi[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(chi_sx.chi[(1, 1)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(chi_sx.chi[(0, 1)].im, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn process_fidelity_identity_case() {
        let chi = ideal_chi(&sqrt_x());
        assert_abs_diff_eq!(process_fidelity(&chi, &chi).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn measurement_is_deterministic_per_seed() {
        let third = QutritDensity::new(crate::linalg::Mat3::identity() * c(1.0 / 3.0, 0.0)).unwrap();
        let a = simulate_measurement(&third, 20000, 42);
        let b = simulate_measurement(&third, 20000, 42);
        assert_eq!(a, b);
        let other = simulate_measurement(&third, 20000, 43);
        assert_ne!(a, other);
    }
}
