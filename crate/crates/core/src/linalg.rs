//! Complex matrix primitives, basis conventions, Bloch-vector algebra, and
//! fidelity metrics shared by the other modules.
//!
//! Basis order is fixed as (|e⟩, |g⟩, |a⟩) ↦ (0, 1, 2) for the three-level
//! system, with |e⟩ ≡ |0⟩ on the qubit. Under this ordering s_z = 1 − 2 P_g
//! reduces to P_e − P_g for a leakage-free state, consistent with
//! ρ = (I + s·σ)/2.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector3};
use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Mat2 = Matrix2<C64>;
pub type Mat3 = Matrix3<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Ket2 = Vector2<C64>;
pub type Ket3 = Vector3<C64>;

/// Default tolerance for Hermiticity checks.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Default tolerance for unit-trace checks.
pub const TOL_TRACE: f64 = 1e-9;
/// Default tolerance for positive-semidefiniteness checks.
pub const TOL_PSD: f64 = 1e-9;
/// Default tolerance for unitarity checks.
pub const TOL_UNITARY: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace {0} outside the allowed range")]
    BadTrace(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
}

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn all_finite<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Max entrywise deviation of `m` from its adjoint.
pub fn hermiticity_defect<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff<const N: usize>(
    a: &nalgebra::SMatrix<C64, N, N>,
    b: &nalgebra::SMatrix<C64, N, N>,
) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise equality within an explicit absolute tolerance.
pub fn approx_eq<const N: usize>(
    a: &nalgebra::SMatrix<C64, N, N>,
    b: &nalgebra::SMatrix<C64, N, N>,
    tol: f64,
) -> bool {
    max_abs_diff(a, b) <= tol
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> Vec<f64> {
    let dyn_m = nalgebra::DMatrix::from_fn(N, N, |i, j| m[(i, j)]);
    let sym = dyn_m.symmetric_eigen();
    let mut evs: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    evs.sort_by(|a, b| a.total_cmp(b));
    evs
}

pub fn min_eigenvalue<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    hermitian_eigenvalues(m)[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

/// Standard Pauli matrix in basis order (|e⟩, |g⟩), i.e. Z|e⟩ = +|e⟩.
pub fn pauli(axis: PauliAxis) -> Mat2 {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    match axis {
        PauliAxis::I => Mat2::identity(),
        PauliAxis::X => Mat2::new(o, l, l, o),
        PauliAxis::Y => Mat2::new(o, c(0.0, -1.0), c(0.0, 1.0), o),
        PauliAxis::Z => Mat2::new(l, o, o, c(-1.0, 0.0)),
    }
}

/// The operator basis {I, X, Y, Z} in the order used for χ matrices.
pub fn pauli_basis() -> [Mat2; 4] {
    [
        pauli(PauliAxis::I),
        pauli(PauliAxis::X),
        pauli(PauliAxis::Y),
        pauli(PauliAxis::Z),
    ]
}

/// Measured Bloch components plus the total qubit population s_0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochVector {
    pub s_x: f64,
    pub s_y: f64,
    pub s_z: f64,
    pub s_0: f64,
}

/// 2×2 Hermitian density matrix in basis order (|e⟩, |g⟩).
///
/// Trace below one is permitted so leakage-reduced reconstructions stay
/// representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity(Mat2);

impl QubitDensity {
    pub fn new(m: Mat2) -> Result<Self, LinalgError> {
        if !all_finite(&m) {
            return Err(LinalgError::NonFinite);
        }
        let defect = hermiticity_defect(&m);
        if defect > TOL_HERMITIAN {
            return Err(LinalgError::NotHermitian(defect));
        }
        let tr = m.trace().re;
        if !(-TOL_TRACE..=1.0 + TOL_TRACE).contains(&tr) {
            return Err(LinalgError::BadTrace(tr));
        }
        Ok(Self(m))
    }

    pub fn from_pure(ket: &Ket2) -> Self {
        Self(ket * ket.adjoint())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }

    /// Clip negative eigenvalues to zero, then rescale so the trace matches
    /// the pre-projection trace.
    pub fn project_physical(&self) -> Self {
        let sym = self.0.symmetric_eigen();
        let tr0 = self.trace();
        let mut clipped = sym.eigenvalues.map(|v| v.max(0.0));
        let tr1: f64 = clipped.iter().sum();
        if tr1 > 0.0 && tr0 > 0.0 {
            clipped *= tr0 / tr1;
        }
        let mut out = Mat2::zeros();
        for k in 0..2 {
            let v = sym.eigenvectors.column(k);
            out += (v * v.adjoint()) * c(clipped[k], 0.0);
        }
        Self((out + out.adjoint()) * c(0.5, 0.0))
    }
}

/// 3×3 Hermitian, PSD, unit-trace density matrix in basis (|e⟩, |g⟩, |a⟩).
#[derive(Debug, Clone, PartialEq)]
pub struct QutritDensity(Mat3);

/// The three levels of the Λ system, in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    E = 0,
    G = 1,
    A = 2,
}

impl QutritDensity {
    pub fn new(m: Mat3) -> Result<Self, LinalgError> {
        if !all_finite(&m) {
            return Err(LinalgError::NonFinite);
        }
        let defect = hermiticity_defect(&m);
        if defect > TOL_HERMITIAN {
            return Err(LinalgError::NotHermitian(defect));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(LinalgError::BadTrace(tr));
        }
        let min_ev = min_eigenvalue(&m);
        if min_ev < -TOL_PSD {
            return Err(LinalgError::NotPsd(min_ev));
        }
        Ok(Self(m))
    }

    pub fn from_pure(ket: &Ket3) -> Self {
        Self(ket * ket.adjoint())
    }

    /// For integrator output that has already passed the engine's own trace
    /// and positivity limits; skips the strict constructor tolerances.
    pub(crate) fn from_integration(m: Mat3) -> Self {
        Self(m)
    }

    pub fn basis_state(level: Level) -> Self {
        let mut ket = Ket3::zeros();
        ket[level as usize] = c(1.0, 0.0);
        Self::from_pure(&ket)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Diagonal populations (p_e, p_g, p_a).
    pub fn populations(&self) -> (f64, f64, f64) {
        (self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re)
    }

    pub fn leakage(&self) -> f64 {
        self.0[(2, 2)].re
    }
}

/// ρ = (I + s_x X + s_y Y + s_z Z)/2, with no positivity enforcement.
pub fn density_from_stokes(s: &BlochVector) -> QubitDensity {
    let m = (pauli(PauliAxis::I)
        + pauli(PauliAxis::X) * c(s.s_x, 0.0)
        + pauli(PauliAxis::Y) * c(s.s_y, 0.0)
        + pauli(PauliAxis::Z) * c(s.s_z, 0.0))
        * c(0.5, 0.0);
    QubitDensity(m)
}

/// Top-left 2×2 block (unnormalized) and the auxiliary-state population.
pub fn project_qubit(rho: &QutritDensity) -> (QubitDensity, f64) {
    let m = rho.matrix();
    let block = Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    (QubitDensity(block), m[(2, 2)].re)
}

/// Uhlmann fidelity F = Tr √(√ρ σ √ρ) via the 2×2 closed form
/// F = √(Tr(ρσ) + 2√(det ρ · det σ)).
pub fn state_fidelity(rho: &QubitDensity, sigma: &QubitDensity) -> Result<f64, LinalgError> {
    for m in [rho, sigma] {
        let min_ev = m.min_eigenvalue();
        if min_ev < -TOL_PSD {
            return Err(LinalgError::NotPsd(min_ev));
        }
    }
    let a = rho.matrix();
    let b = sigma.matrix();
    let tr = (a * b).trace().re;
    let det = (a.determinant().re).max(0.0) * (b.determinant().re).max(0.0);
    Ok((tr + 2.0 * det.sqrt()).max(0.0).sqrt())
}

/// 1 − |Tr(U†V)|/2, insensitive to a global phase.
pub fn unitary_infidelity_up_to_phase(u: &Mat2, v: &Mat2) -> Result<f64, LinalgError> {
    for m in [u, v] {
        let dev = max_abs_diff(&(m.adjoint() * m), &Mat2::identity());
        if dev > TOL_UNITARY {
            return Err(LinalgError::NotUnitary(dev));
        }
    }
    Ok(1.0 - (u.adjoint() * v).trace().norm() / 2.0)
}
