// SPDX-License-Identifier: Apache-2.0

//! Single- and two-qubit gate algebra.
//!
//! Rotation convention: `X_γ = exp(−iγX/2)`, `Z_γ = exp(−iγZ/2)`.
//! Qubit 0 is the top wire and the most significant bit of the basis index.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, Mat2, Mat4};
use crate::scalar::{c, cis, wrap_angle, Real};

/// A 2×2 matrix expected to be unitary.
pub type Unitary2<T> = Mat2<T>;
/// A 4×4 matrix expected to be unitary.
pub type Unitary4<T> = Mat4<T>;

/// Checks finiteness and `‖U†U − I‖_F ≤` the scalar's unitarity tolerance.
pub fn validate_unitary<T: Real, const N: usize>(u: &CMat<T, N>) -> Result<()> {
    if !u.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = u.unitarity_deviation();
    if dev > T::unitarity_tol() {
        return Err(Error::NotUnitary { deviation: dev.as_f64() });
    }
    Ok(())
}

pub fn identity2<T: Real>() -> Mat2<T> {
    Mat2::identity()
}

pub fn pauli_x<T: Real>() -> Mat2<T> {
    Mat2::from_f64([[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]])
}

pub fn pauli_y<T: Real>() -> Mat2<T> {
    Mat2::from_f64([[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]])
}

pub fn pauli_z<T: Real>() -> Mat2<T> {
    Mat2::from_f64([[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]])
}

pub fn hadamard<T: Real>() -> Mat2<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::from_f64([[(s, 0.0), (s, 0.0)], [(s, 0.0), (-s, 0.0)]])
}

/// `T = diag(1, e^{iπ/4})`.
pub fn t_gate<T: Real>() -> Mat2<T> {
    Mat2::from_diag([Complex::one(), cis(T::FRAC_PI_4())])
}

/// The four single-qubit Paulis in the order `I, X, Y, Z`.
pub fn paulis<T: Real>() -> [Mat2<T>; 4] {
    [identity2(), pauli_x(), pauli_y(), pauli_z()]
}

/// `X_γ = exp(−iγX/2)`.
pub fn rx<T: Real>(gamma: T) -> Mat2<T> {
    let h = gamma / T::of(2.0);
    let (s, co) = h.sin_cos();
    let mut m = Mat2::zeros();
    m.0[0][0] = Complex::new(co, T::zero());
    m.0[1][1] = Complex::new(co, T::zero());
    m.0[0][1] = Complex::new(T::zero(), -s);
    m.0[1][0] = Complex::new(T::zero(), -s);
    m
}

/// `Z_γ = exp(−iγZ/2)`.
pub fn rz<T: Real>(gamma: T) -> Mat2<T> {
    let h = gamma / T::of(2.0);
    Mat2::from_diag([cis(-h), cis(h)])
}

/// Kronecker product of two validated unitaries.
pub fn tensor<T: Real>(a: &Unitary2<T>, b: &Unitary2<T>) -> Result<Unitary4<T>> {
    validate_unitary(a)?;
    validate_unitary(b)?;
    Ok(kron(a, b))
}

/// CNOT with the given control and target qubits.
pub fn cnot<T: Real>(control: usize, target: usize) -> Mat4<T> {
    assert!(control < 2 && target < 2 && control != target);
    let mut m = Mat4::zeros();
    for s in 0..4usize {
        let cbit = (s >> (1 - control)) & 1;
        let out = if cbit == 1 { s ^ (1 << (1 - target)) } else { s };
        m.0[out][s] = Complex::one();
    }
    m
}

/// Controlled-`u` with the given control and target qubits.
pub fn controlled<T: Real>(u: &Mat2<T>, control: usize, target: usize) -> Mat4<T> {
    assert!(control < 2 && target < 2 && control != target);
    let mut m = Mat4::zeros();
    for s in 0..4usize {
        let cbit = (s >> (1 - control)) & 1;
        if cbit == 0 {
            m.0[s][s] = Complex::one();
            continue;
        }
        let tbit = (s >> (1 - target)) & 1;
        for out_t in 0..2usize {
            let out = (s & !(1 << (1 - target))) | (out_t << (1 - target));
            m.0[out][s] = u.0[out_t][tbit];
        }
    }
    m
}

pub fn cz<T: Real>() -> Mat4<T> {
    cz_theta(T::PI())
}

/// `CZ_θ = diag(1, 1, 1, e^{iθ})`.
pub fn cz_theta<T: Real>(theta: T) -> Mat4<T> {
    let mut m = Mat4::identity();
    m.0[3][3] = cis(theta);
    if theta == T::PI() {
        m.0[3][3] = c(-1.0, 0.0);
    }
    m
}

pub fn swap<T: Real>() -> Mat4<T> {
    let mut m = Mat4::zeros();
    m.0[0][0] = Complex::one();
    m.0[1][2] = Complex::one();
    m.0[2][1] = Complex::one();
    m.0[3][3] = Complex::one();
    m
}

/// `min_φ ‖u − e^{iφ} v‖_F`.
///
/// Evaluated at the optimal phase `φ = arg Tr(v†u)` rather than through the
/// closed form `sqrt(‖u‖² + ‖v‖² − 2|Tr(u†v)|)`, which loses half the digits
/// near zero.
pub fn phase_distance<T: Real, const N: usize>(u: &CMat<T, N>, v: &CMat<T, N>) -> T {
    let phi = relative_phase(u, v);
    (*u - v.scale(cis(phi))).frobenius_norm()
}

/// Global phase `φ` minimizing `‖u − e^{iφ} v‖_F`.
pub fn relative_phase<T: Real, const N: usize>(u: &CMat<T, N>, v: &CMat<T, N>) -> T {
    let tr = v.adjoint().trace_mul(u);
    if tr.norm() == T::zero() {
        T::zero()
    } else {
        tr.arg()
    }
}

/// Euler form `u = e^{i·phase} · X_α · Z_{−θ/2} · X_β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerXZX<T> {
    pub alpha: T,
    pub theta: T,
    pub beta: T,
    pub phase: T,
}

impl<T: Real> EulerXZX<T> {
    pub fn to_matrix(&self) -> Mat2<T> {
        (rx(self.alpha) * rz(-self.theta / T::of(2.0)) * rx(self.beta)).scale(cis(self.phase))
    }
}

/// Decomposes `u` as `e^{i·phase} X_α Z_{−θ/2} X_β`.
///
/// Branch: `θ ∈ [0, 2π]` (so `θ ∈ [0, π]` whenever such a solution exists),
/// `α, β, phase ∈ (−π, π]`, and `α = 0` when the angles are not unique.
pub fn euler_xzx<T: Real>(u: &Unitary2<T>) -> Result<EulerXZX<T>> {
    validate_unitary(u)?;
    let h = hadamard::<T>();
    // H X_γ H = Z_γ, so H u H = e^{iφ} Z_a X_b Z_c gives u = e^{iφ} X_a Z_b X_c.
    let v = h * *u * h;
    let phi0 = v.det().arg() / T::of(2.0);
    let w = v.scale(cis(-phi0));
    let (w00, w10) = (w.0[0][0], w.0[1][0]);
    let b = T::of(2.0) * w10.norm().atan2(w00.norm());
    let tiny = T::epsilon().sqrt() * T::of(1e-2);
    // X_π Z_b X_{−π} = Z_{−b}: (a, b, c) → α = a − π, θ = 2b, β = c + π.
    let (a, cc) = if w10.norm() < tiny {
        let a = T::PI();
        (a, -T::of(2.0) * w00.arg() - a)
    } else if w00.norm() < tiny {
        let a = T::PI();
        (a, a - T::of(2.0) * w10.arg() - T::PI())
    } else {
        let sum = -T::of(2.0) * w00.arg();
        let diff = T::of(2.0) * w10.arg() + T::PI();
        ((sum + diff) / T::of(2.0), (sum - diff) / T::of(2.0))
    };
    let alpha = wrap_angle(a - T::PI());
    let beta = wrap_angle(cc + T::PI());
    let theta = T::of(2.0) * b;
    let mut e = EulerXZX {
        alpha,
        theta,
        beta,
        phase: T::zero(),
    };
    e.phase = wrap_angle(relative_phase(u, &e.to_matrix()));
    Ok(e)
}

/// Index `m = 4i + j` of `σ_i ⊗ σ_j` in the two-qubit Pauli basis.
pub const PAULI_LABELS: [&str; 16] = [
    "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ",
];

/// The 16 two-qubit Paulis `P_{4i+j} = σ_i ⊗ σ_j`.
pub fn pauli_basis<T: Real>() -> [Mat4<T>; 16] {
    let p = paulis::<T>();
    let mut out = [Mat4::zeros(); 16];
    for i in 0..4 {
        for j in 0..4 {
            out[4 * i + j] = kron(&p[i], &p[j]);
        }
    }
    out
}

/// Pauli-basis coefficients `t_m = Tr(P_m† u)`.
pub fn pauli_coefficients<T: Real>(u: &Mat4<T>) -> [Complex<T>; 16] {
    let basis = pauli_basis::<T>();
    let mut t = [Complex::zero(); 16];
    for (m, p) in basis.iter().enumerate() {
        t[m] = p.adjoint().trace_mul(u);
    }
    t
}
