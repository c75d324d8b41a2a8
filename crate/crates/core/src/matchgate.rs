// SPDX-License-Identifier: Apache-2.0

//! Matchgates: two-qubit unitaries acting as `A` on the even-parity subspace
//! span{|00⟩, |11⟩} and as `B` on the odd-parity subspace span{|01⟩, |10⟩},
//! with `det A = det B`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{
    cnot, cz, hadamard, identity2, pauli_x, pauli_y, pauli_z, phase_distance, swap, t_gate,
    validate_unitary, Unitary2, Unitary4,
};
use crate::json::MatrixJson;
use crate::linalg::{Mat2, Mat4};
use crate::scalar::{cis, Real};

/// Basis indices of the even (`A`) and odd (`B`) blocks.
const EVEN: [usize; 2] = [0, 3];
const ODD: [usize; 2] = [1, 2];

/// Entries that are zero in every matchgate.
pub const FORBIDDEN: [(usize, usize); 8] = [
    (0, 1),
    (0, 2),
    (1, 0),
    (1, 3),
    (2, 0),
    (2, 3),
    (3, 1),
    (3, 2),
];

/// Tolerance for the zero pattern when recognizing a matchgate.
pub const PATTERN_TOL: f64 = 1e-8;

/// A matchgate given by its parity blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matchgate<T> {
    a: Mat2<T>,
    b: Mat2<T>,
    relaxed: bool,
}

impl<T: Real> Matchgate<T> {
    /// Validated matchgate; fails unless both blocks are unitary and
    /// `|det a − det b|` is within the equality tolerance.
    pub fn new(a: Unitary2<T>, b: Unitary2<T>) -> Result<Self> {
        validate_unitary(&a)?;
        validate_unitary(&b)?;
        let (da, db) = (a.det(), b.det());
        if (da - db).norm() > T::equality_tol() {
            return Err(det_error(da, db));
        }
        Ok(Matchgate { a, b, relaxed: false })
    }

    /// Parity-preserving gate without the determinant constraint (e.g. SWAP).
    pub fn new_relaxed(a: Unitary2<T>, b: Unitary2<T>) -> Result<Self> {
        validate_unitary(&a)?;
        validate_unitary(&b)?;
        Ok(Matchgate { a, b, relaxed: true })
    }

    pub fn a(&self) -> &Mat2<T> {
        &self.a
    }

    pub fn b(&self) -> &Mat2<T> {
        &self.b
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// True when the blocks agree up to a global phase.
    pub fn is_symmetric(&self) -> bool {
        phase_distance(&self.a, &self.b) <= T::equality_tol()
    }

    /// The 4×4 unitary with `a` on {|00⟩, |11⟩} and `b` on {|01⟩, |10⟩}.
    pub fn to_unitary(&self) -> Unitary4<T> {
        let mut m = Mat4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.0[EVEN[i]][EVEN[j]] = self.a.0[i][j];
                m.0[ODD[i]][ODD[j]] = self.b.0[i][j];
            }
        }
        m
    }
}

fn det_error<T: Real>(da: Complex<T>, db: Complex<T>) -> Error {
    Error::DeterminantMismatch {
        det_a_re: da.re.as_f64(),
        det_a_im: da.im.as_f64(),
        det_b_re: db.re.as_f64(),
        det_b_im: db.im.as_f64(),
    }
}

/// Builds the 4×4 unitary of a matchgate.
pub fn compose_matchgate<T: Real>(m: &Matchgate<T>) -> Unitary4<T> {
    m.to_unitary()
}

/// Why [`recognize_matchgate`] rejected a matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Rejection<T> {
    /// A forbidden entry is nonzero.
    Pattern { row: usize, col: usize, magnitude: f64 },
    /// The zero pattern holds but `det a ≠ det b`; the extracted relaxed
    /// matchgate is included.
    Determinant {
        extracted: Matchgate<T>,
        det_a: Complex<T>,
        det_b: Complex<T>,
    },
    /// The input is not a unitary matrix.
    Invalid(String),
}

impl<T: Real> From<Rejection<T>> for Error {
    fn from(r: Rejection<T>) -> Self {
        match r {
            Rejection::Pattern { row, col, magnitude } => Error::PatternViolation { row, col, magnitude },
            Rejection::Determinant { det_a, det_b, .. } => det_error(det_a, det_b),
            Rejection::Invalid(msg) => Error::InvalidParameter(msg),
        }
    }
}

/// Extracts `(a, b)` from a 4×4 unitary.
///
/// The joint phase freedom `(a, b) → (e^{iφ}a, e^{iφ}b)` is fixed by making
/// `a₁₁` real and non-negative (or `a₂₁` when `a₁₁ = 0`).
pub fn recognize_matchgate<T: Real>(u: &Unitary4<T>) -> Result<Matchgate<T>, Rejection<T>> {
    validate_unitary(u).map_err(|e| Rejection::Invalid(e.to_string()))?;
    let mut worst: Option<(usize, usize, T)> = None;
    for &(r, c) in FORBIDDEN.iter() {
        let mag = u.0[r][c].norm();
        if mag > T::of(PATTERN_TOL) && worst.is_none_or(|(_, _, w)| mag > w) {
            worst = Some((r, c, mag));
        }
    }
    if let Some((row, col, mag)) = worst {
        return Err(Rejection::Pattern {
            row,
            col,
            magnitude: mag.as_f64(),
        });
    }
    let mut a = Mat2::zeros();
    let mut b = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            a.0[i][j] = u.0[EVEN[i]][EVEN[j]];
            b.0[i][j] = u.0[ODD[i]][ODD[j]];
        }
    }
    let pivot = if a.0[0][0].norm() > T::of(PATTERN_TOL) {
        a.0[0][0]
    } else {
        a.0[1][0]
    };
    let fix = if pivot.norm() > T::zero() {
        cis(-pivot.arg())
    } else {
        Complex::new(T::one(), T::zero())
    };
    let a = a.scale(fix);
    let b = b.scale(fix);
    let (da, db) = (a.det(), b.det());
    if (da - db).norm() > T::equality_tol() {
        return Err(Rejection::Determinant {
            extracted: Matchgate { a, b, relaxed: true },
            det_a: da,
            det_b: db,
        });
    }
    Ok(Matchgate { a, b, relaxed: false })
}

/// Action of a symmetric matchgate on the dual-rail logical qubit
/// |0⟩_L = |00⟩, |1⟩_L = |11⟩.
pub fn logical_action<T: Real>(g: &Matchgate<T>) -> Result<Unitary2<T>> {
    if !g.is_symmetric() {
        return Err(Error::NotSymmetric {
            distance: phase_distance(&g.a, &g.b).as_f64(),
        });
    }
    let u = g.to_unitary();
    let mut out = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out.0[i][j] = u.0[EVEN[i]][EVEN[j]];
        }
    }
    Ok(out)
}

/// A qubit encoded in the even-parity subspace of two physical qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogicalQubit {
    amplitudes: [Complex<f64>; 2],
}

impl LogicalQubit {
    pub fn new(amplitudes: [Complex<f64>; 2]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("logical qubit norm² {norm} ≠ 1")));
        }
        Ok(LogicalQubit { amplitudes })
    }

    pub fn amplitudes(&self) -> [Complex<f64>; 2] {
        self.amplitudes
    }

    /// Physical two-qubit state `α|00⟩ + β|11⟩`.
    pub fn encode(&self) -> [Complex<f64>; 4] {
        let mut v = [Complex::zero(); 4];
        v[0] = self.amplitudes[0];
        v[3] = self.amplitudes[1];
        v
    }

    /// Inverse of [`encode`](Self::encode); fails if the state leaves the
    /// even-parity subspace.
    pub fn decode(state: &[Complex<f64>; 4]) -> Result<Self> {
        let leak = state[1].norm_sqr() + state[2].norm_sqr();
        if leak > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "state has odd-parity weight {leak:.3e}"
            )));
        }
        LogicalQubit::new([state[0], state[3]])
    }
}

/// A gate from the named-gate table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NamedGate<T> {
    One(Unitary2<T>),
    Two(Unitary4<T>),
}

/// Names accepted by [`named_gate`].
pub const GATE_NAMES: [&str; 14] = [
    "I", "X", "Y", "Z", "H", "T", "CNOT", "CZ", "SWAP", "G_HH", "G_XX", "G_TT", "G_ZX", "G_IX",
];

/// Looks up a named gate (case-insensitive). `CNOT` has control on qubit 0;
/// `G_IX` is the relaxed matchgate with `a = I`, `b = X`, i.e. SWAP.
pub fn named_gate<T: Real>(name: &str) -> Result<NamedGate<T>> {
    let mg = |a: Mat2<T>, b: Mat2<T>| -> Result<NamedGate<T>> {
        Ok(NamedGate::Two(Matchgate::new(a, b)?.to_unitary()))
    };
    match name.to_ascii_uppercase().as_str() {
        "I" => Ok(NamedGate::One(identity2())),
        "X" => Ok(NamedGate::One(pauli_x())),
        "Y" => Ok(NamedGate::One(pauli_y())),
        "Z" => Ok(NamedGate::One(pauli_z())),
        "H" => Ok(NamedGate::One(hadamard())),
        "T" => Ok(NamedGate::One(t_gate())),
        "CNOT" => Ok(NamedGate::Two(cnot(0, 1))),
        "CZ" => Ok(NamedGate::Two(cz())),
        "SWAP" => Ok(NamedGate::Two(swap())),
        "G_HH" => mg(hadamard(), hadamard()),
        "G_XX" => mg(pauli_x(), pauli_x()),
        "G_TT" => mg(t_gate(), t_gate()),
        "G_ZX" => mg(pauli_z(), pauli_x()),
        "G_IX" => Ok(NamedGate::Two(
            Matchgate::new_relaxed(identity2(), pauli_x())?.to_unitary(),
        )),
        _ => Err(Error::UnknownGate(name.to_string())),
    }
}

/// Looks up a named two-qubit gate.
pub fn named_gate4<T: Real>(name: &str) -> Result<Unitary4<T>> {
    match named_gate(name)? {
        NamedGate::Two(u) => Ok(u),
        NamedGate::One(_) => Err(Error::InvalidParameter(format!(
            "`{name}` is a single-qubit gate"
        ))),
    }
}

/// `G_HH · SWAP · G_XX · G_HH` (matrix product in the written order), checked
/// against `CZ = diag(1, 1, 1, −1)`.
pub fn cz_from_matchgates<T: Real>() -> Result<Unitary4<T>> {
    let g_hh = named_gate4::<T>("G_HH")?;
    let g_xx = named_gate4::<T>("G_XX")?;
    let product = g_hh * swap() * g_xx * g_hh;
    let tol = T::of(1e-12).max(T::epsilon() * T::of(64.0));
    let err = (product - cz()).frobenius_norm();
    if err > tol {
        return Err(Error::Internal(format!(
            "G_HH·SWAP·G_XX·G_HH differs from CZ by {:.3e}",
            err.as_f64()
        )));
    }
    Ok(product)
}

/// Serialized form `{"a": <matrix>, "b": <matrix>, "relaxed": bool}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatchgateJson {
    pub a: MatrixJson,
    pub b: MatrixJson,
    #[serde(default)]
    pub relaxed: bool,
}

impl MatchgateJson {
    pub fn from_matchgate<T: Real>(m: &Matchgate<T>) -> Self {
        MatchgateJson {
            a: MatrixJson::from_mat(&m.a),
            b: MatrixJson::from_mat(&m.b),
            relaxed: m.relaxed,
        }
    }

    pub fn to_matchgate<T: Real>(&self) -> Result<Matchgate<T>> {
        let a = self.a.to_mat()?;
        let b = self.b.to_mat()?;
        if self.relaxed {
            Matchgate::new_relaxed(a, b)
        } else {
            Matchgate::new(a, b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;

    #[test]
    fn g_hh_matrix() {
        let g = named_gate4::<f64>("G_HH").unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = Mat4::<f64>::from_f64([
            [(s, 0.0), (0.0, 0.0), (0.0, 0.0), (s, 0.0)],
            [(0.0, 0.0), (s, 0.0), (s, 0.0), (0.0, 0.0)],
            [(0.0, 0.0), (s, 0.0), (-s, 0.0), (0.0, 0.0)],
            [(s, 0.0), (0.0, 0.0), (0.0, 0.0), (-s, 0.0)],
        ]);
        assert!((g - expect).frobenius_norm() < 1e-15);
    }

    #[test]
    fn named_table() {
        let g_tt = named_gate4::<f64>("G_TT").unwrap();
        assert!((g_tt - kron(&t_gate(), &identity2())).frobenius_norm() < 1e-15);
        let g_ix = named_gate4::<f64>("g_ix").unwrap();
        assert_eq!(g_ix, swap());
        assert!(matches!(named_gate::<f64>("FOO"), Err(Error::UnknownGate(_))));
    }

    #[test]
    fn swap_needs_relaxed_flag() {
        let err = Matchgate::new(identity2::<f64>(), pauli_x()).unwrap_err();
        assert!(matches!(err, Error::DeterminantMismatch { .. }));
        match recognize_matchgate(&swap::<f64>()) {
            Err(Rejection::Determinant { extracted, .. }) => {
                assert_eq!(*extracted.a(), identity2());
                assert_eq!(*extracted.b(), pauli_x());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cnot_violates_pattern() {
        assert!(matches!(
            recognize_matchgate(&cnot::<f64>(0, 1)),
            Err(Rejection::Pattern { .. })
        ));
    }

    #[test]
    fn logical_qubit_roundtrip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let q = LogicalQubit::new([Complex::new(s, 0.0), Complex::new(0.0, s)]).unwrap();
        assert_eq!(LogicalQubit::decode(&q.encode()).unwrap(), q);
        assert!(LogicalQubit::new([Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]).is_err());
    }
}
