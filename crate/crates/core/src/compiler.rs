// SPDX-License-Identifier: Apache-2.0

//! Matchgate decompositions into elementary-gate circuits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{cnot, controlled, cz_theta, euler_xzx, hadamard, phase_distance, rx, rz, Unitary2, Unitary4};
use crate::json::MatrixJson;
use crate::linalg::{kron, on_qubit, Mat2, Mat4};
use crate::matchgate::Matchgate;
use crate::scalar::{cis, wrap_angle, Real};

/// Resimulation tolerance for decompositions (phase distance).
pub const ROUNDTRIP_TOL: f64 = 1e-9;

/// One gate of a two-qubit circuit. Qubit 0 is the top wire.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp<T> {
    Local1 { qubit: usize, u: Mat2<T> },
    Cnot { control: usize, target: usize },
    Cu { control: usize, target: usize, u: Mat2<T> },
    /// `diag(1, 1, 1, e^{iθ})`.
    CzTheta { theta: T },
}

impl<T: Real> GateOp<T> {
    fn validate(&self) -> Result<()> {
        let pair = |c: usize, t: usize| {
            if c > 1 || t > 1 || c == t {
                Err(Error::InvalidParameter(format!("invalid qubit pair ({c}, {t})")))
            } else {
                Ok(())
            }
        };
        match *self {
            GateOp::Local1 { qubit, .. } if qubit > 1 => {
                Err(Error::InvalidParameter(format!("invalid qubit {qubit}")))
            }
            GateOp::Cnot { control, target } | GateOp::Cu { control, target, .. } => pair(control, target),
            GateOp::CzTheta { theta } if !theta.is_finite() => Err(Error::NonFinite),
            _ => Ok(()),
        }
    }

    pub fn matrix(&self) -> Mat4<T> {
        match *self {
            GateOp::Local1 { qubit, u } => on_qubit(&u, qubit),
            GateOp::Cnot { control, target } => cnot(control, target),
            GateOp::Cu { control, target, u } => controlled(&u, control, target),
            GateOp::CzTheta { theta } => cz_theta(theta),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        !matches!(self, GateOp::Local1 { .. })
    }
}

/// Ordered gate list; the first op acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T> {
    pub ops: Vec<GateOp<T>>,
    pub global_phase: T,
}

impl<T: Real> Circuit<T> {
    pub fn new(ops: Vec<GateOp<T>>, global_phase: T) -> Self {
        Circuit { ops, global_phase }
    }
}

/// `e^{i·phase} · M_n ⋯ M_1` for ops `M_1, …, M_n`.
pub fn simulate_circuit<T: Real>(c: &Circuit<T>) -> Result<Unitary4<T>> {
    let mut u = Mat4::identity();
    for op in &c.ops {
        op.validate()?;
        u = op.matrix() * u;
    }
    Ok(u.scale(cis(c.global_phase)))
}

/// `[CNOT(0→1), LOCAL1(0, A), CU(1→0, U), CNOT(0→1)]` with `U = B·A⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralDecomposition<T> {
    pub circuit: Circuit<T>,
    pub u: Unitary2<T>,
}

/// Decomposes a matchgate via parity encoding: the first CNOT writes the
/// parity onto the bottom qubit, which then controls `U = B·A⁻¹`.
pub fn decompose_general<T: Real>(m: &Matchgate<T>) -> Result<GeneralDecomposition<T>> {
    if m.is_relaxed() {
        return Err(Error::RelaxedMatchgate);
    }
    let a = *m.a();
    let u = *m.b() * a.adjoint();
    let circuit = Circuit::new(
        vec![
            GateOp::Cnot { control: 0, target: 1 },
            GateOp::Local1 { qubit: 0, u: a },
            GateOp::Cu { control: 1, target: 0, u },
            GateOp::Cnot { control: 0, target: 1 },
        ],
        T::zero(),
    );
    check_roundtrip(&circuit, &m.to_unitary())?;
    Ok(GeneralDecomposition { circuit, u })
}

/// `G_AA = e^{i·phase} (post_top ⊗ post_bottom) · CZ_θ · (pre_top ⊗ pre_bottom)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricDecomposition<T> {
    /// Entangling angle, wrapped into `(−π, π]`.
    pub theta: T,
    pub pre_top: Unitary2<T>,
    pub pre_bottom: Unitary2<T>,
    pub post_top: Unitary2<T>,
    pub post_bottom: Unitary2<T>,
    pub phase: T,
}

impl<T: Real> SymmetricDecomposition<T> {
    pub fn to_unitary(&self) -> Unitary4<T> {
        (kron(&self.post_top, &self.post_bottom) * cz_theta(self.theta) * kron(&self.pre_top, &self.pre_bottom))
            .scale(cis(self.phase))
    }

    /// `[pre_top, pre_bottom, CZ_θ, post_top, post_bottom]`.
    pub fn circuit(&self) -> Circuit<T> {
        Circuit::new(
            vec![
                GateOp::Local1 { qubit: 0, u: self.pre_top },
                GateOp::Local1 { qubit: 1, u: self.pre_bottom },
                GateOp::CzTheta { theta: self.theta },
                GateOp::Local1 { qubit: 0, u: self.post_top },
                GateOp::Local1 { qubit: 1, u: self.post_bottom },
            ],
            self.phase,
        )
    }
}

/// Decomposes a symmetric matchgate `G_AA` with a single `CZ_θ`.
///
/// With `H·A·H = e^{iφ} X_α Z_{−θ/2} X_β`, conjugating by `H⊗H` maps `G_AA`
/// to `e^{iφ} (X_α ⊗ I) · exp(iθ/4 · Z⊗Z) · (X_β ⊗ I)`, and
/// `exp(iθ/4 · Z⊗Z) = e^{−iθ/4} (Z_{−θ/2} ⊗ Z_{−θ/2}) CZ_θ`.
pub fn decompose_symmetric<T: Real>(m: &Matchgate<T>) -> Result<SymmetricDecomposition<T>> {
    if m.is_relaxed() {
        return Err(Error::RelaxedMatchgate);
    }
    if !m.is_symmetric() {
        return Err(Error::NotSymmetric {
            distance: phase_distance(m.a(), m.b()).as_f64(),
        });
    }
    let h = hadamard::<T>();
    let a = *m.a();
    let e = euler_xzx(&(h * a * h))?;
    let zc = rz(-e.theta / T::of(2.0));
    let mut d = SymmetricDecomposition {
        theta: wrap_angle(e.theta),
        pre_top: rx(e.beta) * h,
        pre_bottom: h,
        post_top: h * rx(e.alpha) * zc,
        post_bottom: h * zc,
        phase: wrap_angle(e.phase - e.theta / T::of(4.0)),
    };
    if d.theta.abs() <= T::epsilon() * T::of(16.0) {
        // CZ_0 = I: fold the pre-rotations into the post slots.
        d.post_top = d.post_top * d.pre_top;
        d.post_bottom = d.post_bottom * d.pre_bottom;
        d.pre_top = Mat2::identity();
        d.pre_bottom = Mat2::identity();
        d.theta = T::zero();
    }
    let err = phase_distance(&d.to_unitary(), &m.to_unitary());
    if err > T::of(ROUNDTRIP_TOL).max(T::equality_tol()) {
        return Err(Error::Internal(format!(
            "symmetric decomposition residual {:.3e}",
            err.as_f64()
        )));
    }
    Ok(d)
}

fn check_roundtrip<T: Real>(c: &Circuit<T>, target: &Unitary4<T>) -> Result<()> {
    let err = phase_distance(&simulate_circuit(c)?, target);
    if err > T::of(ROUNDTRIP_TOL).max(T::equality_tol()) {
        return Err(Error::Internal(format!(
            "decomposition residual {:.3e}",
            err.as_f64()
        )));
    }
    Ok(())
}

/// Serialized gate: `{"kind", "qubits", "matrix"?, "theta"?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOpJson {
    pub kind: String,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

/// Serialized circuit: `{"global_phase", "ops"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub global_phase: f64,
    pub ops: Vec<GateOpJson>,
}

impl CircuitJson {
    pub fn from_circuit<T: Real>(c: &Circuit<T>) -> Self {
        let ops = c
            .ops
            .iter()
            .map(|op| match *op {
                GateOp::Local1 { qubit, u } => GateOpJson {
                    kind: "LOCAL1".into(),
                    qubits: vec![qubit],
                    matrix: Some(MatrixJson::from_mat(&u)),
                    theta: None,
                },
                GateOp::Cnot { control, target } => GateOpJson {
                    kind: "CNOT".into(),
                    qubits: vec![control, target],
                    matrix: None,
                    theta: None,
                },
                GateOp::Cu { control, target, u } => GateOpJson {
                    kind: "CU".into(),
                    qubits: vec![control, target],
                    matrix: Some(MatrixJson::from_mat(&u)),
                    theta: None,
                },
                GateOp::CzTheta { theta } => GateOpJson {
                    kind: "CZ_THETA".into(),
                    qubits: vec![0, 1],
                    matrix: None,
                    theta: Some(theta.as_f64()),
                },
            })
            .collect();
        CircuitJson {
            global_phase: c.global_phase.as_f64(),
            ops,
        }
    }

    pub fn to_circuit<T: Real>(&self) -> Result<Circuit<T>> {
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let matrix = || -> Result<Mat2<T>> {
                op.matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter(format!("{} op needs a matrix", op.kind)))?
                    .to_mat()
            };
            let two = || -> Result<(usize, usize)> {
                match op.qubits.as_slice() {
                    [c, t] => Ok((*c, *t)),
                    _ => Err(Error::InvalidParameter(format!("{} op needs two qubits", op.kind))),
                }
            };
            let g = match op.kind.as_str() {
                "LOCAL1" => match op.qubits.as_slice() {
                    [q] => GateOp::Local1 { qubit: *q, u: matrix()? },
                    _ => return Err(Error::InvalidParameter("LOCAL1 op needs one qubit".into())),
                },
                "CNOT" => {
                    let (control, target) = two()?;
                    GateOp::Cnot { control, target }
                }
                "CU" => {
                    let (control, target) = two()?;
                    GateOp::Cu { control, target, u: matrix()? }
                }
                "CZ_THETA" => GateOp::CzTheta {
                    theta: T::of(
                        op.theta
                            .ok_or_else(|| Error::InvalidParameter("CZ_THETA op needs theta".into()))?,
                    ),
                },
                other => return Err(Error::InvalidParameter(format!("unknown op kind `{other}`"))),
            };
            g.validate()?;
            ops.push(g);
        }
        Ok(Circuit::new(ops, T::of(self.global_phase)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cz, pauli_z};
    use crate::matchgate::named_gate4;
    use std::f64::consts::PI;

    #[test]
    fn g_hh_symmetric_is_cz() {
        let h = hadamard::<f64>();
        let d = decompose_symmetric(&Matchgate::new(h, h).unwrap()).unwrap();
        assert!((d.theta - PI).abs() < 1e-12);
        assert!((cz_theta(d.theta) - cz::<f64>()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn identity_has_identity_locals() {
        let i = Mat2::<f64>::identity();
        let d = decompose_symmetric(&Matchgate::new(i, i).unwrap()).unwrap();
        assert_eq!(d.theta, 0.0);
        for l in [d.pre_top, d.pre_bottom, d.post_top, d.post_bottom] {
            assert!(phase_distance(&l, &i) < 1e-12);
        }
    }

    #[test]
    fn general_with_minus_identity() {
        let i = Mat2::<f64>::identity();
        let m = Matchgate::new(i, -i).unwrap();
        let d = decompose_general(&m).unwrap();
        assert!((d.u + i).frobenius_norm() < 1e-15);
        let expect = Mat4::from_diag([1.0, -1.0, -1.0, 1.0].map(|x| num_complex::Complex::new(x, 0.0)));
        assert!(phase_distance(&simulate_circuit(&d.circuit).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn g_hh_general_is_controlled_identity() {
        let h = hadamard::<f64>();
        let d = decompose_general(&Matchgate::new(h, h).unwrap()).unwrap();
        assert!((d.u - Mat2::identity()).frobenius_norm() < 1e-15);
        let g = named_gate4::<f64>("G_HH").unwrap();
        assert!(phase_distance(&simulate_circuit(&d.circuit).unwrap(), &g) < 1e-12);
    }

    #[test]
    fn simulate_trivial_circuits() {
        let empty = Circuit::<f64>::new(vec![], 0.0);
        assert_eq!(simulate_circuit(&empty).unwrap(), Mat4::identity());
        let c = Circuit::<f64>::new(vec![GateOp::Cnot { control: 0, target: 1 }; 2], 0.0);
        assert_eq!(simulate_circuit(&c).unwrap(), Mat4::identity());
        let bad = Circuit::<f64>::new(vec![GateOp::Cnot { control: 1, target: 1 }], 0.0);
        assert!(simulate_circuit(&bad).is_err());
        let z = Circuit::<f64>::new(vec![GateOp::Local1 { qubit: 1, u: pauli_z() }], 0.0);
        assert_eq!(simulate_circuit(&z).unwrap(), kron(&Mat2::identity(), &pauli_z()));
    }

    #[test]
    fn circuit_json_roundtrip() {
        let h = hadamard::<f64>();
        let d = decompose_symmetric(&Matchgate::new(h, h).unwrap()).unwrap();
        let j = CircuitJson::from_circuit(&d.circuit());
        let s = serde_json::to_string(&j).unwrap();
        let back: CircuitJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_circuit::<f64>().unwrap(), d.circuit());
    }
}
