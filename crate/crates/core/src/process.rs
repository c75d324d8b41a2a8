// SPDX-License-Identifier: Apache-2.0

//! Two-qubit processes as 16×16 chi matrices in the Pauli basis:
//! `E(ρ) = trace_norm · Σ_mn χ_mn P_m ρ P_n†` with `Tr χ = 1`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{pauli_basis, pauli_coefficients, validate_unitary, Unitary4};
use crate::json::MatrixJson;
use crate::linalg::{Mat16, Mat4};

/// Minimum eigenvalue accepted for a physical chi matrix.
pub const PSD_TOL: f64 = 1e-8;

/// Normalized chi matrix plus the trace it had before normalization.
///
/// For a trace-decreasing (post-selected) map, `trace_norm` is the success
/// probability averaged over inputs, `Tr E(I/4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProcessMatrix {
    chi: Mat16<f64>,
    trace_norm: f64,
}

impl ProcessMatrix {
    /// Normalizes a raw (unnormalized) chi matrix.
    pub fn from_raw(chi_raw: Mat16<f64>) -> Result<Self> {
        if !chi_raw.is_finite() {
            return Err(Error::NonFinite);
        }
        let tr = chi_raw.trace().re;
        if tr <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        let mut chi = chi_raw.scale_re(1.0 / tr);
        hermitize(&mut chi);
        Ok(ProcessMatrix { chi, trace_norm: tr })
    }

    /// Parses externally supplied data, clipping eigenvalues below `−1e-8`
    /// and renormalizing.
    pub fn from_external(chi: Mat16<f64>, trace_norm: f64) -> Result<Self> {
        if !chi.is_finite() || !trace_norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if trace_norm <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        let dev = chi.hermiticity_deviation();
        if dev > 1e-8 {
            return Err(Error::InvalidParameter(format!("chi is not Hermitian (‖χ − χ†‖ = {dev:.3e})")));
        }
        let eig = chi.hermitian_eigen();
        let repaired = if eig.values[0] < -PSD_TOL {
            eig.reassemble(|x| x.max(0.0))
        } else {
            chi
        };
        let mut p = ProcessMatrix::from_raw(repaired)?;
        p.trace_norm = trace_norm;
        Ok(p)
    }

    pub fn chi(&self) -> &Mat16<f64> {
        &self.chi
    }

    pub fn trace_norm(&self) -> f64 {
        self.trace_norm
    }

    /// `trace_norm · χ`.
    pub fn chi_raw(&self) -> Mat16<f64> {
        self.chi.scale_re(self.trace_norm)
    }

    /// Kraus operators `K_k = √λ_k Σ_m v_k[m] P_m` of `trace_norm · χ`,
    /// dropping eigenvalues below `1e-14`.
    pub fn kraus(&self) -> Vec<Mat4<f64>> {
        let basis = pauli_basis::<f64>();
        let eig = self.chi_raw().hermitian_eigen();
        let mut out = Vec::new();
        for k in (0..16).rev() {
            let lam = eig.values[k];
            if lam <= 1e-14 {
                continue;
            }
            let w = lam.sqrt();
            let mut kr = Mat4::zeros();
            for (m, p) in basis.iter().enumerate() {
                let c = eig.vectors.0[m][k] * w;
                if c.norm_sqr() > 0.0 {
                    kr += p.scale(c);
                }
            }
            out.push(kr);
        }
        out
    }

    /// `Σ_mn χ_mn P_n† P_m` of the unnormalized map; the identity for
    /// trace-preserving maps.
    pub fn tp_operator(&self) -> Mat4<f64> {
        let basis = pauli_basis::<f64>();
        let raw = self.chi_raw();
        let mut f = Mat4::zeros();
        for m in 0..16 {
            for n in 0..16 {
                let c = raw.0[m][n];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                f += (basis[n] * basis[m]).scale(c);
            }
        }
        f
    }

    /// `‖Σ χ_mn P_n†P_m − I‖_F`.
    pub fn completeness_defect(&self) -> f64 {
        (self.tp_operator() - Mat4::identity()).frobenius_norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.chi.hermitian_eigen().values[0]
    }
}

fn hermitize(chi: &mut Mat16<f64>) {
    for i in 0..16 {
        chi.0[i][i].im = 0.0;
        for j in i + 1..16 {
            let avg = (chi.0[i][j] + chi.0[j][i].conj()) * 0.5;
            chi.0[i][j] = avg;
            chi.0[j][i] = avg.conj();
        }
    }
}

/// Raw chi contribution `c c†` of one Kraus operator, `c_m = Tr(P_m† K)/4`.
fn kraus_chi(k: &Mat4<f64>) -> Mat16<f64> {
    let t = pauli_coefficients(k);
    let mut chi = Mat16::zeros();
    for m in 0..16 {
        for n in 0..16 {
            chi.0[m][n] = t[m] * t[n].conj() / 16.0;
        }
    }
    chi
}

/// Rank-one chi of a unitary.
pub fn unitary_to_chi(u: &Unitary4<f64>) -> Result<ProcessMatrix> {
    validate_unitary(u)?;
    ProcessMatrix::from_raw(kraus_chi(u))
}

/// Chi of the map `ρ ↦ Σ_k K_k ρ K_k†`.
pub fn kraus_to_chi(kraus: &[Mat4<f64>]) -> Result<ProcessMatrix> {
    if kraus.is_empty() {
        return Err(Error::InvalidParameter("empty Kraus set".into()));
    }
    let mut chi = Mat16::zeros();
    for k in kraus {
        if !k.is_finite() {
            return Err(Error::NonFinite);
        }
        chi += kraus_chi(k);
    }
    ProcessMatrix::from_raw(chi)
}

/// Validates a two-qubit density matrix (Hermitian, PSD, unit trace).
pub fn validate_density(rho: &Mat4<f64>) -> Result<()> {
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    let herm = rho.hermiticity_deviation();
    let tr = rho.trace();
    let min = rho.hermitian_eigen().values[0];
    if herm > 1e-10 || (tr - Complex::new(1.0, 0.0)).norm() > 1e-10 || min < -1e-10 {
        return Err(Error::InvalidParameter(format!(
            "not a density matrix (‖ρ−ρ†‖ = {herm:.2e}, Tr ρ = {:.12}, λ_min = {min:.2e})",
            tr.re
        )));
    }
    Ok(())
}

/// `E(ρ)` without renormalization.
pub fn apply_process_unnormalized(chi: &ProcessMatrix, rho: &Mat4<f64>) -> Mat4<f64> {
    let basis = pauli_basis::<f64>();
    let raw = chi.chi_raw();
    let left: Vec<Mat4<f64>> = basis.iter().map(|p| *p * *rho).collect();
    let mut out = Mat4::zeros();
    for n in 0..16 {
        // Σ_m χ_mn P_m ρ, then · P_n†
        let mut acc = Mat4::zeros();
        let mut any = false;
        for m in 0..16 {
            let c = raw.0[m][n];
            if c.norm_sqr() > 0.0 {
                acc += left[m].scale(c);
                any = true;
            }
        }
        if any {
            out += acc * basis[n];
        }
    }
    out
}

/// Output state of a process and the probability that it was produced.
#[derive(Clone, Copy, Debug)]
pub struct ProcessOutput {
    pub rho: Mat4<f64>,
    pub success_probability: f64,
}

/// `E(ρ) / Tr E(ρ)`, keeping `Tr E(ρ)` as the success probability.
pub fn apply_process(chi: &ProcessMatrix, rho: &Mat4<f64>) -> Result<ProcessOutput> {
    validate_density(rho)?;
    let out = apply_process_unnormalized(chi, rho);
    let tr = out.trace().re;
    if tr <= 1e-15 {
        return Err(Error::ZeroTrace);
    }
    Ok(ProcessOutput {
        rho: out.scale_re(1.0 / tr),
        success_probability: tr,
    })
}

/// Process fidelity and how it was computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub value: f64,
    /// True when neither argument was pure and the Uhlmann form was used.
    pub general_form: bool,
}

fn is_pure(x: &ProcessMatrix) -> bool {
    (process_purity(x) - 1.0).abs() < 1e-9
}

/// `Tr(χ_x χ_y)` when either process is pure; otherwise the Uhlmann
/// fidelity `(Tr √(√χ_x χ_y √χ_x))²` of the normalized chi matrices.
pub fn process_fidelity(x: &ProcessMatrix, y: &ProcessMatrix) -> Fidelity {
    if is_pure(x) || is_pure(y) {
        let v = x.chi.trace_mul(&y.chi).re;
        return Fidelity {
            value: v.clamp(0.0, 1.0),
            general_form: false,
        };
    }
    let sx = x.chi.hermitian_map(|l| l.max(0.0).sqrt());
    let inner = sx * y.chi * sx;
    let root_trace: f64 = inner.hermitian_eigen().values.iter().map(|l| l.max(0.0).sqrt()).sum();
    Fidelity {
        value: (root_trace * root_trace).clamp(0.0, 1.0),
        general_form: true,
    }
}

/// `Tr χ²` of the normalized chi matrix.
pub fn process_purity(x: &ProcessMatrix) -> f64 {
    x.chi.frobenius_norm_sqr()
}

/// `E₂ ∘ E₁` (apply `first`, then `second`).
pub fn compose(first: &ProcessMatrix, second: &ProcessMatrix) -> Result<ProcessMatrix> {
    let k1 = first.kraus();
    let k2 = second.kraus();
    let mut ks = Vec::with_capacity(k1.len() * k2.len());
    for b in &k2 {
        for a in &k1 {
            ks.push(*b * *a);
        }
    }
    kraus_to_chi(&ks)
}

/// Chi of `ρ ↦ V E(UρU†) V†`, computed as `M χ M†` with
/// `M_am = Tr(P_a† V P_m U) / 4`.
pub fn dress(chi: &ProcessMatrix, pre: &Unitary4<f64>, post: &Unitary4<f64>) -> ProcessMatrix {
    let basis = pauli_basis::<f64>();
    let mut m = Mat16::zeros();
    for (col, p) in basis.iter().enumerate() {
        let t = pauli_coefficients(&(*post * *p * *pre));
        for a in 0..16 {
            m.0[a][col] = t[a] / 4.0;
        }
    }
    let mut out = m * chi.chi * m.adjoint();
    hermitize(&mut out);
    ProcessMatrix {
        chi: out,
        trace_norm: chi.trace_norm,
    }
}

/// Noise channels and incoherent mixtures.
#[derive(Clone, Debug)]
pub enum NoiseChannel {
    /// `ρ ↦ (1−p) ρ + p I/4`, chi `(1−p) e_II e_II† + p I/16`.
    Depolarizing(f64),
    /// `ρ ↦ (1−p) ρ + p Δ(ρ)` with `Δ` full dephasing in the computational basis.
    Dephasing(f64),
    /// `ρ ↦ Σ w_k U_k ρ U_k†`.
    UnitaryMixture(Vec<(f64, Unitary4<f64>)>),
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

pub fn noise_channel(kind: &NoiseChannel) -> Result<ProcessMatrix> {
    match kind {
        NoiseChannel::Depolarizing(p) => {
            check_probability(*p)?;
            let mut chi = Mat16::from_diag([Complex::new(p / 16.0, 0.0); 16]);
            chi.0[0][0] += Complex::new(1.0 - p, 0.0);
            ProcessMatrix::from_raw(chi)
        }
        NoiseChannel::Dephasing(p) => {
            check_probability(*p)?;
            let mut chi = Mat16::zeros();
            chi.0[0][0] = Complex::new(1.0 - p, 0.0);
            // II, IZ, ZI, ZZ
            for idx in [0, 3, 12, 15] {
                chi.0[idx][idx] += Complex::new(p / 4.0, 0.0);
            }
            ProcessMatrix::from_raw(chi)
        }
        NoiseChannel::UnitaryMixture(terms) => {
            if terms.is_empty() {
                return Err(Error::InvalidParameter("empty mixture".into()));
            }
            let total: f64 = terms.iter().map(|(w, _)| *w).sum();
            if terms.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "mixture weights must be non-negative and sum to 1 (sum = {total})"
                )));
            }
            let mut chi = Mat16::zeros();
            for (w, u) in terms {
                validate_unitary(u)?;
                chi += kraus_chi(u).scale_re(*w);
            }
            ProcessMatrix::from_raw(chi)
        }
    }
}

/// Identity process.
pub fn identity_process() -> ProcessMatrix {
    unitary_to_chi(&Mat4::identity()).expect("identity is unitary")
}

/// Serialized form `{"basis": "pauli16", "trace_norm": r, "chi": <16×16 matrix>}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessMatrixJson {
    pub basis: String,
    pub trace_norm: f64,
    pub chi: MatrixJson,
}

impl ProcessMatrixJson {
    pub fn from_process(p: &ProcessMatrix) -> Self {
        ProcessMatrixJson {
            basis: "pauli16".into(),
            trace_norm: p.trace_norm,
            chi: MatrixJson::from_mat(&p.chi),
        }
    }

    pub fn to_process(&self) -> Result<ProcessMatrix> {
        if self.basis != "pauli16" {
            return Err(Error::InvalidParameter(format!("unsupported basis `{}`", self.basis)));
        }
        ProcessMatrix::from_external(self.chi.to_mat()?, self.trace_norm)
    }
}

/// Pure state `|ψ⟩⟨ψ|`.
pub fn pure_density(psi: &[Complex<f64>; 4]) -> Mat4<f64> {
    crate::linalg::outer(psi, psi)
}

/// Expectation `⟨ψ|ρ|ψ⟩`.
pub fn expectation(rho: &Mat4<f64>, psi: &[Complex<f64>; 4]) -> f64 {
    let v = rho.apply(psi);
    psi.iter().zip(v.iter()).fold(Complex::zero(), |acc: Complex<f64>, (a, b)| acc + a.conj() * b).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::cz;
    use crate::matchgate::named_gate4;

    #[test]
    fn identity_chi_is_single_entry() {
        let p = identity_process();
        assert!((p.chi().0[0][0].re - 1.0).abs() < 1e-15);
        assert!((process_purity(&p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let i = identity_process();
        let czp = unitary_to_chi(&cz()).unwrap();
        assert!((process_fidelity(&i, &czp).value - 0.25).abs() < 1e-14);
        let ghh = unitary_to_chi(&named_gate4("G_HH").unwrap()).unwrap();
        assert!((process_fidelity(&ghh, &czp).value - 0.125).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_and_dephasing() {
        let full = noise_channel(&NoiseChannel::Depolarizing(1.0)).unwrap();
        assert!((process_purity(&full) - 1.0 / 16.0).abs() < 1e-15);
        assert!(full.completeness_defect() < 1e-12);
        let deph = noise_channel(&NoiseChannel::Dephasing(0.3)).unwrap();
        assert!(deph.completeness_defect() < 1e-12);
        let z1 = crate::linalg::kron(&crate::gates::pauli_z(), &crate::gates::identity2());
        let mix = noise_channel(&NoiseChannel::UnitaryMixture(vec![(0.5, Mat4::identity()), (0.5, z1)])).unwrap();
        assert!((process_purity(&mix) - 0.5).abs() < 1e-14);
        assert!(noise_channel(&NoiseChannel::UnitaryMixture(vec![(0.7, z1)])).is_err());
    }

    #[test]
    fn kraus_roundtrip_and_composition() {
        let czp = unitary_to_chi(&cz()).unwrap();
        let both = compose(&czp, &czp).unwrap();
        assert!((process_fidelity(&both, &identity_process()).value - 1.0).abs() < 1e-12);
        let dep = noise_channel(&NoiseChannel::Depolarizing(0.2)).unwrap();
        let k = dep.kraus();
        let back = kraus_to_chi(&k).unwrap();
        assert!((back.chi_raw() - dep.chi_raw()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn trace_decreasing_map_keeps_success_probability() {
        let k = Mat4::from_diag([-1.0, 1.0, 1.0, 1.0].map(|x| Complex::new(x / 3.0, 0.0)));
        let p = kraus_to_chi(&[k]).unwrap();
        assert!((p.trace_norm() - 1.0 / 9.0).abs() < 1e-15);
        let mut rho = Mat4::zeros();
        rho.0[3][3] = Complex::new(1.0, 0.0);
        let out = apply_process(&p, &rho).unwrap();
        assert!((out.success_probability - 1.0 / 9.0).abs() < 1e-15);
        let zero = kraus_to_chi(&[Mat4::from_diag([Complex::new(1.0, 0.0), Complex::zero(), Complex::zero(), Complex::zero()])]).unwrap();
        assert!(matches!(apply_process(&zero, &rho), Err(Error::ZeroTrace)));
    }
}
