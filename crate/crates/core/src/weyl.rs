// SPDX-License-Identifier: Apache-2.0

//! Canonical (KAK) coordinates of two-qubit unitaries.
//!
//! Every `U ∈ U(4)` factors as
//! `(u₁⊗v₁) · exp(−i/2 (c₁XX + c₂YY + c₃ZZ)) · (u₂⊗v₂)` up to a phase. The
//! coordinates are read off the spectrum of `Uᵀ_B U_B` in the magic basis and
//! reduced to the chamber `π ≥ c₁ ≥ c₂ ≥ c₃ ≥ 0`, `c₁ + c₂ ≤ π`, with
//! `c₁ ≤ π/2` on the face `c₃ = 0`.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{validate_unitary, Unitary2, Unitary4};
use crate::linalg::{CMat, Mat4};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::random::stream_rng;
use crate::scalar::{cis, Real};
use rand::Rng;

/// Canonical nonlocal coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint<T = f64> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Real> WeylPoint<T> {
    pub fn new(c1: T, c2: T, c3: T) -> Self {
        WeylPoint { c1, c2, c3 }
    }

    pub fn origin() -> Self {
        WeylPoint::new(T::zero(), T::zero(), T::zero())
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.c1, self.c2, self.c3]
    }

    pub fn to_f64(&self) -> WeylPoint<f64> {
        WeylPoint::new(self.c1.as_f64(), self.c2.as_f64(), self.c3.as_f64())
    }

    /// Chamber membership with slack `tol`.
    pub fn is_canonical(&self, tol: T) -> bool {
        self.in_tetrahedron(tol) && (self.c3 > tol || self.c1 <= T::PI() / T::of(2.0) + tol)
    }

    /// Membership of the unfolded tetrahedron with vertices `[0,0,0]`,
    /// `[π,0,0]`, `[π/2,π/2,0]`, `[π/2,π/2,π/2]`.
    pub fn in_tetrahedron(&self, tol: T) -> bool {
        let (c1, c2, c3) = (self.c1, self.c2, self.c3);
        c1 <= T::PI() + tol && c1 + tol >= c2 && c2 + tol >= c3 && c3 >= -tol && c1 + c2 <= T::PI() + tol
    }

    pub fn distance(&self, other: &Self) -> T {
        let d = [self.c1 - other.c1, self.c2 - other.c2, self.c3 - other.c3];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

/// Local factors `(u₁⊗v₁) · U_can · (u₂⊗v₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDressing<T> {
    pub u1: Unitary2<T>,
    pub v1: Unitary2<T>,
    pub u2: Unitary2<T>,
    pub v2: Unitary2<T>,
}

impl<T: Real> LocalDressing<T> {
    pub fn identity() -> Self {
        let i = CMat::identity();
        LocalDressing { u1: i, v1: i, u2: i, v2: i }
    }

    /// `(u₁⊗v₁) · core · (u₂⊗v₂)`.
    pub fn apply(&self, core: &Unitary4<T>) -> Unitary4<T> {
        crate::linalg::kron(&self.u1, &self.v1) * *core * crate::linalg::kron(&self.u2, &self.v2)
    }
}

/// Magic basis as columns: `Φ⁺, iΨ⁺, Ψ⁻, iΦ⁻`. Local unitaries in `SU(2)⊗SU(2)`
/// become real orthogonal matrices in this basis.
pub fn magic_basis<T: Real>() -> Mat4<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat4::from_f64([
        [(s, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, s)],
        [(0.0, 0.0), (0.0, s), (s, 0.0), (0.0, 0.0)],
        [(0.0, 0.0), (0.0, s), (-s, 0.0), (0.0, 0.0)],
        [(s, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, -s)],
    ])
}

/// Eigenvalues `h_k` of `c₁XX + c₂YY + c₃ZZ` on the magic-basis columns.
fn magic_exponents<T: Real>(p: &WeylPoint<T>) -> [T; 4] {
    let (a, b, c) = (p.c1, p.c2, p.c3);
    [a - b + c, a + b - c, -a - b - c, -a + b + c]
}

/// `exp(−i/2 (c₁XX + c₂YY + c₃ZZ))`, diagonal in the magic basis.
pub fn canonical_unitary<T: Real>(p: &WeylPoint<T>) -> Unitary4<T> {
    let b = magic_basis::<T>();
    let h = magic_exponents(p);
    let d = Mat4::from_diag(h.map(|x| cis(-x / T::of(2.0))));
    b * d * b.adjoint()
}

/// `M = U_Bᵀ U_B` with `U_B = B† U B`.
fn magic_gram<T: Real>(u: &Unitary4<T>) -> Mat4<T> {
    let b = magic_basis::<T>();
    let ub = b.adjoint() * *u * b;
    ub.transpose() * ub
}

/// Eigenvalues of a normal 4×4 matrix via the Hermitian pencil
/// `(M + M†)/2 + r (M − M†)/2i`, retried with other `r` if unresolved.
fn normal_eigenvalues<T: Real>(m: &Mat4<T>) -> [Complex<T>; 4] {
    let herm = (*m + m.adjoint()).scale_re(T::of(0.5));
    let anti = (*m - m.adjoint()).scale(Complex::new(T::zero(), T::of(-0.5)));
    let mut best: Option<(T, [Complex<T>; 4])> = None;
    for r in [0.618_033_988_749_894_9, 1.324_717_957_244_746, -0.754_877_666_246_692_7, std::f64::consts::E] {
        let pencil = herm + anti.scale_re(T::of(r));
        let eig = pencil.hermitian_eigen();
        let mut vals = [Complex::<T>::zero(); 4];
        let mut resid = T::zero();
        for (k, val) in vals.iter_mut().enumerate() {
            let v = eig.column(k);
            let mv = m.apply(&v);
            let lam = v.iter().zip(mv.iter()).fold(Complex::<T>::zero(), |acc, (a, b)| acc + a.conj() * b);
            *val = lam;
            for i in 0..4 {
                resid = resid.max((mv[i] - lam * v[i]).norm());
            }
        }
        if resid < T::epsilon().sqrt() * T::of(1e-2) {
            return vals;
        }
        if best.as_ref().is_none_or(|(r0, _)| resid < *r0) {
            best = Some((resid, vals));
        }
    }
    best.expect("at least one pencil tried").1
}

/// Raw (unreduced) coordinates from the magic-basis spectrum.
fn raw_coordinates<T: Real>(u: &Unitary4<T>) -> [T; 3] {
    let det = u.det();
    let quarter = Complex::from_polar(T::one(), det.arg() / T::of(4.0));
    let su = u.scale(quarter.inv());
    let m = magic_gram(&su);
    let vals = normal_eigenvalues(&m);
    let mut h: Vec<T> = vals.iter().map(|z| -z.arg()).collect();
    // Eigenvalues multiply to 1, so the phases sum to a multiple of 2π.
    let two_pi = T::TAU();
    let mut sum: T = h.iter().copied().sum();
    while sum > T::PI() {
        let i = (0..4).max_by(|&a, &b| h[a].partial_cmp(&h[b]).unwrap()).unwrap();
        h[i] -= two_pi;
        sum -= two_pi;
    }
    while sum < -T::PI() {
        let i = (0..4).min_by(|&a, &b| h[a].partial_cmp(&h[b]).unwrap()).unwrap();
        h[i] += two_pi;
        sum += two_pi;
    }
    let q = T::of(0.25);
    [
        (h[0] + h[1] - h[2] - h[3]) * q,
        (h[1] + h[3] - h[0] - h[2]) * q,
        (h[0] + h[3] - h[1] - h[2]) * q,
    ]
}

/// Below this `c₃` counts as zero when folding the chamber (≈1.5e-9 in f64).
fn face_tol<T: Real>() -> T {
    T::epsilon().sqrt() * T::of(0.1)
}

/// Reduces any coordinate triple to its chamber representative using the
/// local symmetries: shifts by π, sign flips of pairs, and permutations.
pub fn canonicalize<T: Real>(c: [T; 3]) -> WeylPoint<T> {
    let pi = T::PI();
    let mut flips = 0;
    let mut d = [T::zero(); 3];
    for i in 0..3 {
        let mut x = c[i] % pi;
        if x < T::zero() {
            x += pi;
        }
        if x >= pi {
            x -= pi;
        }
        if pi - x < x {
            d[i] = pi - x;
            flips += 1;
        } else {
            d[i] = x;
        }
    }
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if flips % 2 == 1 && d[2] > face_tol::<T>() {
        WeylPoint::new(pi - d[0], d[1], d[2])
    } else {
        WeylPoint::new(d[0], d[1], d[2])
    }
}

/// Chamber coordinates of `u`.
pub fn kak_coordinates<T: Real>(u: &Unitary4<T>) -> Result<WeylPoint<T>> {
    validate_unitary(u)?;
    Ok(canonicalize(raw_coordinates(u)))
}

/// Local invariants `g₁ = tr²(M) / (16 det U)`, `g₂ = (tr²M − tr M²) / (4 det U)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakhlinInvariants {
    pub g1_re: f64,
    pub g1_im: f64,
    pub g2: f64,
}

impl MakhlinInvariants {
    pub fn g1(&self) -> Complex<f64> {
        Complex::new(self.g1_re, self.g1_im)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.g1() - other.g1()).norm().max((self.g2 - other.g2).abs())
    }
}

pub fn makhlin_invariants<T: Real>(u: &Unitary4<T>) -> Result<MakhlinInvariants> {
    validate_unitary(u)?;
    let m = magic_gram(u);
    let det = u.det();
    let tr = m.trace();
    let tr2 = tr * tr;
    let g1 = tr2 / (det * T::of(16.0));
    let g2 = (tr2 - (m * m).trace()) / (det * T::of(4.0));
    Ok(MakhlinInvariants {
        g1_re: g1.re.as_f64(),
        g1_im: g1.im.as_f64(),
        g2: g2.re.as_f64(),
    })
}

/// Images of `p` under the chamber symmetry group that stay within one
/// period of the origin.
pub fn symmetry_images(p: &WeylPoint<f64>) -> Vec<WeylPoint<f64>> {
    use std::f64::consts::PI;
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    const SIGNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0]];
    let c = p.as_array();
    let mut out = Vec::with_capacity(6 * 4 * 27);
    for perm in PERMS {
        for sign in SIGNS {
            for s0 in -1..=1 {
                for s1 in -1..=1 {
                    for s2 in -1..=1 {
                        let s = [s0, s1, s2];
                        let mut q = [0.0; 3];
                        for k in 0..3 {
                            q[k] = sign[k] * c[perm[k]] + s[k] as f64 * PI;
                        }
                        out.push(WeylPoint::new(q[0], q[1], q[2]));
                    }
                }
            }
        }
    }
    out
}

/// Euclidean distance between two points of the chamber tetrahedron
/// (the `c3 = 0` mirror images are accepted, so the range is `[0, π]`).
pub fn nonlocal_distance(p: &WeylPoint<f64>, q: &WeylPoint<f64>) -> Result<f64> {
    for x in [p, q] {
        if !x.in_tetrahedron(1e-9) {
            return Err(Error::NotCanonical { c1: x.c1, c2: x.c2, c3: x.c3 });
        }
    }
    Ok(p.distance(q))
}

/// Distance from `p` to the nearest symmetry image of `q`.
pub fn nonlocal_distance_min(p: &WeylPoint<f64>, q: &WeylPoint<f64>) -> Result<f64> {
    let direct = nonlocal_distance(p, q)?;
    Ok(symmetry_images(q)
        .iter()
        .map(|img| p.distance(img))
        .fold(direct, f64::min))
}

/// Local equivalence by Makhlin invariants (1e-7), cross-checked on the
/// symmetry-minimized coordinate distance (1e-6).
pub fn locally_equivalent<T: Real>(u: &Unitary4<T>, v: &Unitary4<T>) -> Result<bool> {
    let gu = makhlin_invariants(u)?;
    let gv = makhlin_invariants(v)?;
    if gu.distance(&gv) > 1e-7 {
        return Ok(false);
    }
    let pu = kak_coordinates(u)?.to_f64();
    let pv = kak_coordinates(v)?.to_f64();
    Ok(nonlocal_distance_min(&pu, &pv)? <= 1e-6)
}

/// Concurrence `2|ψ₀₀ψ₁₁ − ψ₀₁ψ₁₀|` of a pure two-qubit state.
pub fn concurrence(psi: &[Complex<f64>; 4]) -> f64 {
    2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()
}

fn product_state(x: &[f64]) -> [Complex<f64>; 4] {
    let q = |theta: f64, phi: f64| [Complex::new((theta / 2.0).cos(), 0.0), Complex::from_polar((theta / 2.0).sin(), phi)];
    let a = q(x[0], x[1]);
    let b = q(x[2], x[3]);
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Number of seeded starts used by [`max_output_concurrence`].
pub const CONCURRENCE_RESTARTS: usize = 12;

/// Largest output concurrence over product inputs, by multi-start simplex
/// search over the two Bloch spheres.
pub fn max_output_concurrence<T: Real>(u: &Unitary4<T>) -> Result<f64> {
    validate_unitary(u)?;
    let mut m = Mat4::<f64>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = Complex::new(u.0[i][j].re.as_f64(), u.0[i][j].im.as_f64());
        }
    }
    let objective = |x: &[f64]| -concurrence(&m.apply(&product_state(x)));
    let opts = NelderMeadOptions {
        max_evals: 1500,
        ftol: 1e-14,
        xtol: 1e-9,
    };
    let best = (0..CONCURRENCE_RESTARTS as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(0x0C0C_0C0C, k);
            let x0: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let r = nelder_mead(objective, &x0, 0.6, opts);
            let r = nelder_mead(objective, &r.x, 0.05, opts);
            -r.fx
        })
        .reduce(|| 0.0, f64::max);
    Ok(best.min(1.0))
}

/// Threshold on the optimized concurrence that defines a perfect entangler.
pub const PE_THRESHOLD: f64 = 1.0 - 1e-6;

/// Perfect-entangler test by the concurrence oracle.
pub fn is_perfect_entangler(p: &WeylPoint<f64>) -> bool {
    max_output_concurrence(&canonical_unitary(p)).expect("canonical unitary is unitary") >= PE_THRESHOLD
}

/// Closed-form perfect-entangler test: the eigenvalues of the magic-basis
/// Gram matrix have 0 in their convex hull, i.e. no angular gap exceeds π.
pub fn is_perfect_entangler_fast(p: &WeylPoint<f64>) -> bool {
    let h = magic_exponents(p);
    let mut angles: Vec<f64> = h.iter().map(|x| (-x).rem_euclid(std::f64::consts::TAU)).collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    let mut gap: f64 = angles[0] + std::f64::consts::TAU - angles[3];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap <= std::f64::consts::PI + 1e-9
}

/// Named gates compared by nearest chamber point.
pub fn nearest_named_gate(p: &WeylPoint<f64>) -> (&'static str, f64) {
    use std::f64::consts::FRAC_PI_2 as H;
    use std::f64::consts::FRAC_PI_4 as Q;
    let table: [(&str, [f64; 3]); 5] = [
        ("I", [0.0, 0.0, 0.0]),
        ("CZ", [H, 0.0, 0.0]),
        ("SQRT_SWAP", [Q, Q, Q]),
        ("ISWAP", [H, H, 0.0]),
        ("SWAP", [H, H, H]),
    ];
    table
        .iter()
        .map(|(n, c)| (*n, p.distance(&WeylPoint::new(c[0], c[1], c[2]))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}
