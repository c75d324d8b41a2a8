// SPDX-License-Identifier: Apache-2.0

//! Fixed-size dense complex matrices.
//!
//! Everything in this crate works on 2×2, 4×4 or 16×16 operators, so the
//! matrices are stack arrays indexed `[row][col]` with const-generic size.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// `N×N` complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat<T, const N: usize>(pub [[Complex<T>; N]; N]);

pub type Mat2<T> = CMat<T, 2>;
pub type Mat4<T> = CMat<T, 4>;
pub type Mat16<T> = CMat<T, 16>;

impl<T: Real, const N: usize> CMat<T, N> {
    pub fn zeros() -> Self {
        CMat([[Complex::zero(); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = Complex::one();
        }
        m
    }

    pub fn from_diag(d: [Complex<T>; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = d[i];
        }
        m
    }

    /// Builds a matrix from `(re, im)` pairs given in `f64`.
    pub fn from_f64(rows: [[(f64, f64); N]; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = Complex::new(T::of(rows[i][j].0), T::of(rows[i][j].1));
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[j][i] = self.0[i][j].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[j][i] = self.0[i][j];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for z in row.iter_mut() {
                *z = f(*z);
            }
        }
        m
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..N).map(|i| self.0[i][i]).fold(Complex::zero(), |a, b| a + b)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_mul(&self, other: &Self) -> Complex<T> {
        let mut acc = Complex::zero();
        for i in 0..N {
            for k in 0..N {
                acc += self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_deviation(&self) -> T {
        (self.adjoint() * *self - Self::identity()).frobenius_norm()
    }

    /// `‖H − H†‖_F`.
    pub fn hermiticity_deviation(&self) -> T {
        (*self - self.adjoint()).frobenius_norm()
    }

    pub fn apply(&self, v: &[Complex<T>; N]) -> [Complex<T>; N] {
        let mut out = [Complex::zero(); N];
        for i in 0..N {
            for j in 0..N {
                out[i] += self.0[i][j] * v[j];
            }
        }
        out
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn det(&self) -> Complex<T> {
        let mut a = self.0;
        let mut det = Complex::one();
        for col in 0..N {
            let mut piv = col;
            for r in col + 1..N {
                if a[r][col].norm_sqr() > a[piv][col].norm_sqr() {
                    piv = r;
                }
            }
            if a[piv][col].norm_sqr() == T::zero() {
                return Complex::zero();
            }
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            let p = a[col][col];
            det *= p;
            for r in col + 1..N {
                let f = a[r][col] / p;
                for k in col..N {
                    let v = a[col][k];
                    a[r][k] -= f * v;
                }
            }
        }
        det
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Eigenvalues ascend; eigenvectors are the columns of
    /// `vectors`.
    pub fn hermitian_eigen(&self) -> HermitianEigen<T, N> {
        let mut a = *self;
        for i in 0..N {
            a.0[i][i] = Complex::new(a.0[i][i].re, T::zero());
            for j in i + 1..N {
                let avg = (a.0[i][j] + a.0[j][i].conj()) * T::of(0.5);
                a.0[i][j] = avg;
                a.0[j][i] = avg.conj();
            }
        }
        let mut v = Self::identity();
        let total = a.frobenius_norm_sqr();
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            for p in 0..N {
                for q in p + 1..N {
                    off += a.0[p][q].norm_sqr();
                }
            }
            if off <= eps * eps * total || off == T::zero() {
                break;
            }
            for p in 0..N {
                for q in p + 1..N {
                    let apq = a.0[p][q];
                    let mag = apq.norm();
                    if mag == T::zero() {
                        continue;
                    }
                    let ph = (apq / mag).conj();
                    let app = a.0[p][p].re;
                    let aqq = a.0[q][q].re;
                    let theta = (aqq - app) / (T::of(2.0) * mag);
                    let t = if theta.is_infinite() {
                        T::zero()
                    } else {
                        let s = if theta >= T::zero() { T::one() } else { -T::one() };
                        s / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let cs = T::one() / (t * t + T::one()).sqrt();
                    let sn = t * cs;
                    let jpp = Complex::new(cs, T::zero());
                    let jpq = Complex::new(sn, T::zero());
                    let jqp = ph * (-sn);
                    let jqq = ph * cs;
                    for k in 0..N {
                        let x = a.0[k][p];
                        let y = a.0[k][q];
                        a.0[k][p] = x * jpp + y * jqp;
                        a.0[k][q] = x * jpq + y * jqq;
                    }
                    for k in 0..N {
                        let x = a.0[p][k];
                        let y = a.0[q][k];
                        a.0[p][k] = jpp.conj() * x + jqp.conj() * y;
                        a.0[q][k] = jpq.conj() * x + jqq.conj() * y;
                    }
                    a.0[p][q] = Complex::zero();
                    a.0[q][p] = Complex::zero();
                    a.0[p][p] = Complex::new(a.0[p][p].re, T::zero());
                    a.0[q][q] = Complex::new(a.0[q][q].re, T::zero());
                    for k in 0..N {
                        let x = v.0[k][p];
                        let y = v.0[k][q];
                        v.0[k][p] = x * jpp + y * jqp;
                        v.0[k][q] = x * jpq + y * jqq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..N).collect();
        order.sort_by(|&i, &j| a.0[i][i].re.partial_cmp(&a.0[j][j].re).unwrap());
        let mut values = [T::zero(); N];
        let mut vectors = Self::zeros();
        for (new, &old) in order.iter().enumerate() {
            values[new] = a.0[old][old].re;
            for k in 0..N {
                vectors.0[k][new] = v.0[k][old];
            }
        }
        HermitianEigen { values, vectors }
    }

    /// Applies `f` to the eigenvalues of a Hermitian matrix.
    pub fn hermitian_map(&self, f: impl Fn(T) -> T) -> Self {
        let eig = self.hermitian_eigen();
        eig.reassemble(f)
    }

    /// Closest unitary in Frobenius norm (unitary factor of the polar
    /// decomposition).
    pub fn polar_unitary(&self) -> Self {
        if N == 2 {
            return polar2(self);
        }
        let gram = self.adjoint() * *self;
        let eig = gram.hermitian_eigen();
        let top = eig.values[N - 1].max(T::min_positive_value());
        let floor = top * T::epsilon() * T::epsilon();
        if eig.values[0] <= floor {
            // Rank-deficient: nudge with a small identity component.
            let bump = Self::identity().scale_re(top.sqrt() * T::of(1e-7));
            return (*self + bump).polar_unitary_full_rank();
        }
        *self * eig.reassemble(|s| T::one() / s.sqrt())
    }

    fn polar_unitary_full_rank(&self) -> Self {
        let eig = (self.adjoint() * *self).hermitian_eigen();
        *self * eig.reassemble(|s| T::one() / s.max(T::min_positive_value()).sqrt())
    }
}

/// 2×2 polar factor in closed form: `W = (M + e^{i arg det M} adj(M)†) / Tr(S)`.
fn polar2<T: Real, const N: usize>(m: &CMat<T, N>) -> CMat<T, N> {
    debug_assert_eq!(N, 2);
    let (a, b, c, d) = (m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]);
    let det = a * d - b * c;
    let ph = if det.norm() > T::zero() {
        det / det.norm()
    } else {
        Complex::one()
    };
    // adj(M) = [[d, -b], [-c, a]]; adj(M)† = [[d*, -c*], [-b*, a*]]
    let mut w = CMat::<T, N>::zeros();
    w.0[0][0] = a + ph * d.conj();
    w.0[0][1] = b - ph * c.conj();
    w.0[1][0] = c - ph * b.conj();
    w.0[1][1] = d + ph * a.conj();
    let norm = w.frobenius_norm() / T::SQRT_2();
    if norm == T::zero() {
        return CMat::identity();
    }
    w.scale_re(T::one() / norm)
}

/// Result of [`CMat::hermitian_eigen`].
#[derive(Clone, Copy, Debug)]
pub struct HermitianEigen<T, const N: usize> {
    pub values: [T; N],
    pub vectors: CMat<T, N>,
}

impl<T: Real, const N: usize> HermitianEigen<T, N> {
    pub fn column(&self, k: usize) -> [Complex<T>; N] {
        let mut out = [Complex::zero(); N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.vectors.0[i][k];
        }
        out
    }

    /// `V f(Λ) V†`.
    pub fn reassemble(&self, f: impl Fn(T) -> T) -> CMat<T, N> {
        let mut out = CMat::zeros();
        for k in 0..N {
            let w = f(self.values[k]);
            if w == T::zero() {
                continue;
            }
            for i in 0..N {
                let vi = self.vectors.0[i][k] * w;
                for j in 0..N {
                    out.0[i][j] += vi * self.vectors.0[j][k].conj();
                }
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Index<(usize, usize)> for CMat<T, N> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.0[i][j]
    }
}

impl<T: Real, const N: usize> IndexMut<(usize, usize)> for CMat<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.0[i][j]
    }
}

impl<T: Real, const N: usize> Mul for CMat<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..N {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl<T: Real, const N: usize> Mul<Complex<T>> for CMat<T, N> {
    type Output = Self;
    fn mul(self, rhs: Complex<T>) -> Self {
        self.scale(rhs)
    }
}

impl<T: Real, const N: usize> Add for CMat<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> AddAssign for CMat<T, N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real, const N: usize> Sub for CMat<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> Neg for CMat<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

/// Kronecker product `a ⊗ b` in the basis order |00⟩, |01⟩, |10⟩, |11⟩
/// (first factor acts on the most significant qubit).
pub fn kron<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat4<T> {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Partial trace over the second qubit.
pub fn trace_out_second<T: Real>(m: &Mat4<T>) -> Mat2<T> {
    let mut out = Mat2::zeros();
    for a in 0..2 {
        for c in 0..2 {
            out.0[a][c] = m.0[2 * a][2 * c] + m.0[2 * a + 1][2 * c + 1];
        }
    }
    out
}

/// Partial trace over the first qubit.
pub fn trace_out_first<T: Real>(m: &Mat4<T>) -> Mat2<T> {
    let mut out = Mat2::zeros();
    for b in 0..2 {
        for d in 0..2 {
            out.0[b][d] = m.0[b][d] + m.0[2 + b][2 + d];
        }
    }
    out
}

/// Embeds a 2×2 operator on one qubit (0 = top / most significant).
pub fn on_qubit<T: Real>(u: &Mat2<T>, qubit: usize) -> Mat4<T> {
    if qubit == 0 {
        kron(u, &Mat2::identity())
    } else {
        kron(&Mat2::identity(), u)
    }
}

/// Outer product `|x⟩⟨y|`.
pub fn outer<T: Real, const N: usize>(x: &[Complex<T>; N], y: &[Complex<T>; N]) -> CMat<T, N> {
    let mut m = CMat::zeros();
    for i in 0..N {
        for j in 0..N {
            m.0[i][j] = x[i] * y[j].conj();
        }
    }
    m
}

/// In-place Cholesky factorization of a dense symmetric positive definite
/// `n×n` matrix (row-major); the lower triangle receives `L` with `A = LLᵀ`.
/// Returns `false` if a pivot is not positive.
pub fn cholesky_real(n: usize, a: &mut [f64]) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves `LLᵀ x = b` given the factor from [`cholesky_real`].
pub fn cholesky_solve(n: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Complex Cholesky `A = LL†` of a Hermitian positive definite matrix, with
/// real positive diagonal. Returns `None` if a pivot is not positive.
pub fn cholesky_complex<T: Real, const N: usize>(a: &CMat<T, N>) -> Option<CMat<T, N>> {
    let mut l = CMat::<T, N>::zeros();
    for j in 0..N {
        let mut d = a.0[j][j].re;
        for k in 0..j {
            d -= l.0[j][k].norm_sqr();
        }
        if d <= T::zero() || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l.0[j][j] = Complex::new(d, T::zero());
        for i in j + 1..N {
            let mut s = a.0[i][j];
            for k in 0..j {
                s -= l.0[i][k] * l.0[j][k].conj();
            }
            l.0[i][j] = s / d;
        }
    }
    Some(l)
}
