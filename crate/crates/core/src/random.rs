// SPDX-License-Identifier: Apache-2.0

//! Seeded random sampling: Haar unitaries, random matchgates and states.
//!
//! Every consumer draws from a [`ChaCha8Rng`] selected by `(seed, stream)`,
//! so parallel work items get independent, reproducible streams.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, Mat2, Mat4};
use crate::matchgate::Matchgate;
use crate::scalar::Real;

/// RNG for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes two indices into a stream id (splitmix64 finalizer).
pub fn stream_id(a: u64, b: u64) -> u64 {
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::of(re), T::of(im))
}

/// Haar-random unitary: Gram–Schmidt QR of a complex Ginibre matrix.
/// Normalizing each column directly is the phase fix (positive `R` diagonal).
pub fn haar_unitary<T: Real, R: Rng + ?Sized, const N: usize>(rng: &mut R) -> CMat<T, N> {
    let mut cols = [[Complex::<T>::zero(); N]; N];
    for col in cols.iter_mut() {
        for z in col.iter_mut() {
            *z = gaussian(rng);
        }
    }
    for k in 0..N {
        // two passes of modified Gram–Schmidt keep f32 columns orthogonal
        for _ in 0..2 {
            for j in 0..k {
                let mut proj = Complex::<T>::zero();
                for i in 0..N {
                    proj += cols[j][i].conj() * cols[k][i];
                }
                for i in 0..N {
                    let v = cols[j][i];
                    cols[k][i] -= proj * v;
                }
            }
        }
        let norm: T = cols[k].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in cols[k].iter_mut() {
            *z /= norm;
        }
    }
    let mut m = CMat::zeros();
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            m.0[i][j] = *z;
        }
    }
    m
}

/// Random matchgate: Haar `a`, Haar `b` rescaled by a phase so that
/// `det b = det a`.
pub fn random_matchgate<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Matchgate<T> {
    let a: Mat2<T> = haar_unitary(rng);
    let b: Mat2<T> = haar_unitary(rng);
    let ratio = a.det() / b.det();
    let fix = Complex::from_polar(T::one(), ratio.arg() / T::of(2.0));
    Matchgate::new(a, b.scale(fix)).expect("determinants matched by construction")
}

/// Random symmetric matchgate `G_AA`.
pub fn random_symmetric_matchgate<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Matchgate<T> {
    let a: Mat2<T> = haar_unitary(rng);
    Matchgate::new(a, a).expect("symmetric matchgate")
}

/// Haar-random pure state as a column vector.
pub fn random_state<R: Rng + ?Sized, const N: usize>(rng: &mut R) -> [Complex<f64>; N] {
    let mut v = [Complex::zero(); N];
    for z in v.iter_mut() {
        *z = gaussian(rng);
    }
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    v
}

/// Random full-rank density matrix `G G† / Tr(G G†)` (Ginibre ensemble).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R) -> Mat4<f64> {
    let mut g = Mat4::<f64>::zeros();
    for row in g.0.iter_mut() {
        for z in row.iter_mut() {
            *z = gaussian(rng);
        }
    }
    let rho = g * g.adjoint();
    let tr = rho.trace().re;
    rho.scale_re(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_outputs_are_unitary_in_both_precisions() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..50 {
            let u: Mat4<f64> = haar_unitary(&mut rng);
            assert!(u.unitarity_deviation() < 1e-13);
            let v: Mat2<f32> = haar_unitary(&mut rng);
            assert!(v.unitarity_deviation() < 1e-5);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Mat2<f64> = haar_unitary(&mut stream_rng(5, 3));
        let b: Mat2<f64> = haar_unitary(&mut stream_rng(5, 3));
        let c: Mat2<f64> = haar_unitary(&mut stream_rng(5, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
