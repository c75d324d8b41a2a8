// SPDX-License-Identifier: Apache-2.0

//! Two-qubit matchgate compilation and nonlocal process analysis.
//!
//! - [`gates`], [`matchgate`]: gate algebra, matchgate recognition and the
//!   dual-rail logical action of symmetric matchgates.
//! - [`compiler`]: matchgate to CNOT/controlled-unitary and `CZ(θ)` circuits.
//! - [`weyl`]: KAK coordinates, Makhlin invariants, perfect entanglers.
//! - [`process`], [`tomography`]: chi matrices, Poisson count simulation,
//!   maximum-likelihood reconstruction and bootstrap errors.
//! - [`nonlocal_map`]: locally optimized fidelity over the Weyl chamber.
//! - [`optics`]: post-selected beamsplitter gate model and synthetic
//!   experiment.
//!
//! The gate algebra is generic over [`Real`] (`f32`, `f64`); process-level
//! code is `f64` only.

pub mod compiler;
pub mod error;
pub mod gates;
pub mod json;
pub mod linalg;
pub mod matchgate;
pub mod nonlocal_map;
pub mod optics;
pub mod optim;
pub mod process;
pub mod random;
pub mod scalar;
pub mod tomography;
pub mod weyl;

pub use error::{Error, Result};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;
pub type Unitary2F64 = gates::Unitary2<f64>;
pub type Unitary4F64 = gates::Unitary4<f64>;
pub type Unitary2F32 = gates::Unitary2<f32>;
pub type Unitary4F32 = gates::Unitary4<f32>;
pub type MatchgateF64 = matchgate::Matchgate<f64>;
pub type MatchgateF32 = matchgate::Matchgate<f32>;
pub type WeylPointF64 = weyl::WeylPoint<f64>;
pub type WeylPointF32 = weyl::WeylPoint<f32>;
