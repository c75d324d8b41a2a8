// SPDX-License-Identifier: Apache-2.0

//! Matrix JSON: `{"rows": n, "cols": n, "data": [[re, im], ...]}`, row-major.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_mat<T: Real, const N: usize>(m: &CMat<T, N>) -> Self {
        let data = m
            .0
            .iter()
            .flatten()
            .map(|z| [z.re.as_f64(), z.im.as_f64()])
            .collect();
        MatrixJson {
            rows: N,
            cols: N,
            data,
        }
    }

    pub fn to_mat<T: Real, const N: usize>(&self) -> Result<CMat<T, N>> {
        if self.rows != N || self.cols != N || self.data.len() != N * N {
            return Err(Error::Shape {
                expected: N,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut m = CMat::zeros();
        for (k, [re, im]) in self.data.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NonFinite);
            }
            m.0[k / N][k % N] = Complex::new(T::of(*re), T::of(*im));
        }
        Ok(m)
    }
}

/// Serde adapter for `#[serde(with = "crate::json::mat")]` on `CMat<f64, N>` fields.
pub mod mat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(m: &CMat<f64, N>, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from_mat(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<CMat<f64, N>, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        j.to_mat().map_err(serde::de::Error::custom)
    }
}
