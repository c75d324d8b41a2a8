// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by validation and by the numerical pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not unitary: ‖U†U − I‖ = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("expected a {expected}×{expected} matrix, got {rows}×{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error(
        "matchgate determinant constraint violated: det(a) = {det_a_re:+.12}{det_a_im:+.12}i, \
         det(b) = {det_b_re:+.12}{det_b_im:+.12}i"
    )]
    DeterminantMismatch {
        det_a_re: f64,
        det_a_im: f64,
        det_b_re: f64,
        det_b_im: f64,
    },

    #[error("matrix does not have the matchgate zero pattern: |u[{row}][{col}]| = {magnitude:.3e}")]
    PatternViolation {
        row: usize,
        col: usize,
        magnitude: f64,
    },

    #[error("matchgate is not symmetric: blocks differ by {distance:.3e} (up to phase)")]
    NotSymmetric { distance: f64 },

    #[error("relaxed matchgates cannot be decomposed")]
    RelaxedMatchgate,

    #[error("unknown gate name `{0}`")]
    UnknownGate(String),

    #[error("point ({c1}, {c2}, {c3}) is not in the canonical Weyl chamber")]
    NotCanonical { c1: f64, c2: f64, c3: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("process output has zero trace (input completely filtered)")]
    ZeroTrace,

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("degenerate tomography data: {0}")]
    DegenerateData(String),

    #[error("calibration failed: best residuals {residuals:?} exceed {tolerance}")]
    Calibration { residuals: [f64; 3], tolerance: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
