// SPDX-License-Identifier: Apache-2.0

//! Two-qubit process tomography: 16 product preparations from {H, V, D, R},
//! 36 product projectors from {H, V, D, A, R, L}, Poissonian counts, and a
//! maximum-likelihood reconstruction of the chi matrix.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::pauli_basis;
use crate::linalg::{cholesky_complex, cholesky_real, cholesky_solve, kron, outer, Mat16, Mat2, Mat4};
use crate::optim::{lbfgs, LbfgsOptions};
use crate::process::ProcessMatrix;
use crate::random::{stream_id, stream_rng};

/// Single-qubit polarization state label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Pol {
    /// `|H⟩ = |0⟩`, `|V⟩ = |1⟩`, `|D/A⟩ = (|0⟩ ± |1⟩)/√2`, `|R/L⟩ = (|0⟩ ± i|1⟩)/√2`.
    pub fn ket(self) -> [Complex<f64>; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex::zero();
        match self {
            Pol::H => [Complex::new(1.0, 0.0), z],
            Pol::V => [z, Complex::new(1.0, 0.0)],
            Pol::D => [Complex::new(s, 0.0), Complex::new(s, 0.0)],
            Pol::A => [Complex::new(s, 0.0), Complex::new(-s, 0.0)],
            Pol::R => [Complex::new(s, 0.0), Complex::new(0.0, s)],
            Pol::L => [Complex::new(s, 0.0), Complex::new(0.0, -s)],
        }
    }

    pub fn projector(self) -> Mat2<f64> {
        let k = self.ket();
        outer(&k, &k)
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Pol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Pol::H),
            "V" => Ok(Pol::V),
            "D" => Ok(Pol::D),
            "A" => Ok(Pol::A),
            "R" => Ok(Pol::R),
            "L" => Ok(Pol::L),
            _ => Err(Error::Dataset(format!("unknown polarization label `{s}`"))),
        }
    }
}

/// Preparation labels.
pub const PREP_STATES: [Pol; 4] = [Pol::H, Pol::V, Pol::D, Pol::R];
/// Measurement projector labels.
pub const MEAS_STATES: [Pol; 6] = [Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L];

pub const N_PREP: usize = 16;
pub const N_MEAS: usize = 36;
pub const N_SETTINGS: usize = N_PREP * N_MEAS;

/// Product input state `(top, bottom)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrepSetting(pub [Pol; 2]);

/// Product projector `(top, bottom)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasSetting(pub [Pol; 2]);

impl PrepSetting {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().all(|p| PREP_STATES.contains(p)) {
            Ok(())
        } else {
            Err(Error::Dataset(format!("invalid preparation {:?}", self.0)))
        }
    }

    pub fn density(&self) -> Mat4<f64> {
        kron(&self.0[0].projector(), &self.0[1].projector())
    }

    fn index(&self) -> usize {
        let pos = |p: Pol| PREP_STATES.iter().position(|q| *q == p).expect("validated");
        4 * pos(self.0[0]) + pos(self.0[1])
    }
}

impl MeasSetting {
    pub fn projector(&self) -> Mat4<f64> {
        kron(&self.0[0].projector(), &self.0[1].projector())
    }

    fn index(&self) -> usize {
        let pos = |p: Pol| MEAS_STATES.iter().position(|q| *q == p).expect("labels are total");
        6 * pos(self.0[0]) + pos(self.0[1])
    }
}

/// All `(prep, meas)` pairs in canonical order.
pub fn settings() -> Vec<(PrepSetting, MeasSetting)> {
    let mut out = Vec::with_capacity(N_SETTINGS);
    for a in PREP_STATES {
        for b in PREP_STATES {
            for c in MEAS_STATES {
                for d in MEAS_STATES {
                    out.push((PrepSetting([a, b]), MeasSetting([c, d])));
                }
            }
        }
    }
    out
}

/// One line of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub prep: PrepSetting,
    pub meas: MeasSetting,
    pub counts: u64,
}

/// Dataset header line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub n_nominal: u64,
    pub seed: u64,
}

/// Complete tomography dataset: one record per `(prep, meas)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyDataset {
    pub records: Vec<CountRecord>,
    pub n_nominal: u64,
    pub seed: u64,
}

impl TomographyDataset {
    /// Checks completeness and returns counts in canonical setting order.
    pub fn ordered_counts(&self) -> Result<Vec<f64>> {
        if self.records.len() != N_SETTINGS {
            return Err(Error::Dataset(format!(
                "expected {N_SETTINGS} records, found {}",
                self.records.len()
            )));
        }
        let mut out = vec![f64::NAN; N_SETTINGS];
        for r in &self.records {
            r.prep.validate()?;
            let idx = r.prep.index() * N_MEAS + r.meas.index();
            if !out[idx].is_nan() {
                return Err(Error::Dataset(format!("duplicate record for {:?}/{:?}", r.prep.0, r.meas.0)));
            }
            out[idx] = r.counts as f64;
        }
        Ok(out)
    }

    /// JSON lines: a header `{"n_nominal", "seed"}` then one record per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DatasetHeader {
            n_nominal: self.n_nominal,
            seed: self.seed,
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for r in &self.records {
            writeln!(w, "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Dataset("empty dataset file".into()))??;
        let header: DatasetHeader =
            serde_json::from_str(&first).map_err(|e| Error::Dataset(format!("bad header: {e}")))?;
        let mut records = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CountRecord =
                serde_json::from_str(&line).map_err(|e| Error::Dataset(format!("line {}: {e}", k + 2)))?;
            records.push(rec);
        }
        let ds = TomographyDataset {
            records,
            n_nominal: header.n_nominal,
            seed: header.seed,
        };
        ds.ordered_counts()?;
        Ok(ds)
    }
}

/// `Tr(Π · Σ χ_mn P_m ρ P_n†)` for the normalized chi (success scale excluded).
pub fn predicted_probability(chi: &ProcessMatrix, prep: &PrepSetting, meas: &MeasSetting) -> f64 {
    let out = crate::process::apply_process_unnormalized(chi, &prep.density());
    let p = meas.projector().trace_mul(&out).re / chi.trace_norm();
    p.max(0.0)
}

fn dataset_from_means(means: impl Fn(usize) -> u64, n_nominal: u64, seed: u64) -> TomographyDataset {
    let records = settings()
        .into_iter()
        .enumerate()
        .map(|(j, (prep, meas))| CountRecord {
            prep,
            meas,
            counts: means(j),
        })
        .collect();
    TomographyDataset {
        records,
        n_nominal,
        seed,
    }
}

fn poisson_sample<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Counts `~ Poisson(n_nominal · trace_norm · p)`; record `j` draws from
/// stream `j` of `seed`.
pub fn simulate_counts(chi: &ProcessMatrix, n_nominal: u64, seed: u64) -> Result<TomographyDataset> {
    if n_nominal == 0 {
        return Err(Error::InvalidParameter("n_nominal must be ≥ 1".into()));
    }
    let probs = Design::get().probabilities(chi);
    let scale = n_nominal as f64 * chi.trace_norm();
    Ok(dataset_from_means(
        |j| poisson_sample(&mut stream_rng(seed, j as u64), scale * probs[j]),
        n_nominal,
        seed,
    ))
}

/// Noise-free counts `round(n_nominal · trace_norm · p)`.
pub fn expected_counts(chi: &ProcessMatrix, n_nominal: u64) -> TomographyDataset {
    let probs = Design::get().probabilities(chi);
    let scale = n_nominal as f64 * chi.trace_norm();
    dataset_from_means(|j| (scale * probs[j]).round() as u64, n_nominal, 0)
}

const N_PARAM: usize = 256;

/// Hermitian packing of a chi matrix: 16 diagonal entries, then
/// `(Re χ_mn, Im χ_mn)` for each `m < n`.
fn pack(chi: &Mat16<f64>, h: &mut [f64]) {
    for m in 0..16 {
        h[m] = chi.0[m][m].re;
    }
    let mut k = 16;
    for m in 0..16 {
        for n in m + 1..16 {
            h[k] = chi.0[m][n].re;
            h[k + 1] = chi.0[m][n].im;
            k += 2;
        }
    }
}

fn unpack(h: &[f64]) -> Mat16<f64> {
    let mut chi = Mat16::zeros();
    for m in 0..16 {
        chi.0[m][m] = Complex::new(h[m], 0.0);
    }
    let mut k = 16;
    for m in 0..16 {
        for n in m + 1..16 {
            let z = Complex::new(h[k], h[k + 1]);
            chi.0[m][n] = z;
            chi.0[n][m] = z.conj();
            k += 2;
        }
    }
    chi
}

/// Hermitian matrix `B` with `Tr(δχ B) = Σ_i g_i δh_i` for gradient `g`
/// with respect to the packed parameters.
fn unpack_gradient(g: &[f64]) -> Mat16<f64> {
    let mut b = Mat16::zeros();
    for m in 0..16 {
        b.0[m][m] = Complex::new(g[m], 0.0);
    }
    let mut k = 16;
    for m in 0..16 {
        for n in m + 1..16 {
            let z = Complex::new(g[k], -g[k + 1]) * 0.5;
            b.0[n][m] = z;
            b.0[m][n] = z.conj();
            k += 2;
        }
    }
    b
}

/// Linear map from packed chi to the 576 outcome probabilities.
pub struct Design {
    /// Row-major `N_SETTINGS × N_PARAM`.
    a: Vec<f64>,
    /// `Q_mn = P_n† P_m`, for the trace-preservation operator.
    q: Vec<Mat4<f64>>,
}

static DESIGN: std::sync::OnceLock<Design> = std::sync::OnceLock::new();

impl Design {
    pub fn get() -> &'static Design {
        DESIGN.get_or_init(Design::build)
    }

    fn build() -> Design {
        let basis = pauli_basis::<f64>();
        let mut a = vec![0.0; N_SETTINGS * N_PARAM];
        for (j, (prep, meas)) in settings().iter().enumerate() {
            let rho = prep.density();
            let pi = meas.projector();
            // entry[m][n] = Tr(Π P_m ρ P_n†)
            let left: Vec<Mat4<f64>> = basis.iter().map(|p| pi * *p * rho).collect();
            let mut entry = Mat16::<f64>::zeros();
            for m in 0..16 {
                for n in 0..16 {
                    entry.0[m][n] = left[m].trace_mul(&basis[n]);
                }
            }
            let row = &mut a[j * N_PARAM..(j + 1) * N_PARAM];
            for m in 0..16 {
                row[m] = entry.0[m][m].re;
            }
            let mut k = 16;
            for m in 0..16 {
                for n in m + 1..16 {
                    row[k] = 2.0 * entry.0[m][n].re;
                    row[k + 1] = -2.0 * entry.0[m][n].im;
                    k += 2;
                }
            }
        }
        let mut q = Vec::with_capacity(256);
        for m in 0..16 {
            for n in 0..16 {
                q.push(basis[n] * basis[m]);
            }
        }
        Design { a, q }
    }

    fn probs_packed(&self, h: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.a[j * N_PARAM..(j + 1) * N_PARAM];
            *o = row.iter().zip(h).map(|(x, y)| x * y).sum();
        }
    }

    /// Outcome probabilities of the normalized chi.
    pub fn probabilities(&self, chi: &ProcessMatrix) -> Vec<f64> {
        let mut h = vec![0.0; N_PARAM];
        pack(chi.chi(), &mut h);
        let mut p = vec![0.0; N_SETTINGS];
        self.probs_packed(&h, &mut p);
        p.iter_mut().for_each(|x| *x = x.max(0.0));
        p
    }

    fn transpose_mul(&self, w: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|x| *x = 0.0);
        for (j, &wj) in w.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            let row = &self.a[j * N_PARAM..(j + 1) * N_PARAM];
            for (gi, ai) in g.iter_mut().zip(row) {
                *gi += wj * ai;
            }
        }
    }

    fn gram(&self) -> Vec<f64> {
        let mut g = vec![0.0; N_PARAM * N_PARAM];
        for j in 0..N_SETTINGS {
            let row = &self.a[j * N_PARAM..(j + 1) * N_PARAM];
            for (i, ri) in row.iter().enumerate() {
                if *ri == 0.0 {
                    continue;
                }
                for (k, rk) in row.iter().enumerate().skip(i) {
                    g[i * N_PARAM + k] += ri * rk;
                }
            }
        }
        for i in 0..N_PARAM {
            for k in 0..i {
                g[i * N_PARAM + k] = g[k * N_PARAM + i];
            }
        }
        g
    }

    /// `F(χ) = Σ χ_mn P_n† P_m`.
    fn tp_operator(&self, chi: &Mat16<f64>) -> Mat4<f64> {
        let mut f = Mat4::zeros();
        for m in 0..16 {
            for n in 0..16 {
                let c = chi.0[m][n];
                if c.norm_sqr() != 0.0 {
                    f += self.q[m * 16 + n].scale(c);
                }
            }
        }
        f
    }

    /// Hermitian `B` with `B_nm = Tr(G Q_mn)`, the chi-gradient of `Re Tr(G F)`.
    fn tp_gradient(&self, g: &Mat4<f64>) -> Mat16<f64> {
        let mut b = Mat16::zeros();
        for m in 0..16 {
            for n in 0..16 {
                b.0[n][m] = g.trace_mul(&self.q[m * 16 + n]);
            }
        }
        b
    }
}

/// Informational-completeness check of the design.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DesignRank {
    /// Whether `AᵀA` (256×256) is positive definite.
    pub full_column_rank: bool,
    /// `σ_max / σ_min` of the design matrix.
    pub condition_number: f64,
}

/// Verifies that the 576×256 design has full column rank and estimates its
/// condition number by power and inverse iteration on `AᵀA`.
pub fn design_rank() -> DesignRank {
    let d = Design::get();
    let g = d.gram();
    let n = N_PARAM;
    let matvec = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            y[i] = g[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    };
    let normalize = |x: &mut [f64]| {
        let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= s);
        s
    };
    let mut rng = stream_rng(0xDE51, 0);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut y = vec![0.0; n];
    normalize(&mut x);
    let mut lmax = 0.0;
    for _ in 0..500 {
        matvec(&x, &mut y);
        lmax = normalize(&mut y);
        std::mem::swap(&mut x, &mut y);
    }
    let mut l = g.clone();
    if !cholesky_real(n, &mut l) {
        return DesignRank {
            full_column_rank: false,
            condition_number: f64::INFINITY,
        };
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut x);
    let mut inv = 0.0;
    for _ in 0..500 {
        cholesky_solve(n, &l, &mut x);
        inv = normalize(&mut x);
    }
    let lmin = 1.0 / inv;
    DesignRank {
        full_column_rank: lmin > 1e-10 * lmax,
        condition_number: (lmax / lmin).sqrt(),
    }
}

/// Diagnostics of a maximum-likelihood reconstruction.
#[derive(Clone, Debug)]
pub struct MleResult {
    pub process: ProcessMatrix,
    /// Poisson log-likelihood (up to the count-only constant).
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖F − (Tr F/4) I‖_F / (Tr F/4)` before the final exact projection.
    pub tp_defect: f64,
    /// Smallest chi eigenvalue before any clipping.
    pub min_eigenvalue: f64,
    /// Every accepted optimizer step decreased the objective.
    pub monotone: bool,
}

/// Maximum-likelihood chi of a dataset.
pub fn mle_reconstruct(data: &TomographyDataset) -> Result<ProcessMatrix> {
    Ok(mle_reconstruct_detailed(data)?.process)
}

/// Lower-triangular `T` (real diagonal) from the 256 parameters.
fn t_from_params(x: &[f64]) -> Mat16<f64> {
    let mut t = Mat16::zeros();
    for i in 0..16 {
        t.0[i][i] = Complex::new(x[i], 0.0);
    }
    let mut k = 16;
    for i in 0..16 {
        for j in 0..i {
            t.0[i][j] = Complex::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

fn params_from_t(t: &Mat16<f64>) -> Vec<f64> {
    let mut x = vec![0.0; N_PARAM];
    for i in 0..16 {
        x[i] = t.0[i][i].re;
    }
    let mut k = 16;
    for i in 0..16 {
        for j in 0..i {
            x[k] = t.0[i][j].re;
            x[k + 1] = t.0[i][j].im;
            k += 2;
        }
    }
    x
}

/// Writes `∂/∂x Re Tr(δχ B)` for `χ = TT†` into `grad`: with `M = T†B`,
/// `∂/∂X_ab = 2 Re M_ba` and `∂/∂Y_ab = −2 Im M_ba`.
fn t_gradient(t: &Mat16<f64>, b: &Mat16<f64>, grad: &mut [f64]) {
    let m = t.adjoint() * *b;
    for i in 0..16 {
        grad[i] = 2.0 * m.0[i][i].re;
    }
    let mut k = 16;
    for i in 0..16 {
        for j in 0..i {
            grad[k] = 2.0 * m.0[j][i].re;
            grad[k + 1] = -2.0 * m.0[j][i].im;
            k += 2;
        }
    }
}

fn linear_inversion(design: &Design, freq: &[f64]) -> Mat16<f64> {
    let n = N_PARAM;
    let mut l = design.gram();
    let ok = cholesky_real(n, &mut l);
    debug_assert!(ok, "design has full column rank");
    let mut rhs = vec![0.0; n];
    design.transpose_mul(freq, &mut rhs);
    cholesky_solve(n, &l, &mut rhs);
    unpack(&rhs)
}

/// Iteration budget shared by all augmented-Lagrangian rounds.
pub const MLE_MAX_ITER: usize = 5000;

pub fn mle_reconstruct_detailed(data: &TomographyDataset) -> Result<MleResult> {
    let counts = data.ordered_counts()?;
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateData("all counts are zero".into()));
    }
    let n_nom = data.n_nominal as f64;
    if n_nom <= 0.0 {
        return Err(Error::DegenerateData("n_nominal is zero".into()));
    }
    let design = Design::get();
    let freq: Vec<f64> = counts.iter().map(|c| c / n_nom).collect();

    // Start: linear inversion projected onto PSD, with a small full-rank floor.
    let lin = linear_inversion(design, &freq);
    let eig = lin.hermitian_eigen();
    let scale = eig.values.iter().map(|v| v.max(0.0)).sum::<f64>().max(1e-12);
    let start = eig.reassemble(|v| v.max(0.0) + 1e-4 * scale);
    let t0 = cholesky_complex(&start).ok_or_else(|| Error::Internal("Cholesky of PSD start failed".into()))?;
    let mut x = params_from_t(&t0);

    let inv_total = 1.0 / total;
    let mut lambda = Mat4::<f64>::zeros();
    let mut mu = 10.0;
    let mut iterations = 0;
    let mut monotone = true;
    let mut converged = false;
    let mut last_defect = f64::INFINITY;
    let mut h = vec![0.0; N_PARAM];
    let mut p = vec![0.0; N_SETTINGS];
    let mut w = vec![0.0; N_SETTINGS];
    let mut g = vec![0.0; N_PARAM];

    let mut objective = |x: &[f64], grad: &mut [f64], lambda: &Mat4<f64>, mu: f64| -> f64 {
        let t = t_from_params(x);
        let chi = t * t.adjoint();
        pack(&chi, &mut h);
        design.probs_packed(&h, &mut p);
        let mut f = 0.0;
        for j in 0..N_SETTINGS {
            let mean = (n_nom * p[j]).max(1e-300);
            f -= counts[j] * mean.ln() - mean;
            w[j] = -(counts[j] / mean - 1.0) * n_nom * inv_total;
        }
        f *= inv_total;
        design.transpose_mul(&w, &mut g);
        let mut b = unpack_gradient(&g);
        // Trace-preservation up to scale: D = F − (Tr F/4) I.
        let fop = design.tp_operator(&chi);
        let tau = fop.trace().re / 4.0;
        let d = fop - Mat4::identity().scale_re(tau);
        f += 0.5 * mu * d.frobenius_norm_sqr() + lambda.trace_mul(&d).re;
        let gd = d.scale_re(mu) + *lambda;
        let gd_tilde = gd - Mat4::identity().scale_re(gd.trace().re / 4.0);
        b += design.tp_gradient(&gd_tilde);
        t_gradient(&t, &b, grad);
        f
    };

    for _round in 0..12 {
        let budget = MLE_MAX_ITER.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let lam = lambda;
        let r = lbfgs(
            |x, grad| objective(x, grad, &lam, mu),
            &x,
            LbfgsOptions {
                max_iter: budget,
                memory: 12,
                ftol: 1e-11,
                gtol: 1e-9,
            },
        );
        iterations += r.iterations;
        monotone &= r.history.windows(2).all(|s| s[1] <= s[0]);
        x = r.x;
        let t = t_from_params(&x);
        let chi = t * t.adjoint();
        let fop = design.tp_operator(&chi);
        let tau = fop.trace().re / 4.0;
        let d = fop - Mat4::identity().scale_re(tau);
        let defect = d.frobenius_norm() / tau;
        if defect < 1e-7 && r.converged {
            converged = true;
            last_defect = defect;
            break;
        }
        lambda += d.scale_re(mu);
        if defect > 0.25 * last_defect {
            mu *= 10.0;
        }
        last_defect = defect;
    }
    if !converged {
        log::warn!("MLE stopped after {iterations} iterations (TP defect {last_defect:.2e})");
    }

    let t = t_from_params(&x);
    let chi = t * t.adjoint();
    let min_eigenvalue = chi.hermitian_eigen().values[0];
    let chi = project_trace_preserving(design, &chi)?;
    pack(&chi, &mut h);
    design.probs_packed(&h, &mut p);
    let log_likelihood: f64 = (0..N_SETTINGS)
        .map(|j| {
            let mean = (n_nom * p[j]).max(1e-300);
            counts[j] * mean.ln() - mean
        })
        .sum();
    Ok(MleResult {
        process: ProcessMatrix::from_raw(chi)?,
        log_likelihood,
        iterations,
        converged,
        tp_defect: last_defect,
        min_eigenvalue,
        monotone,
    })
}

/// Exact trace preservation up to scale: pre-composes the map with
/// `S = (F/τ)^{−1/2}` so that the new `F` is `τ I`.
fn project_trace_preserving(design: &Design, chi: &Mat16<f64>) -> Result<Mat16<f64>> {
    let fop = design.tp_operator(chi);
    let tau = fop.trace().re / 4.0;
    if tau <= 0.0 {
        return Err(Error::DegenerateData("reconstructed map has zero trace".into()));
    }
    let eig = fop.scale_re(1.0 / tau).hermitian_eigen();
    if eig.values[0] <= 1e-12 {
        return Err(Error::DegenerateData("reconstructed map is not invertible on inputs".into()));
    }
    let s = eig.reassemble(|v| 1.0 / v.sqrt());
    let basis = pauli_basis::<f64>();
    let mut m = Mat16::zeros();
    for (col, p) in basis.iter().enumerate() {
        let t = crate::gates::pauli_coefficients(&(*p * s));
        for a in 0..16 {
            m.0[a][col] = t[a] / 4.0;
        }
    }
    Ok(m * *chi * m.adjoint())
}

/// Mean and standard deviation of a bootstrapped statistic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std: f64,
    pub resamples: usize,
    pub failures: usize,
}

/// Parametric bootstrap: each resample redraws every record as
/// `Poisson(observed count)` and reruns the reconstruction.
pub fn bootstrap_errors<F>(data: &TomographyDataset, resamples: usize, seed: u64, statistic: F) -> Result<BootstrapSummary>
where
    F: Fn(&ProcessMatrix) -> f64 + Sync,
{
    let mut out = bootstrap_errors_multi(data, resamples, seed, |p| vec![statistic(p)])?;
    Ok(out.remove(0))
}

/// [`bootstrap_errors`] for several statistics sharing the same resamples.
pub fn bootstrap_errors_multi<F>(data: &TomographyDataset, resamples: usize, seed: u64, statistics: F) -> Result<Vec<BootstrapSummary>>
where
    F: Fn(&ProcessMatrix) -> Vec<f64> + Sync,
{
    if resamples < 50 {
        return Err(Error::InvalidParameter(format!("need at least 50 resamples, got {resamples}")));
    }
    let counts = data.ordered_counts()?;
    let all = settings();
    let values: Vec<Option<Vec<f64>>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let records = all
                .iter()
                .enumerate()
                .map(|(j, (prep, meas))| CountRecord {
                    prep: *prep,
                    meas: *meas,
                    counts: poisson_sample(&mut stream_rng(seed, stream_id(r as u64, j as u64)), counts[j]),
                })
                .collect();
            let ds = TomographyDataset {
                records,
                n_nominal: data.n_nominal,
                seed,
            };
            mle_reconstruct(&ds).ok().map(|p| statistics(&p))
        })
        .collect();
    let ok: Vec<&Vec<f64>> = values.iter().flatten().collect();
    let failures = resamples - ok.len();
    if ok.len() < 2 {
        return Err(Error::DegenerateData(format!("{failures} of {resamples} bootstrap reconstructions failed")));
    }
    let width = ok[0].len();
    Ok((0..width)
        .map(|s| {
            let n = ok.len() as f64;
            let mean = ok.iter().map(|v| v[s]).sum::<f64>() / n;
            let var = ok.iter().map(|v| (v[s] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            BootstrapSummary {
                mean,
                std: var.sqrt(),
                resamples,
                failures,
            }
        })
        .collect())
}

/// Lookup of record counts by setting, for callers holding unordered data.
pub fn counts_by_setting(data: &TomographyDataset) -> HashMap<(PrepSetting, MeasSetting), u64> {
    data.records.iter().map(|r| ((r.prep, r.meas), r.counts)).collect()
}
