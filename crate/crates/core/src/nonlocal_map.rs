// SPDX-License-Identifier: Apache-2.0

//! Locally optimized nonlocal fidelity over the Weyl chamber:
//! `F_nl(χ, c) = max_{u₁,v₁,u₂,v₂} Tr(χ · χ[(u₁⊗v₁) U_can(c) (u₂⊗v₂)])`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{pauli_basis, rx, rz};
use crate::linalg::{kron, trace_out_first, trace_out_second, Mat2, Mat4};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::process::ProcessMatrix;
use crate::random::{stream_id, stream_rng};
use crate::weyl::{canonical_unitary, kak_coordinates, nonlocal_distance, LocalDressing, WeylPoint};

/// Volume of the canonical chamber, `π³/24`.
pub const CHAMBER_VOLUME: f64 = std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI / 24.0;

/// Eigen-ensemble of a chi matrix: `F(V) = Σ_k λ_k |Tr(E_k† V)|² / 16`.
#[derive(Clone, Debug)]
pub struct FidelityTarget {
    weights: Vec<f64>,
    /// `E_k†`.
    ops_adj: Vec<Mat4<f64>>,
}

impl FidelityTarget {
    pub fn new(chi: &ProcessMatrix) -> Self {
        let basis = pauli_basis::<f64>();
        let eig = chi.chi().hermitian_eigen();
        let mut weights = Vec::new();
        let mut ops_adj = Vec::new();
        for k in (0..16).rev() {
            let lam = eig.values[k];
            if lam <= 1e-13 {
                continue;
            }
            let mut e = Mat4::zeros();
            for (m, p) in basis.iter().enumerate() {
                e += p.scale(eig.vectors.0[m][k]);
            }
            weights.push(lam);
            ops_adj.push(e.adjoint());
        }
        FidelityTarget { weights, ops_adj }
    }

    /// Process fidelity between the target and the unitary `v`.
    pub fn fidelity(&self, v: &Mat4<f64>) -> f64 {
        self.weights
            .iter()
            .zip(&self.ops_adj)
            .map(|(w, e)| w * e.trace_mul(v).norm_sqr())
            .sum::<f64>()
            / 16.0
    }

    /// `Ẽ = Σ_k λ_k conj(Tr(E_k† V)) E_k† / 16`; `Re Tr(Ẽ W)` minorizes `F(W)/2`
    /// up to a constant, touching at `W = V`.
    fn surrogate(&self, v: &Mat4<f64>) -> Mat4<f64> {
        let mut out = Mat4::zeros();
        for (w, e) in self.weights.iter().zip(&self.ops_adj) {
            let z = e.trace_mul(v).conj() * (w / 16.0);
            out += e.scale(z);
        }
        out
    }
}

/// Optimizer settings for [`local_orbit_fidelity`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrbitOptions {
    pub restarts: usize,
    /// Simplex evaluation budget per restart.
    pub simplex_evals: usize,
    /// Maximum block-polar refinement sweeps per restart.
    pub refine_sweeps: usize,
    /// Convergence tolerance in fidelity.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            restarts: 8,
            simplex_evals: 400,
            refine_sweeps: 400,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// Result of the local optimization at one chamber point.
#[derive(Clone, Copy, Debug)]
pub struct FidelityMapPoint {
    pub point: WeylPoint<f64>,
    pub f_nl: f64,
    pub best_dressing: LocalDressing<f64>,
    pub restarts_used: usize,
    /// Whether the best restart met the tolerance before its budget ran out.
    pub converged: bool,
}

fn zxz(a: f64, b: f64, c: f64) -> Mat2<f64> {
    rz(a) * rx(b) * rz(c)
}

fn dressing_from_angles(x: &[f64]) -> LocalDressing<f64> {
    LocalDressing {
        u1: zxz(x[0], x[1], x[2]),
        v1: zxz(x[3], x[4], x[5]),
        u2: zxz(x[6], x[7], x[8]),
        v2: zxz(x[9], x[10], x[11]),
    }
}

/// Block-coordinate minorize–maximize ascent over the four local factors.
/// Each block update is the closed-form unitary maximizer of the linear
/// surrogate, so the fidelity never decreases.
fn refine_locals(target: &FidelityTarget, core: &Mat4<f64>, d: &mut LocalDressing<f64>, sweeps: usize, tol: f64) -> (f64, bool) {
    let i2 = Mat2::identity();
    let mut f = target.fidelity(&d.apply(core));
    for _ in 0..sweeps {
        let before = f;
        // u1: Re Tr((u1⊗I) · (I⊗v1) C L2 Ẽ)
        let l2 = kron(&d.u2, &d.v2);
        let e = target.surrogate(&d.apply(core));
        let n = trace_out_second(&(kron(&i2, &d.v1) * *core * l2 * e));
        d.u1 = n.polar_unitary().adjoint();
        // v1: Re Tr((I⊗v1) · C L2 Ẽ (u1⊗I))
        let e = target.surrogate(&d.apply(core));
        let n = trace_out_first(&(*core * l2 * e * kron(&d.u1, &i2)));
        d.v1 = n.polar_unitary().adjoint();
        // u2: Re Tr((u2⊗I) · (I⊗v2) Ẽ L1 C)
        let l1c = kron(&d.u1, &d.v1) * *core;
        let e = target.surrogate(&d.apply(core));
        let n = trace_out_second(&(kron(&i2, &d.v2) * e * l1c));
        d.u2 = n.polar_unitary().adjoint();
        // v2: Re Tr((I⊗v2) · Ẽ L1 C (u2⊗I))
        let e = target.surrogate(&d.apply(core));
        let n = trace_out_first(&(e * l1c * kron(&d.u2, &i2)));
        d.v2 = n.polar_unitary().adjoint();
        f = target.fidelity(&d.apply(core));
        if f - before <= tol * 1e-3 {
            return (f, true);
        }
    }
    (f, false)
}

/// Maximizes the fidelity to `chi` over the local orbit of `U_can(p)`.
///
/// Each restart runs a simplex search over 12 ZXZ Euler angles, then a
/// monotone block-polar refinement. Restart `r` at point index `index`
/// draws from stream `(index, r)` of `opts.seed`.
pub fn local_orbit_fidelity_indexed(target: &FidelityTarget, p: &WeylPoint<f64>, index: u64, opts: &OrbitOptions) -> FidelityMapPoint {
    let core = canonical_unitary(p);
    let mut best: Option<(f64, LocalDressing<f64>, bool)> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = stream_rng(opts.seed, stream_id(index, r as u64));
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; 12]
        } else {
            (0..12).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
        };
        let nm = nelder_mead(
            |x| -target.fidelity(&dressing_from_angles(x).apply(&core)),
            &x0,
            0.8,
            NelderMeadOptions {
                max_evals: opts.simplex_evals,
                ftol: opts.tol * 1e-3,
                xtol: 1e-8,
            },
        );
        let mut d = dressing_from_angles(&nm.x);
        let (f, ok) = refine_locals(target, &core, &mut d, opts.refine_sweeps, opts.tol);
        if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
            best = Some((f, d, ok));
        }
    }
    let (_, d, converged) = best.expect("at least one restart");
    FidelityMapPoint {
        point: *p,
        f_nl: target.fidelity(&d.apply(&core)).clamp(0.0, 1.0),
        best_dressing: d,
        restarts_used: opts.restarts.max(1),
        converged,
    }
}

pub fn local_orbit_fidelity(chi: &ProcessMatrix, p: &WeylPoint<f64>, opts: &OrbitOptions) -> Result<FidelityMapPoint> {
    if !p.is_canonical(1e-9) {
        return Err(Error::NotCanonical { c1: p.c1, c2: p.c2, c3: p.c3 });
    }
    Ok(local_orbit_fidelity_indexed(&FidelityTarget::new(chi), p, 0, opts))
}

/// Lattice of chamber points with per-point volume weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChamberGrid {
    /// Lattice divisions of π.
    pub divisions: usize,
    pub spacing: f64,
    pub points: Vec<WeylPoint<f64>>,
    pub weights: Vec<f64>,
}

/// Named grid sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridPreset {
    /// ≈ 6201 points.
    Fine,
    /// ≈ 1000 points.
    Desk,
}

impl GridPreset {
    pub fn target_count(self) -> usize {
        match self {
            GridPreset::Fine => 6201,
            GridPreset::Desk => 1000,
        }
    }
}

fn lattice_member(n: usize, i: usize, j: usize, k: usize) -> bool {
    i <= n && i >= j && j >= k && i + j <= n && !(k == 0 && 2 * i > n)
}

fn lattice_points(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=i {
            for k in 0..=j {
                if lattice_member(n, i, j, k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Number of Monte Carlo samples per grid point used for the weights.
pub const WEIGHT_SAMPLES_PER_POINT: usize = 200;

/// Cubic lattice of spacing `π/N` intersected with the chamber, with `N`
/// chosen so the count is nearest `target_count` (within 10% when possible).
/// Weights approximate each point's Voronoi cell volume inside the chamber
/// by seeded Monte Carlo.
pub fn build_chamber_grid(target_count: usize) -> Result<ChamberGrid> {
    if target_count < 10 {
        return Err(Error::InvalidParameter(format!("target_count {target_count} < 10")));
    }
    let mut best: Option<(usize, usize)> = None;
    let mut first_above: Option<(usize, usize)> = None;
    for n in 1..=400 {
        let count = lattice_points(n).len();
        let dist = count.abs_diff(target_count);
        if best.is_none_or(|(_, c)| dist < c.abs_diff(target_count)) {
            best = Some((n, count));
        }
        if first_above.is_none() && count >= target_count {
            first_above = Some((n, count));
        }
        if count > 2 * target_count + 10 {
            break;
        }
    }
    let (n, count) = best.expect("searched at least one size");
    let n = if count.abs_diff(target_count) as f64 <= 0.1 * target_count as f64 {
        n
    } else {
        first_above.map(|(n, _)| n).unwrap_or(n)
    };
    let idx = lattice_points(n);
    let h = std::f64::consts::PI / n as f64;
    let points: Vec<WeylPoint<f64>> = idx
        .iter()
        .map(|&[i, j, k]| WeylPoint::new(i as f64 * h, j as f64 * h, k as f64 * h))
        .collect();
    let weights = voronoi_weights(n, &idx);
    Ok(ChamberGrid {
        divisions: n,
        spacing: h,
        points,
        weights,
    })
}

fn voronoi_weights(n: usize, idx: &[[usize; 3]]) -> Vec<f64> {
    use std::collections::HashMap;
    use std::f64::consts::PI;
    let lookup: HashMap<[usize; 3], usize> = idx.iter().enumerate().map(|(p, &c)| (c, p)).collect();
    let h = PI / n as f64;
    let verts = [[0.0, 0.0, 0.0], [PI, 0.0, 0.0], [PI / 2.0, PI / 2.0, 0.0], [PI / 2.0, PI / 2.0, PI / 2.0]];
    let samples = WEIGHT_SAMPLES_PER_POINT * idx.len();
    let chunks = 64usize;
    let per_chunk = samples.div_ceil(chunks);
    let counts: Vec<Vec<u32>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(0x5EED_0F_C0DE, c as u64);
            let mut local = vec![0u32; idx.len()];
            for _ in 0..per_chunk {
                let e: [f64; 4] = std::array::from_fn(|_| Exp1.sample(&mut rng));
                let s: f64 = e.iter().sum();
                let mut x = [0.0; 3];
                for (w, v) in e.iter().zip(verts.iter()) {
                    for d in 0..3 {
                        x[d] += w / s * v[d];
                    }
                }
                if let Some(p) = nearest_lattice(&x, h, n, &lookup) {
                    local[p] += 1;
                }
            }
            local
        })
        .collect();
    let mut total = vec![0.0; idx.len()];
    for c in &counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += *v as f64;
        }
    }
    // Every lattice point keeps a positive share even if no sample landed.
    total.iter_mut().for_each(|t| *t = t.max(0.5));
    let sum: f64 = total.iter().sum();
    total.iter().map(|t| t / sum * CHAMBER_VOLUME).collect()
}

fn nearest_lattice(x: &[f64; 3], h: f64, n: usize, lookup: &std::collections::HashMap<[usize; 3], usize>) -> Option<usize> {
    for radius in 1..=3i64 {
        let mut best: Option<(f64, usize)> = None;
        let base: [i64; 3] = std::array::from_fn(|d| (x[d] / h).round() as i64);
        for di in -radius..=radius {
            for dj in -radius..=radius {
                for dk in -radius..=radius {
                    let c = [base[0] + di, base[1] + dj, base[2] + dk];
                    if c.iter().any(|&v| v < 0 || v > n as i64) {
                        continue;
                    }
                    let key = [c[0] as usize, c[1] as usize, c[2] as usize];
                    if let Some(&p) = lookup.get(&key) {
                        let d2: f64 = (0..3).map(|d| (x[d] - c[d] as f64 * h).powi(2)).sum();
                        if best.is_none_or(|(bd, _)| d2 < bd) {
                            best = Some((d2, p));
                        }
                    }
                }
            }
        }
        if let Some((_, p)) = best {
            return Some(p);
        }
    }
    None
}

/// Fidelity map over a grid.
#[derive(Clone, Debug)]
pub struct FidelityMap {
    pub grid: ChamberGrid,
    pub values: Vec<FidelityMapPoint>,
    pub target: String,
    pub seed: u64,
}

/// Evaluates [`local_orbit_fidelity`] at every grid point in parallel; point
/// `i` uses streams `(i, r)` of the master seed, so results do not depend
/// on scheduling.
pub fn fidelity_map(chi: &ProcessMatrix, grid: &ChamberGrid, target: &str, opts: &OrbitOptions) -> FidelityMap {
    let t = FidelityTarget::new(chi);
    let values = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| local_orbit_fidelity_indexed(&t, p, i as u64, opts))
        .collect();
    FidelityMap {
        grid: grid.clone(),
        values,
        target: target.to_string(),
        seed: opts.seed,
    }
}

/// Weighted fraction of the chamber with `f_nl ≥ threshold`.
pub fn volume_fraction(map: &FidelityMap, threshold: f64) -> f64 {
    let total: f64 = map.grid.weights.iter().sum();
    let inside: f64 = map
        .values
        .iter()
        .zip(&map.grid.weights)
        .filter(|(v, _)| v.f_nl >= threshold)
        .fold(0.0, |acc, (_, w)| acc + w);
    inside / total
}

/// Location and value of the map maximum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaximumReport {
    /// Refined maximizer (beyond the grid).
    pub point: WeylPoint<f64>,
    pub f_max: f64,
    /// Best grid point and its value.
    pub grid_point: WeylPoint<f64>,
    pub grid_f_max: f64,
    /// Nonlocal distance from the refined maximizer to the target.
    pub delta_nl: f64,
    /// Map maximum minus median below 1e-3.
    pub flat: bool,
}

/// Maximizes `Tr(χ χ_V)` over all of `U(4)` by repeated polar updates
/// `V ← polar(Ẽ)†`, starting from `v`.
pub fn refine_unitary(target: &FidelityTarget, mut v: Mat4<f64>, max_iter: usize) -> (Mat4<f64>, f64) {
    let mut f = target.fidelity(&v);
    for _ in 0..max_iter {
        let e = target.surrogate(&v);
        let next = e.polar_unitary().adjoint();
        let fn_ = target.fidelity(&next);
        if fn_ < f {
            break;
        }
        let gain = fn_ - f;
        v = next;
        f = fn_;
        if gain < 1e-14 {
            break;
        }
    }
    (v, f)
}

/// Finds the map maximum, refines it off-grid over `U(4)`, and reports its
/// nonlocal distance to `target_point`.
pub fn locate_maximum(chi: &ProcessMatrix, map: &FidelityMap, target_point: &WeylPoint<f64>) -> Result<MaximumReport> {
    let best = map
        .values
        .iter()
        .max_by(|a, b| a.f_nl.total_cmp(&b.f_nl))
        .ok_or_else(|| Error::InvalidParameter("empty map".into()))?;
    let mut sorted: Vec<f64> = map.values.iter().map(|v| v.f_nl).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let t = FidelityTarget::new(chi);
    let start = best.best_dressing.apply(&canonical_unitary(&best.point));
    let (v, f) = refine_unitary(&t, start, 5000);
    let (point, f_max) = if f >= best.f_nl {
        (kak_coordinates(&v)?, f)
    } else {
        (best.point, best.f_nl)
    };
    Ok(MaximumReport {
        point,
        f_max,
        grid_point: best.point,
        grid_f_max: best.f_nl,
        delta_nl: nonlocal_distance(&point, target_point)?,
        flat: best.f_nl - median < 1e-3,
    })
}

/// JSON summary written next to the CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSummary {
    pub f_max: f64,
    pub argmax: WeylPoint<f64>,
    pub delta_nl: f64,
    #[serde(rename = "volume_fraction_at_0.9")]
    pub volume_fraction_at_0_9: f64,
    pub grid_size: usize,
    pub grid_spacing: f64,
    pub seed: u64,
    pub flat: bool,
}

impl MapSummary {
    pub fn new(map: &FidelityMap, max: &MaximumReport) -> Self {
        MapSummary {
            f_max: max.f_max,
            argmax: max.point,
            delta_nl: max.delta_nl,
            volume_fraction_at_0_9: volume_fraction(map, 0.9),
            grid_size: map.grid.points.len(),
            grid_spacing: map.grid.spacing,
            seed: map.seed,
            flat: max.flat,
        }
    }
}

/// Writes `c1,c2,c3,f_nl,weight` rows with 12 significant digits.
pub fn write_csv<W: Write>(map: &FidelityMap, mut w: W) -> Result<()> {
    writeln!(w, "c1,c2,c3,f_nl,weight")?;
    for (v, weight) in map.values.iter().zip(&map.grid.weights) {
        writeln!(
            w,
            "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
            v.point.c1, v.point.c2, v.point.c3, v.f_nl, weight
        )?;
    }
    Ok(())
}
