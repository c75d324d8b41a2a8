// SPDX-License-Identifier: Apache-2.0

//! Post-selected linear-optics controlled-phase gate built from a partially
//! polarizing beamsplitter (PPBS), its imperfections, and a synthetic
//! tomography experiment around it.

use serde::{Deserialize, Serialize};

use crate::compiler::decompose_symmetric;
use crate::error::{Error, Result};
use crate::gates::{hadamard, pauli_x, rz, Unitary4};
use crate::linalg::{kron, Mat2, Mat4};
use crate::matchgate::Matchgate;
use crate::nonlocal_map::{
    build_chamber_grid, fidelity_map, locate_maximum, refine_unitary, volume_fraction, FidelityMap, FidelityTarget,
    GridPreset, OrbitOptions,
};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::process::{
    compose, dress, kraus_to_chi, noise_channel, process_fidelity, process_purity, unitary_to_chi, NoiseChannel,
    ProcessMatrix,
};
use crate::tomography::{bootstrap_errors_multi, mle_reconstruct, simulate_counts, TomographyDataset};
use crate::weyl::{kak_coordinates, WeylPoint};

/// Beamsplitter parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpbsParams {
    /// Horizontal reflectivity of the central PPBS (transmission `1 − eta`).
    pub eta: f64,
    /// Vertical intensity attenuation per output arm.
    pub kappa: f64,
    /// Two-photon interference visibility.
    pub visibility: f64,
}

impl PpbsParams {
    pub fn ideal() -> Self {
        PpbsParams {
            eta: 1.0 / 3.0,
            kappa: 1.0 / 3.0,
            visibility: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("kappa", self.kappa), ("visibility", self.visibility)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Both-reflect branch over `|HH⟩,|HV⟩,|VH⟩,|VV⟩`.
fn reflect_branch(p: &PpbsParams) -> Mat4<f64> {
    let s = (p.eta * p.kappa).sqrt();
    let mut m = Mat4::zeros();
    for (i, v) in [p.eta, s, s, p.kappa].into_iter().enumerate() {
        m.0[i][i].re = v;
    }
    m
}

/// Both-transmit branch: only `|HH⟩` can transmit on both sides.
fn transmit_branch(p: &PpbsParams) -> Mat4<f64> {
    let mut m = Mat4::zeros();
    m.0[0][0].re = -(1.0 - p.eta);
    m
}

/// Coincidence-subspace operator at full visibility:
/// `diag(2η−1, √(ηκ), √(ηκ), κ)`.
pub fn ppbs_postselected_operator(p: &PpbsParams) -> Result<Mat4<f64>> {
    p.validate()?;
    Ok(reflect_branch(p) + transmit_branch(p))
}

/// Kraus operators of the post-selected map. At visibility `v` the photons
/// are indistinguishable with weight `v` (interfering operator) and
/// distinguishable with weight `1 − v` (incoherent sum of the two branches).
pub fn ppbs_kraus(p: &PpbsParams) -> Result<Vec<Mat4<f64>>> {
    p.validate()?;
    let v = p.visibility;
    let mut ks = vec![(reflect_branch(p) + transmit_branch(p)).scale_re(v.sqrt())];
    if v < 1.0 {
        ks.push(reflect_branch(p).scale_re((1.0 - v).sqrt()));
        ks.push(transmit_branch(p).scale_re((1.0 - v).sqrt()));
    }
    Ok(ks)
}

/// Trace-decreasing process of the PPBS gate; `trace_norm` is the mean
/// coincidence probability.
pub fn ppbs_process(p: &PpbsParams) -> Result<ProcessMatrix> {
    kraus_to_chi(&ppbs_kraus(p)?)
}

/// Largest over smallest singular value of the full-visibility operator
/// (infinite when an entry vanishes).
pub fn singular_value_ratio(p: &PpbsParams) -> Result<f64> {
    let k = ppbs_postselected_operator(p)?;
    let s: Vec<f64> = (0..4).map(|i| k.0[i][i].norm()).collect();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Whether the operator is not proportional to a unitary.
pub fn is_non_unitary(p: &PpbsParams) -> Result<bool> {
    Ok((singular_value_ratio(p)? - 1.0).abs() > 1e-3)
}

/// Coincidence probability for each computational-basis input.
pub fn success_probabilities(p: &PpbsParams) -> Result<[f64; 4]> {
    let ks = ppbs_kraus(p)?;
    Ok(std::array::from_fn(|i| ks.iter().map(|k| k.0[i][i].norm_sqr()).sum()))
}

/// Full synthetic experiment configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ppbs: PpbsParams,
    pub depolarizing_p: f64,
    pub dephasing_p: f64,
    /// Residual phase of the compensation plate on the top photon.
    #[serde(default)]
    pub compensation_phase: f64,
    pub n_nominal: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn noiseless(n_nominal: u64, seed: u64) -> Self {
        ExperimentConfig {
            ppbs: PpbsParams::ideal(),
            depolarizing_p: 0.0,
            dephasing_p: 0.0,
            compensation_phase: 0.0,
            n_nominal,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppbs.validate()?;
        for (name, v) in [("depolarizing_p", self.depolarizing_p), ("dephasing_p", self.dephasing_p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !self.compensation_phase.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.n_nominal == 0 {
            return Err(Error::InvalidParameter("n_nominal must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Target gate of the experiment: the symmetric matchgate `G(H, H)`.
pub fn ideal_gate() -> Unitary4<f64> {
    Matchgate::new(hadamard(), hadamard())
        .expect("G(H,H) is a matchgate")
        .to_unitary()
}

pub fn ideal_process() -> ProcessMatrix {
    unitary_to_chi(&ideal_gate()).expect("ideal gate is unitary")
}

/// Local layers around the controlled-Z core of the ideal gate.
fn gate_locals() -> (Mat4<f64>, Mat4<f64>) {
    let m = Matchgate::new(hadamard(), hadamard()).expect("G(H,H) is a matchgate");
    let d = decompose_symmetric(&m).expect("G(H,H) is symmetric");
    (kron(&d.pre_top, &d.pre_bottom), kron(&d.post_top, &d.post_bottom))
}

/// Model process of the whole gate: local layers, bit flips around the PPBS
/// (which phases `|HH⟩`), compensation phase error, then depolarizing and
/// dephasing noise before the output layer.
pub fn experiment_process(cfg: &ExperimentConfig) -> Result<ProcessMatrix> {
    cfg.validate()?;
    let (pre, post) = gate_locals();
    let xx = kron(&pauli_x::<f64>(), &pauli_x());
    let comp = kron(&rz(cfg.compensation_phase), &Mat2::identity());
    let kraus: Vec<Mat4<f64>> = ppbs_kraus(&cfg.ppbs)?
        .iter()
        .map(|k| comp * xx * *k * xx * pre)
        .collect();
    let mut chi = kraus_to_chi(&kraus)?;
    chi = compose(&chi, &noise_channel(&NoiseChannel::Depolarizing(cfg.depolarizing_p))?)?;
    chi = compose(&chi, &noise_channel(&NoiseChannel::Dephasing(cfg.dephasing_p))?)?;
    Ok(dress(&chi, &Mat4::identity(), &post))
}

/// Figures of merit of a process relative to the ideal gate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Metrics {
    pub raw_fidelity: f64,
    /// Fidelity maximized over all unitaries.
    pub f_max: f64,
    pub purity: f64,
}

/// Fidelity maximized over `U(4)`, seeded from the ideal gate.
pub fn max_unitary_fidelity(chi: &ProcessMatrix) -> (Unitary4<f64>, f64) {
    refine_unitary(&FidelityTarget::new(chi), ideal_gate(), 5000)
}

pub fn metrics(chi: &ProcessMatrix) -> Metrics {
    Metrics {
        raw_fidelity: process_fidelity(chi, &ideal_process()).value,
        f_max: max_unitary_fidelity(chi).1,
        purity: process_purity(chi),
    }
}

/// Value with a bootstrap standard deviation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std: f64,
}

/// Settings of the analysis stages.
#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    pub grid_points: usize,
    pub bootstrap_resamples: usize,
    pub orbit: OrbitOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            grid_points: GridPreset::Desk.target_count(),
            bootstrap_resamples: 50,
            orbit: OrbitOptions::default(),
        }
    }
}

/// Summary report of one synthetic experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub raw_fidelity: Estimate,
    pub purity: Estimate,
    pub f_max: f64,
    pub argmax_point: WeylPoint<f64>,
    pub grid_argmax_point: WeylPoint<f64>,
    pub grid_f_max: f64,
    pub delta_nl: f64,
    #[serde(rename = "volume_fraction_0.9")]
    pub volume_fraction_0_9: f64,
    pub grid_size: usize,
    pub grid_spacing: f64,
    pub dataset_path: Option<String>,
    pub map_path: Option<String>,
}

/// Report plus the artifacts it was computed from.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub dataset: TomographyDataset,
    pub reconstructed: ProcessMatrix,
    pub map: FidelityMap,
}

/// Model process → Poisson counts → MLE → bootstrap → nonlocal map.
pub fn synthesize_experiment(cfg: &ExperimentConfig, opts: &PipelineOptions) -> Result<ExperimentOutput> {
    let chi = experiment_process(cfg)?;
    let dataset = simulate_counts(&chi, cfg.n_nominal, cfg.seed)?;
    let reconstructed = mle_reconstruct(&dataset)?;
    let ideal = ideal_process();
    let boot = bootstrap_errors_multi(&dataset, opts.bootstrap_resamples, cfg.seed ^ 0xB007, |p| {
        vec![process_fidelity(p, &ideal).value, process_purity(p)]
    })?;
    let grid = build_chamber_grid(opts.grid_points)?;
    let orbit = OrbitOptions {
        seed: cfg.seed,
        ..opts.orbit
    };
    let map = fidelity_map(&reconstructed, &grid, "G_HH", &orbit);
    let target_point = kak_coordinates(&ideal_gate())?;
    let max = locate_maximum(&reconstructed, &map, &target_point)?;
    let report = ExperimentReport {
        config: *cfg,
        raw_fidelity: Estimate {
            value: process_fidelity(&reconstructed, &ideal).value,
            std: boot[0].std,
        },
        purity: Estimate {
            value: process_purity(&reconstructed),
            std: boot[1].std,
        },
        f_max: max.f_max,
        argmax_point: max.point,
        grid_argmax_point: max.grid_point,
        grid_f_max: max.grid_f_max,
        delta_nl: max.delta_nl,
        volume_fraction_0_9: volume_fraction(&map, 0.9),
        grid_size: grid.points.len(),
        grid_spacing: grid.spacing,
        dataset_path: None,
        map_path: None,
    };
    Ok(ExperimentOutput {
        report,
        dataset,
        reconstructed,
        map,
    })
}

/// Targets for calibration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub raw_fidelity: f64,
    pub f_max: f64,
    pub purity: f64,
}

/// Search box; each range is inclusive.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CalibrationBounds {
    pub depolarizing_p: (f64, f64),
    pub visibility: (f64, f64),
    pub eta: (f64, f64),
    pub compensation_phase: (f64, f64),
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        CalibrationBounds {
            depolarizing_p: (0.0, 0.3),
            visibility: (0.8, 1.0),
            eta: (0.3, 0.37),
            compensation_phase: (0.0, 0.6),
        }
    }
}

/// Calibrated configuration with per-target residuals of the model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub config: ExperimentConfig,
    pub model: Metrics,
    pub residuals: [f64; 3],
}

fn residuals(m: &Metrics, t: &CalibrationTargets) -> [f64; 3] {
    [m.raw_fidelity - t.raw_fidelity, m.f_max - t.f_max, m.purity - t.purity]
}

fn lattice(range: (f64, f64), steps: usize) -> Vec<f64> {
    if steps <= 1 || range.0 == range.1 {
        return vec![range.1];
    }
    (0..steps)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (steps - 1) as f64)
        .collect()
}

/// Fits (depolarizing p, visibility, η, compensation phase) so the model
/// process matches the targets. The beamsplitter of `base` is tried first
/// with only p and the phase free; visibility and η are opened up when that
/// leaves a residual above a tenth of `tolerance`. Each stage runs a coarse
/// lattice followed by a bounded simplex refinement. Fails when any residual
/// exceeds `tolerance`.
pub fn calibrate_to_targets(
    targets: &CalibrationTargets,
    bounds: &CalibrationBounds,
    base: &ExperimentConfig,
    tolerance: f64,
) -> Result<Calibration> {
    for v in [targets.raw_fidelity, targets.f_max, targets.purity] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("target {v} outside [0, 1]")));
        }
    }
    base.validate()?;
    let within = |x: f64, (lo, hi): (f64, f64)| lo <= x && x <= hi;
    if within(base.ppbs.visibility, bounds.visibility) && within(base.ppbs.eta, bounds.eta) {
        let fixed = CalibrationBounds {
            visibility: (base.ppbs.visibility, base.ppbs.visibility),
            eta: (base.ppbs.eta, base.ppbs.eta),
            ..*bounds
        };
        let first = calibrate_stage(targets, &fixed, base)?;
        if first.residuals.iter().all(|r| r.abs() <= 0.1 * tolerance) {
            return Ok(first);
        }
    }
    let c = calibrate_stage(targets, bounds, base)?;
    if c.residuals.iter().any(|r| r.abs() > tolerance) {
        return Err(Error::Calibration {
            residuals: c.residuals,
            tolerance,
        });
    }
    Ok(c)
}

fn calibrate_stage(targets: &CalibrationTargets, bounds: &CalibrationBounds, base: &ExperimentConfig) -> Result<Calibration> {
    let ranges = [bounds.depolarizing_p, bounds.visibility, bounds.eta, bounds.compensation_phase];
    for (lo, hi) in ranges {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!("empty bound ({lo}, {hi})")));
        }
    }
    let make = |x: &[f64]| -> ExperimentConfig {
        let c: Vec<f64> = x.iter().zip(&ranges).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect();
        ExperimentConfig {
            ppbs: PpbsParams {
                eta: c[2],
                kappa: base.ppbs.kappa,
                visibility: c[1],
            },
            depolarizing_p: c[0],
            compensation_phase: c[3],
            ..*base
        }
    };
    let objective = |x: &[f64]| -> f64 {
        let cfg = make(x);
        let outside: f64 = x
            .iter()
            .zip(&ranges)
            .map(|(v, (lo, hi))| (lo - v).max(0.0) + (v - hi).max(0.0))
            .sum();
        match experiment_process(&cfg) {
            Ok(chi) => residuals(&metrics(&chi), targets).iter().map(|r| r * r).sum::<f64>() + outside * outside,
            Err(_) => f64::INFINITY,
        }
    };

    let mut best = (f64::INFINITY, vec![0.0; 4]);
    for p in lattice(bounds.depolarizing_p, 7) {
        for v in lattice(bounds.visibility, 3) {
            for eta in lattice(bounds.eta, 3).into_iter().chain([1.0 / 3.0]) {
                if eta < bounds.eta.0 || eta > bounds.eta.1 {
                    continue;
                }
                for phi in lattice(bounds.compensation_phase, 4) {
                    let x = vec![p, v, eta, phi];
                    let f = objective(&x);
                    if f < best.0 {
                        best = (f, x);
                    }
                }
            }
        }
    }
    let steps: Vec<f64> = ranges.iter().map(|(lo, hi)| ((hi - lo) * 0.15).max(1e-9)).collect();
    let mut x = best.1;
    for _ in 0..3 {
        let step = steps.iter().cloned().fold(0.0, f64::max);
        let scaled = |y: &[f64]| objective(&y.iter().zip(&steps).map(|(a, s)| a * s / step).collect::<Vec<_>>());
        let y0: Vec<f64> = x.iter().zip(&steps).map(|(a, s)| a * step / s).collect();
        let m = nelder_mead(
            scaled,
            &y0,
            step,
            NelderMeadOptions {
                max_evals: 600,
                ftol: 1e-14,
                xtol: 1e-9,
            },
        );
        x = m.x.iter().zip(&steps).map(|(a, s)| a * s / step).collect();
    }
    let config = make(&x);
    let model = metrics(&experiment_process(&config)?);
    Ok(Calibration {
        config,
        model,
        residuals: residuals(&model, targets),
    })
}
