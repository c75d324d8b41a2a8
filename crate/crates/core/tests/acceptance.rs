// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always shown; exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use mgforge::compiler::{decompose_general, decompose_symmetric, simulate_circuit};
use mgforge::gates::{cnot, cz, identity2, pauli_x, phase_distance, swap, t_gate, tensor};
use mgforge::linalg::{kron, Mat2, Mat4};
use mgforge::matchgate::{named_gate4, Matchgate};
use mgforge::nonlocal_map::{
    build_chamber_grid, fidelity_map, local_orbit_fidelity, volume_fraction, FidelityMap, GridPreset, OrbitOptions,
};
use mgforge::optics::{
    calibrate_to_targets, ppbs_postselected_operator, singular_value_ratio, success_probabilities,
    synthesize_experiment, CalibrationBounds, CalibrationTargets, ExperimentConfig, PipelineOptions, PpbsParams,
};
use mgforge::process::{compose, noise_channel, process_fidelity, unitary_to_chi, NoiseChannel, ProcessMatrix};
use mgforge::random::{haar_unitary, random_matchgate, random_symmetric_matchgate, stream_rng};
use mgforge::tomography::{bootstrap_errors, expected_counts, mle_reconstruct, simulate_counts};
use mgforge::weyl::{
    canonical_unitary, canonicalize, is_perfect_entangler, is_perfect_entangler_fast, kak_coordinates, WeylPoint,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn cz_point() -> WeylPoint<f64> {
    WeylPoint::new(FRAC_PI_2, 0.0, 0.0)
}

fn chamber_point<R: Rng>(rng: &mut R) -> WeylPoint<f64> {
    loop {
        let p = WeylPoint::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..FRAC_PI_2), rng.gen_range(0.0..FRAC_PI_2));
        if p.is_canonical(0.0) {
            return p;
        }
    }
}

fn c1_exact_identities() -> Outcome {
    let start = Instant::now();
    let xx = tensor(&pauli_x::<f64>(), &pauli_x()).unwrap();
    let tt = tensor(&t_gate::<f64>(), &identity2()).unwrap();
    let g_xx = named_gate4::<f64>("G_XX").unwrap();
    let g_tt = named_gate4::<f64>("G_TT").unwrap();
    let g_ix = Matchgate::new_relaxed(identity2::<f64>(), pauli_x()).unwrap().to_unitary();
    let g_hh = named_gate4::<f64>("G_HH").unwrap();
    let product = g_hh * swap() * g_xx * g_hh;
    let errs = [
        (g_xx - xx).frobenius_norm(),
        (g_tt - tt).frobenius_norm(),
        (g_ix - swap()).frobenius_norm(),
        (product - cz()).frobenius_norm(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let t = start.elapsed();
    check(worst <= 1e-12 && within(t, Duration::from_secs(1)), format!("max error {worst:.1e}, {t:.2?}"))
}

fn c2_decomposition_roundtrips() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(0xACCE_0002, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = random_matchgate::<f64, _>(&mut rng);
        let d = decompose_general(&m).map_err(|e| e.to_string())?;
        worst = worst.max(phase_distance(&simulate_circuit(&d.circuit).unwrap(), &m.to_unitary()));
    }
    for _ in 0..1000 {
        let m = random_symmetric_matchgate::<f64, _>(&mut rng);
        let d = decompose_symmetric(&m).map_err(|e| e.to_string())?;
        worst = worst.max(phase_distance(&d.to_unitary(), &m.to_unitary()));
    }
    let hh = Matchgate::new(mgforge::gates::hadamard::<f64>(), mgforge::gates::hadamard()).unwrap();
    let theta = decompose_symmetric(&hh).unwrap().theta;
    let t = start.elapsed();
    check(
        worst < 1e-9 && (theta - PI).abs() <= 1e-9 && within(t, Duration::from_secs(10)),
        format!("max phase distance {worst:.1e}, G_HH theta {theta:.12}, {t:.2?}"),
    )
}

fn c3_kak() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(0xACCE_0003, 0);
    let mut named = 0.0f64;
    for u in [cz::<f64>(), cnot(0, 1), named_gate4("G_HH").unwrap()] {
        named = named.max(kak_coordinates(&u).unwrap().distance(&cz_point()));
    }
    let mut local = 0.0f64;
    for _ in 0..500 {
        let a: Mat2<f64> = haar_unitary(&mut rng);
        let b: Mat2<f64> = haar_unitary(&mut rng);
        local = local.max(kak_coordinates(&kron(&a, &b)).unwrap().distance(&WeylPoint::origin()));
    }
    let mut dressing = 0.0f64;
    for _ in 0..500 {
        let u: Mat4<f64> = haar_unitary(&mut rng);
        let l1 = kron(&haar_unitary::<f64, _, 2>(&mut rng), &haar_unitary(&mut rng));
        let l2 = kron(&haar_unitary::<f64, _, 2>(&mut rng), &haar_unitary(&mut rng));
        let p = kak_coordinates(&u).unwrap();
        dressing = dressing.max(kak_coordinates(&(l1 * u * l2)).unwrap().distance(&p));
    }
    let mut roundtrip = 0.0f64;
    for _ in 0..1000 {
        let p = chamber_point(&mut rng);
        roundtrip = roundtrip.max(kak_coordinates(&canonical_unitary(&p)).unwrap().distance(&p));
    }
    let t = start.elapsed();
    check(
        named <= 1e-8 && local <= 1e-8 && dressing <= 1e-8 && roundtrip <= 1e-7 && within(t, Duration::from_secs(60)),
        format!("named {named:.1e}, u⊗v {local:.1e}, dressing {dressing:.1e}, roundtrip {roundtrip:.1e}, {t:.2?}"),
    )
}

fn c4_symmetric_line() -> Outcome {
    let mut rng = stream_rng(0xACCE_0004, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = random_symmetric_matchgate::<f64, _>(&mut rng);
        let theta = decompose_symmetric(&m).unwrap().theta;
        let p = kak_coordinates(&m.to_unitary()).unwrap();
        worst = worst.max(p.distance(&WeylPoint::new(theta.abs() / 2.0, 0.0, 0.0)));
    }
    check(worst <= 1e-7, format!("max deviation {worst:.1e}"))
}

fn c5_perfect_entanglers() -> Outcome {
    let grid = build_chamber_grid(1000).map_err(|e| e.to_string())?;
    let mut agree = 0usize;
    let mut pe_weight = 0.0;
    for (p, w) in grid.points.iter().zip(&grid.weights) {
        let oracle = is_perfect_entangler(p);
        agree += usize::from(oracle == is_perfect_entangler_fast(p));
        if oracle {
            pe_weight += w;
        }
    }
    let agreement = agree as f64 / grid.points.len() as f64;
    let fraction = pe_weight / grid.weights.iter().sum::<f64>();
    let n = 200;
    let res = PI / n as f64;
    let mut line_ok = true;
    for k in 0..=n {
        let g = PI * k as f64 / n as f64;
        if is_perfect_entangler(&canonicalize([g, 0.0, 0.0])) && (g - FRAC_PI_2).abs() > res {
            line_ok = false;
        }
    }
    line_ok &= is_perfect_entangler(&cz_point());
    check(
        agreement >= 0.99 && (fraction - 0.5).abs() <= 0.03 && line_ok,
        format!(
            "agreement {:.2}% on {} points, PE volume fraction {fraction:.4}, line [γ,0,0] only at π/2: {line_ok}",
            100.0 * agreement,
            grid.points.len()
        ),
    )
}

fn c6_self_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(0xACCE_0006, 0);
    let opts = OrbitOptions { seed: 6, ..OrbitOptions::default() };
    let mut worst = 1.0f64;
    for _ in 0..20 {
        let u: Mat4<f64> = haar_unitary(&mut rng);
        let p = kak_coordinates(&u).unwrap();
        let r = local_orbit_fidelity(&unitary_to_chi(&u).unwrap(), &p, &opts).unwrap();
        worst = worst.min(r.f_nl);
    }
    let at_origin = local_orbit_fidelity(&unitary_to_chi(&cz()).unwrap(), &WeylPoint::origin(), &opts)
        .unwrap()
        .f_nl;
    let t = start.elapsed();
    check(
        worst >= 0.9999 && (at_origin - 0.5).abs() <= 0.01 && within(t, Duration::from_secs(600)),
        format!("min self-fidelity {worst:.8}, f_nl(CZ, origin) {at_origin:.6}, {t:.2?}"),
    )
}

fn cz_map(preset: GridPreset) -> (FidelityMap, Duration) {
    let start = Instant::now();
    let grid = build_chamber_grid(preset.target_count()).unwrap();
    let map = fidelity_map(&unitary_to_chi(&cz()).unwrap(), &grid, "CZ", &OrbitOptions::default());
    (map, start.elapsed())
}

fn c7_volume_fraction(fine: &FidelityMap, t_fine: Duration, desk: &FidelityMap, t_desk: Duration) -> Outcome {
    let vp = volume_fraction(fine, 0.9);
    let vd = volume_fraction(desk, 0.9);
    check(
        (vp - 0.116).abs() <= 0.020 && (vd - 0.116).abs() <= 0.020 && within(t_desk, Duration::from_secs(1800)),
        format!(
            "fine preset {} points: {vp:.4} ({t_fine:.1?}); desk preset {} points: {vd:.4} ({t_desk:.1?})",
            fine.grid.points.len(),
            desk.grid.points.len()
        ),
    )
}

fn map_min(map: &FidelityMap) -> f64 {
    map.values.iter().map(|v| v.f_nl).fold(f64::INFINITY, f64::min)
}

fn c8_quarter_bound(maps: &[&FidelityMap]) -> Outcome {
    let mut rng = stream_rng(0xACCE_0008, 0);
    let u: Mat4<f64> = haar_unitary(&mut rng);
    let grid = build_chamber_grid(GridPreset::Desk.target_count()).unwrap();
    let random = fidelity_map(&unitary_to_chi(&u).unwrap(), &grid, "haar", &OrbitOptions::default());
    let mut lows: Vec<f64> = maps.iter().map(|m| map_min(m)).collect();
    lows.push(map_min(&random));
    let low = lows.iter().cloned().fold(f64::INFINITY, f64::min);
    check(low >= 0.25 - 1e-3, format!("min f_nl over {} unitary-process maps {low:.6}", lows.len()))
}

fn c9_tomography() -> Outcome {
    let start = Instant::now();
    let chi_cz = unitary_to_chi(&cz()).unwrap();
    let exact = process_fidelity(&mle_reconstruct(&expected_counts(&chi_cz, 100_000_000)).unwrap(), &chi_cz).value;
    let mut fids: Vec<f64> = (0..20)
        .map(|s| process_fidelity(&mle_reconstruct(&simulate_counts(&chi_cz, 10_000, s).unwrap()).unwrap(), &chi_cz).value)
        .collect();
    fids.sort_by(|a, b| a.total_cmp(b));
    let median = 0.5 * (fids[9] + fids[10]);
    let stat = |p: &ProcessMatrix| process_fidelity(p, &chi_cz).value;
    let ratio_for = |depolarizing: f64| {
        let mixed = compose(&chi_cz, &noise_channel(&NoiseChannel::Depolarizing(depolarizing)).unwrap()).unwrap();
        let small = bootstrap_errors(&simulate_counts(&mixed, 2_500, 90).unwrap(), 100, 91, stat).unwrap();
        let large = bootstrap_errors(&simulate_counts(&mixed, 10_000, 90).unwrap(), 100, 91, stat).unwrap();
        small.std / large.std
    };
    // Full-rank chi well inside the PSD cone, where the estimator is asymptotic.
    let ratio = ratio_for(0.8);
    // Informational: eigenvalues near zero, constraint still active at 10⁴ counts.
    let near_boundary = ratio_for(0.2);
    let t = start.elapsed();
    check(
        exact >= 0.9999 && median >= 0.99 && (ratio / 2.0 - 1.0).abs() <= 0.2 && within(t, Duration::from_secs(900)),
        format!(
            "exact-data fidelity {exact:.8}, Poisson median {median:.5}, bootstrap std ratio ×4 counts {ratio:.3} (ideal 2; \
             info: {near_boundary:.3} for 0.2-depolarized CZ), {t:.1?}"
        ),
    )
}

fn c10_experiment() -> Outcome {
    let start = Instant::now();
    let targets = CalibrationTargets { raw_fidelity: 0.923, f_max: 0.947, purity: 0.898 };
    let base = ExperimentConfig::noiseless(10_000, 1);
    let cal = calibrate_to_targets(&targets, &CalibrationBounds::default(), &base, 0.015).map_err(|e| e.to_string())?;
    let out = synthesize_experiment(&cal.config, &PipelineOptions::default()).map_err(|e| e.to_string())?;
    let r = &out.report;
    let nearest = out
        .map
        .grid
        .points
        .iter()
        .min_by(|a, b| a.distance(&cz_point()).total_cmp(&b.distance(&cz_point())))
        .unwrap();
    let at_nearest = r.grid_argmax_point.distance(nearest) < 1e-12;
    let t = start.elapsed();
    check(
        (r.raw_fidelity.value - 0.923).abs() <= 0.015
            && (r.f_max - 0.947).abs() <= 0.015
            && at_nearest
            && r.delta_nl < r.grid_spacing
            && (r.purity.value - 0.898).abs() <= 0.015
            && (r.volume_fraction_0_9 - 0.0485).abs() <= 0.015
            && within(t, Duration::from_secs(3600)),
        format!(
            "p={:.4} v={:.3} eta={:.4} phase={:.4}: raw {:.4}±{:.4}, f_max {:.4} (grid max at nearest [π/2,0,0]: {at_nearest}), \
             delta_nl {:.4} < {:.4}, purity {:.4}±{:.4}, volume fraction {:.4}, map min {:.4}, {t:.1?}",
            cal.config.depolarizing_p,
            cal.config.ppbs.visibility,
            cal.config.ppbs.eta,
            cal.config.compensation_phase,
            r.raw_fidelity.value,
            r.raw_fidelity.std,
            r.f_max,
            r.delta_nl,
            r.grid_spacing,
            r.purity.value,
            r.purity.std,
            r.volume_fraction_0_9,
            map_min(&out.map),
        ),
    )
}

fn c11_ppbs() -> Outcome {
    let k = ppbs_postselected_operator(&PpbsParams::ideal()).unwrap().scale_re(3.0);
    let diag = Mat4::from_diag([-1.0, 1.0, 1.0, 1.0].map(|x| num_complex::Complex::new(x, 0.0)));
    let exact = (k - diag).frobenius_norm();
    let ratios: Vec<f64> = [0.25, 0.40]
        .iter()
        .map(|&eta| singular_value_ratio(&PpbsParams { eta, kappa: eta, visibility: 1.0 }).unwrap())
        .collect();
    let success = success_probabilities(&PpbsParams::ideal()).unwrap();
    let worst = success.iter().map(|s| (s - 1.0 / 9.0).abs()).fold(0.0, f64::max);
    check(
        exact <= 1e-15 && ratios.iter().all(|r| (r - 1.0).abs() > 1e-3) && worst <= 1e-12,
        format!("3K − diag(−1,1,1,1) = {exact:.1e}, ratios {ratios:.3?}, success deviation {worst:.1e}"),
    )
}

fn main() {
    let (fine, t_fine) = cz_map(GridPreset::Fine);
    let (desk, t_desk) = cz_map(GridPreset::Desk);
    let results: Vec<(&str, Outcome)> = vec![
        ("1 exact identities", c1_exact_identities()),
        ("2 decomposition roundtrips", c2_decomposition_roundtrips()),
        ("3 KAK correctness", c3_kak()),
        ("4 symmetric line", c4_symmetric_line()),
        ("5 perfect entanglers", c5_perfect_entanglers()),
        ("6 nonlocal fidelity self-consistency", c6_self_consistency()),
        ("7 ideal CZ volume fraction", c7_volume_fraction(&fine, t_fine, &desk, t_desk)),
        ("8 lower bound of map values", c8_quarter_bound(&[&fine, &desk])),
        ("9 tomography", c9_tomography()),
        ("10 experiment reproduction", c10_experiment()),
        ("11 beamsplitter model", c11_ppbs()),
    ];
    let mut failed = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("criterion {name}: PASS ({msg})"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({msg})");
                failed.push(*name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}
