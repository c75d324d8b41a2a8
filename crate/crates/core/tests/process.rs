// SPDX-License-Identifier: Apache-2.0

use mgforge::gates::{cz, pauli_z, phase_distance};
use mgforge::linalg::{kron, Mat2, Mat4};
use mgforge::matchgate::named_gate4;
use mgforge::process::{
    apply_process, apply_process_unnormalized, compose, dress, identity_process, kraus_to_chi, noise_channel,
    process_fidelity, process_purity, pure_density, unitary_to_chi, NoiseChannel, ProcessMatrix, ProcessMatrixJson,
};
use mgforge::random::{haar_unitary, random_density, random_state, stream_rng};
use mgforge::weyl::concurrence;
use num_complex::Complex;
use proptest::prelude::*;

fn c(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

#[test]
fn unitary_chi_examples() {
    let id = identity_process();
    for m in 0..16 {
        for n in 0..16 {
            let expect = if m == 0 && n == 0 { 1.0 } else { 0.0 };
            assert!((id.chi().0[m][n] - c(expect)).norm() < 1e-15);
        }
    }
    let g = unitary_to_chi(&named_gate4::<f64>("G_HH").unwrap()).unwrap();
    assert!((process_purity(&g) - 1.0).abs() < 1e-12);

    let mut rng = stream_rng(40, 0);
    let u: Mat4<f64> = haar_unitary(&mut rng);
    let chi = unitary_to_chi(&u).unwrap();
    for _ in 0..100 {
        let rho = random_density(&mut rng);
        let out = apply_process(&chi, &rho).unwrap();
        assert!((out.rho - u * rho * u.adjoint()).frobenius_norm() < 1e-9);
    }
}

#[test]
fn apply_examples() {
    let mut rng = stream_rng(41, 0);
    let rho = random_density(&mut rng);
    assert!((apply_process(&identity_process(), &rho).unwrap().rho - rho).frobenius_norm() < 1e-12);

    let chi_cz = unitary_to_chi(&cz()).unwrap();
    let mut e11 = [c(0.0); 4];
    e11[3] = c(1.0);
    let out = apply_process(&chi_cz, &pure_density(&e11)).unwrap();
    assert!((out.rho - pure_density(&e11)).frobenius_norm() < 1e-12);

    let dd = [c(0.5); 4];
    let out = apply_process(&chi_cz, &pure_density(&dd)).unwrap();
    let psi = cz::<f64>().apply(&dd);
    assert!((out.rho - pure_density(&psi)).frobenius_norm() < 1e-12);
    assert!((concurrence(&psi) - 1.0).abs() < 1e-12);
    assert!(((out.rho * out.rho).trace().re - 1.0).abs() < 1e-12);
}

#[test]
fn filtered_input_is_an_error() {
    let mut p0 = Mat4::zeros();
    p0.0[0][0] = c(1.0);
    let proj = kraus_to_chi(&[p0]).unwrap();
    let mut e11 = [c(0.0); 4];
    e11[3] = c(1.0);
    assert!(apply_process(&proj, &pure_density(&e11)).is_err());
}

#[test]
fn fidelity_examples() {
    let mut rng = stream_rng(42, 0);
    let u: Mat4<f64> = haar_unitary(&mut rng);
    let chi_u = unitary_to_chi(&u).unwrap();
    assert!((process_fidelity(&chi_u, &chi_u).value - 1.0).abs() < 1e-12);
    let chi_cz = unitary_to_chi(&cz()).unwrap();
    assert!((process_fidelity(&identity_process(), &chi_cz).value - 0.25).abs() < 1e-12);
    let chi_g = unitary_to_chi(&named_gate4::<f64>("G_HH").unwrap()).unwrap();
    assert!((process_fidelity(&chi_g, &chi_cz).value - 0.125).abs() < 1e-12);

    let a = noise_channel(&NoiseChannel::Depolarizing(0.3)).unwrap();
    let b = noise_channel(&NoiseChannel::Dephasing(0.4)).unwrap();
    let f = process_fidelity(&a, &b);
    assert!(f.general_form);
    assert!(f.value > 0.0 && f.value <= 1.0);
    assert!((process_fidelity(&a, &a).value - 1.0).abs() < 1e-8);
}

#[test]
fn purity_and_noise() {
    let full = noise_channel(&NoiseChannel::Depolarizing(1.0)).unwrap();
    assert!((process_purity(&full) - 1.0 / 16.0).abs() < 1e-15);
    for m in 0..16 {
        assert!((full.chi().0[m][m] - c(1.0 / 16.0)).norm() < 1e-15);
    }
    let none = noise_channel(&NoiseChannel::Depolarizing(0.0)).unwrap();
    assert!((process_fidelity(&none, &identity_process()).value - 1.0).abs() < 1e-15);

    let chi_cz = unitary_to_chi(&cz()).unwrap();
    let mixed = compose(&chi_cz, &noise_channel(&NoiseChannel::Depolarizing(0.1)).unwrap()).unwrap();
    // 0.9 chi_CZ + 0.1 I/16, Tr = 0.81 + 2·0.9·0.1/16 + 0.01/16
    let expect = 0.81 + 0.18 / 16.0 + 0.01 / 16.0;
    assert!((process_purity(&mixed) - expect).abs() < 1e-12);

    let zi = kron(&pauli_z::<f64>(), &Mat2::identity());
    let mix = noise_channel(&NoiseChannel::UnitaryMixture(vec![(0.5, Mat4::identity()), (0.5, zi)])).unwrap();
    assert!((process_purity(&mix) - 0.5).abs() < 1e-12);
    assert!(noise_channel(&NoiseChannel::UnitaryMixture(vec![(0.7, Mat4::identity())])).is_err());
    assert!(noise_channel(&NoiseChannel::Depolarizing(1.5)).is_err());
}

#[test]
fn completeness_and_trace_norm() {
    let mut rng = stream_rng(43, 0);
    let u: Mat4<f64> = haar_unitary(&mut rng);
    let v: Mat4<f64> = haar_unitary(&mut rng);
    let ks = [u.scale_re(0.6f64.sqrt()), v.scale_re(0.4f64.sqrt())];
    let chi = kraus_to_chi(&ks).unwrap();
    assert!(chi.completeness_defect() < 1e-8);
    assert!(chi.min_eigenvalue() > -1e-12);

    let half = kraus_to_chi(&[Mat4::<f64>::identity().scale_re(0.5)]).unwrap();
    assert!((half.trace_norm() - 0.25).abs() < 1e-15);
    let rho = random_density(&mut rng);
    let out = apply_process(&half, &rho).unwrap();
    assert!((out.success_probability - 0.25).abs() < 1e-12);
}

#[test]
fn dressing_matches_unitary_product() {
    let mut rng = stream_rng(44, 0);
    let u: Mat4<f64> = haar_unitary(&mut rng);
    let a: Mat4<f64> = haar_unitary(&mut rng);
    let b: Mat4<f64> = haar_unitary(&mut rng);
    let dressed = dress(&unitary_to_chi(&u).unwrap(), &a, &b);
    let direct = unitary_to_chi(&(b * u * a)).unwrap();
    assert!((*dressed.chi() - *direct.chi()).frobenius_norm() < 1e-12);
}

#[test]
fn chi_json_roundtrip() {
    let chi = compose(
        &unitary_to_chi(&cz()).unwrap(),
        &noise_channel(&NoiseChannel::Dephasing(0.2)).unwrap(),
    )
    .unwrap();
    let text = serde_json::to_string(&ProcessMatrixJson::from_process(&chi)).unwrap();
    let back: ProcessMatrix = serde_json::from_str::<ProcessMatrixJson>(&text).unwrap().to_process().unwrap();
    assert_eq!(back.chi(), chi.chi());
    assert_eq!(back.trace_norm(), chi.trace_norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_fidelity_is_trace_overlap(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let u: Mat4<f64> = haar_unitary(&mut rng);
        let v: Mat4<f64> = haar_unitary(&mut rng);
        let f = process_fidelity(&unitary_to_chi(&u).unwrap(), &unitary_to_chi(&v).unwrap()).value;
        prop_assert!((f - u.adjoint().trace_mul(&v).norm_sqr() / 16.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_invariant_under_joint_dressing(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 1);
        let u: Mat4<f64> = haar_unitary(&mut rng);
        let a = kron(&haar_unitary::<f64, _, 2>(&mut rng), &haar_unitary(&mut rng));
        let b = kron(&haar_unitary::<f64, _, 2>(&mut rng), &haar_unitary(&mut rng));
        let x = compose(&unitary_to_chi(&cz()).unwrap(), &noise_channel(&NoiseChannel::Depolarizing(0.2)).unwrap()).unwrap();
        let f0 = process_fidelity(&x, &unitary_to_chi(&u).unwrap()).value;
        let f1 = process_fidelity(&dress(&x, &a, &b), &unitary_to_chi(&(b * u * a)).unwrap()).value;
        prop_assert!((f0 - f1).abs() < 1e-10);
    }

    #[test]
    fn outputs_are_positive(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 2);
        let ks: Vec<Mat4<f64>> = (0..3).map(|_| haar_unitary::<f64, _, 4>(&mut rng).scale_re(1.0 / 3f64.sqrt())).collect();
        let chi = kraus_to_chi(&ks).unwrap();
        let psi: [Complex<f64>; 4] = random_state(&mut rng);
        let out = apply_process_unnormalized(&chi, &pure_density(&psi));
        prop_assert!(out.hermitian_eigen().values[0] > -1e-12);
        prop_assert!(phase_distance(&out, &out) < 1e-12);
    }
}
