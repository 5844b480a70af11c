// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use std::f64::consts::TAU;

use common::*;
use proptest::prelude::*;
use readout_eta::dynamics::*;

fn max_rel(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    let peak = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / peak
}

#[test]
fn constant_segments_match_closed_form() {
    let p = ReadoutParams::reference(0.3).with_delta(TAU * 0.9e6);
    let env = deplete(&p, &square(100.0).scaled(0.25)).unwrap();
    for s in QubitState::BOTH {
        let lib = evolve_field(&p, &env, s).unwrap();
        let exact: Vec<_> = closed_form_field(&p, &env, s, 1);
        assert!(max_rel(&lib, &exact) < 1e-12);
    }
}

#[test]
fn sampled_segments_converge_to_held_drive_solution() {
    let p = ReadoutParams::reference(0.3).with_delta(TAU * -0.4e6);
    let env = skyline().scaled(0.3);
    for s in QubitState::BOTH {
        let rk4 = evolve_field(&p, &env, s).unwrap();
        let exact = closed_form_field(&p, &env, s, 1);
        // RK4 local error (|λ|dt)^5/120 with |λ|dt ≈ 4e-3
        assert!(max_rel(&rk4, &exact) < 1e-9, "{}", max_rel(&rk4, &exact));
    }
}

#[test]
fn reference_integrator_agrees_on_constant_segments() {
    let p = ReadoutParams::reference(0.3);
    let env = square(100.0).scaled(0.2);
    let a = evolve_field(&p, &env, QubitState::Excited).unwrap();
    let b = evolve_field_rk4(&p, &env, QubitState::Excited).unwrap();
    assert!(max_rel(&b, &a) < 1e-9);
}

#[test]
fn dephasing_and_energy_match_fine_quadrature() {
    for (k, d) in [(0, -1.4e6), (1, 0.3e6), (2, 1.1e6)] {
        let p = ReadoutParams::reference(0.2).with_delta(TAU * d);
        let env = deplete(&p, &family(k).scaled(0.2)).unwrap();
        let traj = trajectory(&p, &env).unwrap();
        let (gamma, energy) = oracle_integrals(&p, &env);
        let g = dephasing_exponent(&traj, p.chi).unwrap();
        let e = difference_energy(&traj).unwrap();
        assert!((g / gamma - 1.0).abs() < 1e-8, "{g} vs {gamma}");
        assert!((e / energy - 1.0).abs() < 1e-8, "{e} vs {energy}");
    }
}

#[test]
fn passive_ringdown_is_exponential() {
    let p = ReadoutParams::reference(0.5);
    let env = PulseEnvelope::passive(600.0 * NS, 1000.0 * NS, 0.0, NS).unwrap().scaled(0.2);
    let a = evolve_field(&p, &env, QubitState::Ground).unwrap();
    let lambda = p.relaxation_rate(QubitState::Ground);
    for k in [700, 1000, 1599] {
        let expect = a[600] * (-lambda * ((k - 600) as f64 * NS)).exp();
        assert!((a[k] - expect).norm() < 1e-12 * a[600].norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn efficiency_identity(eta in 0.01f64..=1.0, d_mhz in -1.4f64..1.4, eps in 0.05f64..0.4, k in 0usize..3) {
        let p = ReadoutParams::reference(eta).with_delta(TAU * d_mhz * 1e6);
        let env = deplete(&p, &family(k).scaled(eps)).unwrap();
        let traj = trajectory(&p, &env).unwrap();
        let w = optimal_weights(&traj, &p).unwrap();
        let snr = analytic_snr(&traj, &p, &w).unwrap();
        let g = dephasing_exponent(&traj, p.chi).unwrap();
        prop_assert!((snr * snr / (4.0 * g) / eta - 1.0).abs() < 1e-6);
    }

    #[test]
    fn field_is_linear_in_drive(s in 0.01f64..3.0, d_mhz in -2.0f64..2.0) {
        let p = ReadoutParams::reference(0.5).with_delta(TAU * d_mhz * 1e6);
        let env = skyline().with_depletion_amplitudes([num_complex::Complex64::new(0.1, 0.2), num_complex::Complex64::new(-0.3, 0.0)]).unwrap();
        let a = evolve_field(&p, &env, QubitState::Ground).unwrap();
        let b = evolve_field(&p, &env.scaled(s), QubitState::Ground).unwrap();
        let scaled: Vec<_> = a.iter().map(|z| z * s).collect();
        prop_assert!(max_rel(&b, &scaled) < 1e-12);
    }

    #[test]
    fn solved_depletion_returns_to_vacuum(d_mhz in -1.4f64..1.4, eps in 0.05f64..0.5, k in 0usize..3) {
        let p = ReadoutParams::reference(0.5).with_delta(TAU * d_mhz * 1e6);
        let env = deplete(&p, &family(k).scaled(eps)).unwrap();
        let traj = trajectory(&p, &env).unwrap();
        let peak = traj.peak_field();
        for s in QubitState::BOTH {
            prop_assert!(final_field(&p, &env, s).unwrap().norm() < 1e-9 * peak);
        }
    }

    #[test]
    fn dephasing_is_nonnegative(chi_khz in -200.0f64..200.0, d_mhz in -3.0f64..3.0, eps in 0.0f64..0.5) {
        let p = ReadoutParams { chi: TAU * chi_khz * 1e3, ..ReadoutParams::reference(0.5).with_delta(TAU * d_mhz * 1e6) };
        let traj = trajectory(&p, &square(100.0).scaled(eps)).unwrap();
        prop_assert!(dephasing_exponent(&traj, p.chi).unwrap() >= -1e-15);
    }

    #[test]
    fn matched_filter_beats_any_square_weight(phi in 0.0f64..TAU, d_mhz in -1.4f64..1.4) {
        let p = ReadoutParams::reference(0.5).with_delta(TAU * d_mhz * 1e6);
        let env = deplete(&p, &square(100.0).scaled(0.2)).unwrap();
        let traj = trajectory(&p, &env).unwrap();
        let best = analytic_snr(&traj, &p, &optimal_weights(&traj, &p).unwrap()).unwrap();
        let sq = analytic_snr(&traj, &p, &square_weights(phi, traj.len())).unwrap();
        prop_assert!(sq <= best * (1.0 + 1e-6));
    }
}
