// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use num_complex::Complex64;
use readout_eta::dynamics::{PulseEnvelope, QubitState, ReadoutParams};

pub const NS: f64 = 1e-9;

/// Field on a grid `m` times finer than the envelope, propagated in closed
/// form with the drive held over each envelope interval.
pub fn closed_form_field(p: &ReadoutParams, env: &PulseEnvelope, state: QubitState, m: usize) -> Vec<Complex64> {
    let sign = match state {
        QubitState::Ground => 1.0,
        QubitState::Excited => -1.0,
    };
    let lambda = Complex64::new(p.kappa / 2.0, p.delta + sign * p.chi);
    let h = env.sample_period / m as f64;
    let step = (-lambda * h).exp();
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut out = vec![alpha];
    for u in env.held_drive() {
        let ss = Complex64::new(0.0, -1.0) * u * p.drive_scale / lambda;
        for _ in 0..m {
            alpha = ss + (alpha - ss) * step;
            out.push(alpha);
        }
    }
    out
}

/// Composite Simpson on a uniform grid with an even number of intervals.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    assert!(n % 2 == 0);
    let mut s = f[0] + f[n];
    for (k, v) in f.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// `(Γ_m, ∫|α₁ − α₀|² dt)` by fine Simpson quadrature of the closed-form fields.
pub fn oracle_integrals(p: &ReadoutParams, env: &PulseEnvelope) -> (f64, f64) {
    let m = 20;
    let a0 = closed_form_field(p, env, QubitState::Ground, m);
    let a1 = closed_form_field(p, env, QubitState::Excited, m);
    let h = env.sample_period / m as f64;
    let cross: Vec<f64> = a0.iter().zip(&a1).map(|(x, y)| (y * x.conj()).im).collect();
    let diff: Vec<f64> = a0.iter().zip(&a1).map(|(x, y)| (y - x).norm_sqr()).collect();
    (2.0 * p.chi * simpson(&cross, h), simpson(&diff, h))
}

pub fn square(buffer_ns: f64) -> PulseEnvelope {
    PulseEnvelope::square_ramp(600.0 * NS, [200.0 * NS, 200.0 * NS], buffer_ns * NS, NS).unwrap()
}

pub fn two_step() -> PulseEnvelope {
    PulseEnvelope::two_step(150.0 * NS, 450.0 * NS, 0.6, [200.0 * NS, 200.0 * NS], 100.0 * NS, NS).unwrap()
}

pub fn skyline() -> PulseEnvelope {
    PulseEnvelope::skyline(100.0 * NS, NS).unwrap()
}

pub fn family(k: usize) -> PulseEnvelope {
    match k % 3 {
        0 => square(100.0),
        1 => two_step(),
        _ => skyline(),
    }
}
