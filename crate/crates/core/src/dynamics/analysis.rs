// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form quantities derived from a pair of field trajectories.

use num_complex::Complex64;

use super::field::FieldTrajectory;
use super::quadrature::{bilinear_exact, bilinear_trapezoid, trapezoid};
use crate::error::Result;

/// `∫ α₁·conj(α₀) dt` over the window.
pub fn cross_overlap(traj: &FieldTrajectory) -> Result<Complex64> {
    traj.check()?;
    let dt = traj.sample_period();
    Ok(match traj.rates {
        Some([l0, l1]) => bilinear_exact(&traj.alpha1, l1, &traj.alpha0, l0, dt),
        None => bilinear_trapezoid(&traj.alpha1, &traj.alpha0, dt),
    })
}

/// `∫ |α₁ − α₀|² dt` over the window.
pub fn difference_energy(traj: &FieldTrajectory) -> Result<f64> {
    traj.check()?;
    let dt = traj.sample_period();
    Ok(match traj.rates {
        Some([l0, l1]) => {
            let e1 = bilinear_exact(&traj.alpha1, l1, &traj.alpha1, l1, dt).re;
            let e0 = bilinear_exact(&traj.alpha0, l0, &traj.alpha0, l0, dt).re;
            let x = bilinear_exact(&traj.alpha1, l1, &traj.alpha0, l0, dt).re;
            (e1 + e0 - 2.0 * x).max(0.0)
        }
        None => {
            let d: Vec<f64> = traj.difference().iter().map(|z| z.norm_sqr()).collect();
            trapezoid(&d, dt)
        }
    })
}

/// Measurement-induced dephasing exponent `Γ_m = 2χ ∫ Im(α₁ α₀*) dt`.
///
/// The coherence of a superposition shrinks by `e^{−Γ_m}`. With the `±χ`
/// convention of the field equation this is non-negative whenever the fields
/// start and end in vacuum.
pub fn dephasing_exponent(traj: &FieldTrajectory, chi: f64) -> Result<f64> {
    Ok(2.0 * chi * cross_overlap(traj)?.im)
}

/// Deterministic qubit phase `2χ ∫ Re(α₀ α₁*) dt` picked up during the pulse.
pub fn measurement_phase(traj: &FieldTrajectory, chi: f64) -> Result<f64> {
    Ok(2.0 * chi * cross_overlap(traj)?.re)
}
