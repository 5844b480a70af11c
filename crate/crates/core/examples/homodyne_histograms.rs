// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Integrated single shots for both qubit states, their double-Gaussian fits
//! and the resulting SNR against the model value.

use readout_eta::dynamics::*;
use readout_eta::estimation::{anderson_darling, histogram, snr_from_shots, SnrError};
use readout_eta::homodyne::{simulate_shots, ShotConfig};

fn main() -> readout_eta::Result<()> {
    let p = ReadoutParams::reference(0.165);
    // well separated; near SNR ≈ 1 a small preparation-error spur is not identifiable
    let eps = 0.8;
    let env = deplete(&p, &PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?.scaled(eps))?;
    let traj = trajectory(&p, &env)?;
    let w = optimal_weights(&traj, &p)?;

    let cfg = ShotConfig {
        prep_error: 0.02,
        ..ShotConfig::new(1 << 14, 7)
    };
    let v = |state| -> readout_eta::Result<Vec<f64>> {
        Ok(simulate_shots(&traj, &p, state, &[&w], &cfg)?[0].iter().map(|s| s.v_int).collect())
    };
    let (g, e) = (v(QubitState::Ground)?, v(QubitState::Excited)?);

    let all: Vec<f64> = g.iter().chain(&e).copied().collect();
    let h = histogram(&all, 60)?;
    let top = h.counts.iter().copied().fold(0.0, f64::max);
    for (c, n) in h.centers.iter().zip(&h.counts) {
        println!("{c:>9.4} {}", "#".repeat((60.0 * n / top).round() as usize));
    }

    let (pt, fits) = snr_from_shots(&g, &e, eps, SnrError::Delta)?;
    for (name, f) in ["ground", "excited"].iter().zip(&fits) {
        println!("{name:<8} mu = {:+.4}  sigma = {:.4}  main fraction = {:.3}", f.mu_main, f.sigma_main, f.frac_main);
    }
    println!("SNR = {:.3} +/- {:.3}, model {:.3}", pt.snr, pt.snr_err, analytic_snr(&traj, &p, &w)?);

    let clean = simulate_shots(&traj, &p, QubitState::Ground, &[&w], &ShotConfig::new(1 << 14, 8))?;
    let vals: Vec<f64> = clean[0].iter().map(|s| s.v_int).collect();
    println!("Anderson-Darling p (no preparation error) = {:.3}", anderson_darling(&vals)?.p_value);
    Ok(())
}
