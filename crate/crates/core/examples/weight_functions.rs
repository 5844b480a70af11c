// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Matched-filter weights from the model and from averaged noisy transients,
//! and the SNR each achieves next to a phase-optimized box-car.

use readout_eta::dynamics::*;
use readout_eta::homodyne::{averaged_transients, ShotConfig};

fn main() -> readout_eta::Result<()> {
    let p = ReadoutParams::reference(0.165);
    let env = deplete(&p, &PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?.scaled(0.3))?;
    let traj = trajectory(&p, &env)?;

    let model = optimal_weights(&traj, &p)?;
    println!("model weights:     SNR = {:.4}", analytic_snr(&traj, &p, &model)?);
    for shots in [256, 4096, 1 << 15] {
        let cfg = ShotConfig::new(shots, 5);
        let t0 = averaged_transients(&traj, &p, QubitState::Ground, &cfg)?;
        let t1 = averaged_transients(&traj, &p, QubitState::Excited, &cfg)?;
        let w = weights_from_transients(&t0.mean_i, &t0.mean_q, &t1.mean_i, &t1.mean_q)?;
        println!("{shots:>6} averages:   SNR = {:.4}", analytic_snr(&traj, &p, &w)?);
    }
    let (phi, snr) = optimize_phi_w(&traj, &p, 3600)?;
    println!("box-car, phi_w = {phi:.3}: SNR = {snr:.4}");
    Ok(())
}
