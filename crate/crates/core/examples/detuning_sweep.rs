// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Efficiency read off with matched and with box-car weights across readout
//! detuning. The matched filter recovers η everywhere; the box-car filter
//! loses SNR as the pointer states rotate.

use std::f64::consts::TAU;

use readout_eta::dynamics::*;

fn main() -> readout_eta::Result<()> {
    let base = PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?.scaled(0.3);
    println!("{:>9} {:>10} {:>10} {:>8}", "delta/MHz", "optimal", "square", "phi_w");
    for k in 0..15 {
        let d = -1.4 + 0.2 * k as f64;
        let p = ReadoutParams::reference(0.165).with_delta(TAU * d * 1e6);
        let traj = trajectory(&p, &deplete(&p, &base)?)?;
        let g = dephasing_exponent(&traj, p.chi)?;
        let opt = analytic_snr(&traj, &p, &optimal_weights(&traj, &p)?)?;
        let (phi, sq) = optimize_phi_w(&traj, &p, 3600)?;
        println!("{d:>9.1} {:>10.4} {:>10.4} {phi:>8.3}", opt * opt / (4.0 * g), sq * sq / (4.0 * g));
    }
    Ok(())
}
