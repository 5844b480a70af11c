// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! For a depleted pulse the matched-filter SNR and the measurement-induced
//! dephasing satisfy SNR²/(4Γ_m) = η, whatever the detuning or envelope.

use std::f64::consts::TAU;

use readout_eta::dynamics::*;

fn main() -> readout_eta::Result<()> {
    let envelopes = [
        ("square", PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?),
        ("two-step", PulseEnvelope::two_step(150e-9, 450e-9, 0.6, [200e-9, 200e-9], 100e-9, 1e-9)?),
        ("skyline", PulseEnvelope::skyline(100e-9, 1e-9)?),
    ];
    println!("{:<9} {:>6} {:>9} {:>9} {:>9} {:>12}", "envelope", "eta", "delta/MHz", "SNR", "Gamma_m", "SNR^2/4G");
    for (name, env) in &envelopes {
        for eta in [0.05, 0.165, 1.0] {
            for d in [-1.4, 0.0, 1.4] {
                let p = ReadoutParams::reference(eta).with_delta(TAU * d * 1e6);
                let traj = trajectory(&p, &deplete(&p, &env.scaled(0.2))?)?;
                let snr = analytic_snr(&traj, &p, &optimal_weights(&traj, &p)?)?;
                let g = dephasing_exponent(&traj, p.chi)?;
                println!("{name:<9} {eta:>6.3} {d:>9.1} {snr:>9.4} {g:>9.4} {:>12.9}", snr * snr / (4.0 * g));
            }
        }
    }
    Ok(())
}
