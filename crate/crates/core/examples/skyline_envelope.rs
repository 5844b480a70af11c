// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! A user-sampled envelope loaded from TOML, followed by two solved
//! depletion steps.

use std::path::Path;

use readout_eta::dynamics::*;

fn main() -> readout_eta::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/skyline_envelope.toml");
    let env = PulseEnvelope::load(&path)?;
    println!("{} segments, {:.0} ns in total", env.segments.len(), env.total_duration() * 1e9);

    let p = ReadoutParams::reference(0.165);
    let depleted = deplete(&p, &env.scaled(0.3))?;
    let dt = depleted.sample_period;
    for (k, u) in depleted.held_drive().iter().enumerate().step_by(10) {
        println!("{:>5.0} ns  {:+.4} {:+.4}i", k as f64 * dt * 1e9, u.re, u.im);
    }
    let traj = trajectory(&p, &depleted)?;
    let snr = analytic_snr(&traj, &p, &optimal_weights(&traj, &p)?)?;
    let g = dephasing_exponent(&traj, p.chi)?;
    println!("final |alpha0| = {:.2e}", final_field(&p, &depleted, QubitState::Ground)?.norm());
    println!("SNR^2/(4 Gamma_m) = {:.9}", snr * snr / (4.0 * g));
    Ok(())
}
