// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Pointer-state trajectories for a square readout pulse with and without
//! active depletion.

use readout_eta::dynamics::*;

fn main() -> readout_eta::Result<()> {
    let p = ReadoutParams::reference(0.165);
    let bare = PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?.scaled(0.25);
    let depleted = deplete(&p, &bare)?;

    for (name, env) in [("no depletion", &bare), ("solved depletion", &depleted)] {
        let traj = trajectory(&p, env)?;
        println!("{name}: peak |alpha| = {:.3}", traj.peak_field());
        println!("  t_ns   |alpha0|  |alpha1|  |alpha1-alpha0|");
        for k in (0..traj.len()).step_by(100) {
            let (a0, a1) = (traj.alpha0[k], traj.alpha1[k]);
            println!("  {:>4.0}   {:.4}    {:.4}    {:.4}", traj.times[k] * 1e9, a0.norm(), a1.norm(), (a1 - a0).norm());
        }
        println!("  dephasing exponent Gamma_m = {:.4}\n", dephasing_exponent(&traj, p.chi)?);
    }

    let z = solve_depletion(&p, &bare)?;
    for (k, d) in z.iter().enumerate() {
        println!("depletion step {k}: amplitude {:.4}, phase {:+.4} rad", d.norm(), d.arg());
    }
    Ok(())
}
