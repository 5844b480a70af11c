// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Nelder–Mead depletion tune-up on the noiseless and on the Monte-Carlo
//! cost, compared with the linear solve.
//!
//! With χ ≪ κ the state-difference part of the cost is weak, so the noisy
//! search pins the residual field to about a percent of its peak while the
//! individual step parameters can stay tens of percent off.

use readout_eta::depletion::{optimize_depletion, CostConfig, CostMode, DepletionParams, TuneupOptions};
use readout_eta::dynamics::*;

fn main() -> readout_eta::Result<()> {
    let p = ReadoutParams::reference(0.165);
    // the cost window needs τ_c of buffer after the depletion
    let env = PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 200e-9, 1e-9)?.scaled(0.34);
    let solved = DepletionParams::from_complex(solve_depletion(&p, &env)?);
    println!("linear solve   {:?}", solved);

    let cost = CostConfig::default();
    let opts = TuneupOptions::default();
    for (name, mode) in [
        ("noiseless", CostMode::Noiseless),
        ("monte carlo", CostMode::MonteCarlo { seed: 1, evaluation: 0 }),
    ] {
        let r = optimize_depletion(&p, &env, &DepletionParams::default(), &cost, mode, &opts)?;
        let err = r.params.relative_error(&solved);
        println!("{name:<14} {:?}", r.params);
        println!(
            "  cost {:.3e} after {} evaluations, deviation [{:.1e}, {:.1e}, {:.1e}, {:.1e}]",
            r.cost, r.evaluations, err[0], err[1], err[2], err[3]
        );
        let tuned = env.with_depletion_amplitudes(r.params.to_complex())?;
        let peak = trajectory(&p, &tuned)?.peak_field();
        println!(
            "  final field |alpha0| = {:.2e}, |alpha1| = {:.2e} of peak",
            final_field(&p, &tuned, QubitState::Ground)?.norm() / peak,
            final_field(&p, &tuned, QubitState::Excited)?.norm() / peak
        );
    }
    Ok(())
}
