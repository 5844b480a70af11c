// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! The three-step efficiency measurement assembled from library calls:
//! depletion and weights, a Ramsey sweep for σ_m, an SNR sweep for the slope
//! a, then η = a²σ_m²/2. Uses reduced shot counts so it runs in seconds.

use readout_eta::dynamics::*;
use readout_eta::estimation::{extract_eta_from_fits, fit_gaussian_decay, fit_linear_snr, fit_ramsey_fringe, snr_from_shots, SnrError};
use readout_eta::homodyne::{simulate_ramsey, simulate_shots, RamseyConfig, ShotConfig};

fn main() -> readout_eta::Result<()> {
    let p = ReadoutParams::reference(0.165);
    let unit = deplete(&p, &PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?)?;
    let gamma_unit = dephasing_exponent(&trajectory(&p, &unit)?, p.chi)?;
    let eps_max = (4.0 / gamma_unit).sqrt();
    let w = optimal_weights(&trajectory(&p, &unit.scaled(eps_max))?, &p)?;
    println!("epsilon_max = {eps_max:.4}");

    let ramsey = RamseyConfig::default();
    let mut coherence = Vec::new();
    let mut snr = Vec::new();
    for k in 0..10 {
        let eps = eps_max * k as f64 / 9.0;
        let env = unit.scaled(eps);
        coherence.push(fit_ramsey_fringe(&simulate_ramsey(&p, &env, &ramsey, 1, k)?)?);
        if k > 0 {
            let traj = trajectory(&p, &env)?;
            let cfg = ShotConfig::new(4096, 1).with_stream(&[k]);
            let v = |s| -> readout_eta::Result<Vec<f64>> {
                Ok(simulate_shots(&traj, &p, s, &[&w], &cfg)?[0].iter().map(|x| x.v_int).collect())
            };
            snr.push(snr_from_shots(&v(QubitState::Ground)?, &v(QubitState::Excited)?, eps, SnrError::Delta)?.0);
        }
    }

    let decay = fit_gaussian_decay(&coherence)?;
    let line = fit_linear_snr(&snr)?;
    let eta = extract_eta_from_fits(&line, &decay)?;
    println!("sigma_m = {:.4} +/- {:.4}", decay.sigma_m, decay.sigma_m_err);
    println!("a       = {:.3} +/- {:.3}", line.a, line.a_err);
    println!("eta_e   = {:.4} +/- {:.4} (injected {})", eta.eta_e, eta.eta_err, p.eta);
    Ok(())
}
