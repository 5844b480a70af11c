// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Efficiency budget of pre-amplifier losses, a lossy traveling-wave
//! amplifier and the following HEMT stage, and a fit to a gain sweep.

use std::path::Path;

use readout_eta::chain::*;

fn main() -> readout_eta::Result<()> {
    let p = ChainParams {
        eta_pre: 0.22,
        insertion_loss_db: 4.6,
        n_sections: DEFAULT_SECTIONS,
        t_noise: 2.6,
        freq: 7.8524e9,
    };
    let gains: Vec<f64> = (0..=6).map(|k| 4.0 * k as f64).collect();
    println!("{:>7} {:>8} {:>8} {:>8} {:>8}", "gain/dB", "pre", "twpa", "post", "total");
    for s in stage_curves(&p, &gains) {
        println!("{:>7.1} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", s.gain_db, s.eta_pre, s.eta_twpa, s.eta_post, s.eta_total);
    }

    let data = load_points_csv(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/chain_gain_sweep.csv"))?;
    let fit = fit_chain(&data, DEFAULT_SECTIONS, p.freq)?;
    let (q, e) = (fit.params, fit.errors);
    println!(
        "fit: eta_pre = {:.3} +/- {:.3}, loss = {:.2} +/- {:.2} dB, T_N = {:.2} +/- {:.2} K, chi2_red = {:.2}",
        q.eta_pre, e[0], q.insertion_loss_db, e[1], q.t_noise, e[2], fit.chi2_red
    );
    Ok(())
}
