// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Criterion numbers given as arguments select a
//! subset, e.g. `cargo test --test acceptance -- 1 4`.

mod common;

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use readout_eta::chain::{self, ChainParams, GainEtaPoint};
use readout_eta::dynamics::*;
use readout_eta::estimation::{anderson_darling, fit_ramsey_fringe, snr_from_shots, SnrError};
use readout_eta::experiment::commands::{self, EtaReport};
use readout_eta::experiment::config::{Condition, DepletionMethod, EnvelopeKind};
use readout_eta::experiment::pipeline::calibrate;
use readout_eta::experiment::{ConfigFile, Context, Overrides, SimMode};
use readout_eta::homodyne::*;
use readout_eta::Result;

type Outcome = Result<(bool, String)>;

const SEED: u64 = 2019;

fn mc_config(seed: u64) -> ConfigFile {
    let mut c = ConfigFile {
        seed: Some(seed),
        mode: SimMode::Mc,
        ..Default::default()
    };
    c.depletion.method = DepletionMethod::Mc;
    c
}

fn context(config: ConfigFile, out: &Path) -> Context {
    let o = Overrides {
        out: Some(out.to_path_buf()),
        ..Default::default()
    };
    Context::new(config, PathBuf::new(), &o)
}

fn detunings_mhz() -> Vec<f64> {
    (0..15).map(|k| 1.4 * (2 * k) as f64 / 14.0 - 1.4).collect()
}

/// Efficiency identity on the analytic path.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for eta in [0.05, 0.165, 0.5, 1.0] {
        for d in detunings_mhz() {
            let p = ReadoutParams::reference(eta).with_delta(TAU * d * 1e6);
            for k in 0..3 {
                let env = deplete(&p, &family(k).scaled(0.2))?;
                let traj = trajectory(&p, &env)?;
                let snr = analytic_snr(&traj, &p, &optimal_weights(&traj, &p)?)?;
                let gamma = dephasing_exponent(&traj, p.chi)?;
                worst = worst.max((snr * snr / (4.0 * gamma) / eta - 1.0).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst < 1e-6 && secs < 10.0, format!("max relative error {worst:.2e} over 180 cases, {secs:.1} s")))
}

fn optimal_eta(r: &EtaReport) -> (f64, f64) {
    let e = &r.extraction.results[0].eta;
    (e.eta_e, e.eta_err)
}

/// Closed-loop Monte-Carlo extraction at the reference timing.
fn criterion_2(out: &Path) -> Result<((bool, String), EtaReport)> {
    let start = Instant::now();
    let r = commands::extract_eta(&context(mc_config(SEED), out))?;
    let secs = start.elapsed().as_secs_f64();
    let (eta, err) = optimal_eta(&r);
    let ok = (eta - 0.165).abs() < 0.006 && (0.001..0.01).contains(&err) && secs < 300.0;
    Ok((
        (ok, format!("eta_e = {eta:.4} +/- {err:.4} (injected 0.165), {secs:.0} s")),
        r,
    ))
}

/// Flatness of the optimal extraction over detuning, and the square-weight drop.
fn criterion_3(out: &Path) -> Outcome {
    let mut c = mc_config(SEED);
    c.detuning.conditions = vec![Condition::OptimalActive, Condition::SquareActive];
    let start = Instant::now();
    let r = commands::sweep_detuning(&context(c, out))?;
    let secs = start.elapsed().as_secs_f64();
    let stat = |name: &str| r.stats.iter().find(|s| s.condition == name).cloned();
    let (Some(opt), Some(sq)) = (stat("optimal-active"), stat("square-active")) else {
        return Ok((false, "a condition produced no successful points".into()));
    };
    let spread = opt.std / opt.mean;
    let drop = 1.0 - sq.edge / sq.center;
    let ok = opt.n_ok == 15 && spread < 0.05 && opt.slope_per_mhz.abs() < 2.0 * opt.slope_err && drop >= 0.2;
    Ok((
        ok,
        format!(
            "optimal: mean {:.4} std/mean {:.3} slope {:+.4} +/- {:.4} /MHz ({} ok); square: {:.4} -> {:.4} at 1.4 MHz ({:.0}% drop); {secs:.0} s",
            opt.mean,
            spread,
            opt.slope_per_mhz,
            opt.slope_err,
            opt.n_ok,
            sq.center,
            sq.edge,
            100.0 * drop
        ),
    ))
}

/// Noiseless Nelder–Mead tune-up against the linear solve.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut c = ConfigFile {
        seed: Some(SEED),
        mode: SimMode::Noiseless,
        ..Default::default()
    };
    c.depletion.method = DepletionMethod::Noiseless;
    let ctx = context(c, Path::new("."));
    let (mut worst_param, mut worst_field): (f64, f64) = (0.0, 0.0);
    for d in detunings_mhz() {
        let p = ctx.params()?.with_delta(TAU * d * 1e6);
        let cal = calibrate(&p, &ctx.envelope()?, &ctx.config.depletion, &ctx.config.sweep, SEED, 0)?;
        let err = cal.depletion.relative_error.unwrap_or([f64::INFINITY; 4]);
        worst_param = err.iter().copied().fold(worst_param, f64::max);
        worst_field = cal.depletion.residual_field.iter().copied().fold(worst_field, f64::max);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst_param < 1e-3 && worst_field < 1e-3 && secs < 30.0,
        format!("max parameter deviation {worst_param:.1e}, max residual field {worst_field:.1e} of peak, 15 detunings, {secs:.1} s"),
    ))
}

/// Skyline envelope against the square-ramp result of criterion 2.
fn criterion_5(out: &Path, square: Option<&EtaReport>) -> Outcome {
    let Some(square) = square else {
        return Ok((false, "square-ramp extraction unavailable".into()));
    };
    let mut c = mc_config(SEED + 1);
    c.envelope.kind = EnvelopeKind::Skyline;
    let r = commands::extract_eta(&context(c, out))?;
    let (a, ea) = optimal_eta(&r);
    let (b, eb) = optimal_eta(square);
    let z = (a - b).abs() / ea.hypot(eb);
    Ok((z < 2.0, format!("skyline {a:.4} +/- {ea:.4}, square {b:.4} +/- {eb:.4}, {z:.2} combined sigma")))
}

/// Shot statistics, SNR against the model and Ramsey amplitudes.
fn criterion_6() -> Outcome {
    let p = ReadoutParams::reference(0.165);
    let base = deplete(&p, &square(100.0))?;
    let values = |s: &[IntegratedShot]| s.iter().map(|x| x.v_int).collect::<Vec<_>>();

    let traj = trajectory(&p, &base.scaled(0.2))?;
    let w = optimal_weights(&traj, &p)?;
    let mut p_min: f64 = 1.0;
    for (k, state) in [QubitState::Ground, QubitState::Excited].into_iter().enumerate() {
        let shots = simulate_shots(&traj, &p, state, &[&w], &ShotConfig::new(1 << 14, SEED).with_stream(&[k as u64]))?;
        p_min = p_min.min(anderson_darling(&values(&shots[0]))?.p_value);
    }

    let mut snr_z: f64 = 0.0;
    for (k, eps) in [0.05, 0.1, 0.15, 0.2, 0.25].into_iter().enumerate() {
        let traj = trajectory(&p, &base.scaled(eps))?;
        let w = optimal_weights(&traj, &p)?;
        let cfg = ShotConfig::new(1 << 15, SEED).with_stream(&[10, k as u64]);
        let g = simulate_shots(&traj, &p, QubitState::Ground, &[&w], &cfg)?;
        let e = simulate_shots(&traj, &p, QubitState::Excited, &[&w], &cfg)?;
        let (pt, _) = snr_from_shots(&values(&g[0]), &values(&e[0]), eps, SnrError::Delta)?;
        snr_z = snr_z.max((pt.snr - analytic_snr(&traj, &p, &w)?).abs() / pt.snr_err);
    }

    let cfg = RamseyConfig::default();
    let mut ramsey_z: f64 = 0.0;
    for (k, eps) in [0.0, 0.1, 0.2, 0.3].into_iter().enumerate() {
        let env = base.scaled(eps);
        let truth = fringe_truth(&p, &env, &cfg)?;
        let fit = fit_ramsey_fringe(&simulate_ramsey(&p, &env, &cfg, SEED, k as u64)?)?;
        ramsey_z = ramsey_z.max((fit.rho01 - 0.5 * (-truth.gamma_m).exp()).abs() / fit.rho01_err);
    }
    Ok((
        p_min > 1e-3 && snr_z < 3.0 && ramsey_z < 3.0,
        format!("min AD p = {p_min:.3}, max SNR deviation {snr_z:.2} sigma, max Ramsey deviation {ramsey_z:.2} sigma"),
    ))
}

/// Chain fit on self-generated data and on the reference gain sweep.
fn criterion_7() -> Outcome {
    let truth = ChainParams {
        eta_pre: 0.22,
        insertion_loss_db: 4.6,
        n_sections: chain::DEFAULT_SECTIONS,
        t_noise: 2.6,
        freq: 7.8524e9,
    };
    let rel = |p: &ChainParams| {
        [
            p.eta_pre / 0.22 - 1.0,
            p.insertion_loss_db / 4.6 - 1.0,
            p.t_noise / 2.6 - 1.0,
        ]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
    };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SEED);
    let points: Vec<GainEtaPoint> = (0..26)
        .map(|k| {
            let g = k as f64;
            let eta = chain::eta_chain(&truth, g);
            let z: f64 = StandardNormal.sample(&mut rng);
            GainEtaPoint {
                gain_db: g,
                eta_e: eta * (1.0 + 0.02 * z),
                eta_err: 0.02 * eta,
            }
        })
        .collect();
    let synthetic = rel(&chain::fit_chain(&points, truth.n_sections, truth.freq)?.params);

    let data = chain::load_points_csv(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/chain_gain_sweep.csv")))?;
    let fit = chain::fit_chain(&data, truth.n_sections, truth.freq)?;
    let sweep = rel(&fit.params);
    Ok((
        synthetic < 0.1 && sweep < 0.3,
        format!(
            "synthetic: max deviation {:.1}%; gain sweep: eta_pre {:.3}, loss {:.2} dB, T_N {:.2} K (max deviation {:.1}%)",
            100.0 * synthetic,
            fit.params.eta_pre,
            fit.params.insertion_loss_db,
            fit.params.t_noise,
            100.0 * sweep
        ),
    ))
}

/// Repeating criterion 2 with the same seed reproduces every output byte.
fn criterion_8(first: &Path, second: &Path) -> Outcome {
    commands::extract_eta(&context(mc_config(SEED), second))?;
    let mut differing = Vec::new();
    for f in ["report.json", "snr.csv", "coherence.csv", "fringes.csv"] {
        let read = |d: &Path| fs::read(d.join(f)).ok();
        if read(first).is_none() || read(first) != read(second) {
            differing.push(f);
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            "report.json and CSV outputs identical".into()
        } else {
            format!("differing: {}", differing.join(", "))
        },
    ))
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: u32| selected.is_empty() || selected.contains(&n);
    let dir = tempfile::tempdir().expect("temporary directory");
    let sub = |name: &str| dir.path().join(name);

    let mut failed = 0;
    let mut report = |n: u32, name: &str, r: Outcome| {
        let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!("{} {n}. {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    if want(1) {
        report(1, "efficiency identity", criterion_1());
    }
    let mut square = None;
    if want(2) || want(5) || want(8) {
        let outcome = match criterion_2(&sub("c2")) {
            Ok((o, r)) => {
                square = Some(r);
                Ok(o)
            }
            Err(e) => Err(e),
        };
        if want(2) {
            report(2, "closed-loop extraction", outcome);
        }
    }
    if want(3) {
        report(3, "detuning flatness", criterion_3(&sub("c3")));
    }
    if want(4) {
        report(4, "depletion tune-up vs linear solve", criterion_4());
    }
    if want(5) {
        report(5, "skyline envelope", criterion_5(&sub("c5"), square.as_ref()));
    }
    if want(6) {
        report(6, "statistical contracts", criterion_6());
    }
    if want(7) {
        report(7, "chain model", criterion_7());
    }
    if want(8) {
        let outcome = if square.is_some() {
            criterion_8(&sub("c2"), &sub("c8"))
        } else {
            Ok((false, "first run failed".into()))
        };
        report(8, "determinism", outcome);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
