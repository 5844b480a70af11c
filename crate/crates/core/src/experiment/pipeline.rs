// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! The three-step extraction as reusable pieces: envelope calibration
//! (depletion and ε range), weight calibration, and the Ramsey and SNR sweeps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{DepletionKind, DepletionMethod, SimMode, SweepSection, WeightsSection};
use super::config::{DepletionSection, WeightSource};
use crate::depletion::{optimize_depletion, CostMode, DepletionParams, TuneupOptions, TuneupResult};
use crate::dynamics::{
    analytic_snr, dephasing_exponent, final_field, optimal_weights, optimize_phi_w, solve_depletion, square_weights,
    trajectory, weights_from_transients, FieldTrajectory, PulseEnvelope, QubitState, ReadoutParams, WeightFunctions,
    WeightKind,
};
use crate::error::{Error, Result};
use crate::estimation::{
    compute_snr, fit_double_gaussian_histogram, fit_gaussian_decay, fit_linear_snr, fit_ramsey_fringe,
    extract_eta_from_fits, snr_from_shots, CoherencePoint, DoubleGaussianFit, EtaExtraction, GaussianDecayFit,
    LinearFit, SnrPoint,
};
use crate::homodyne::rng::mix;
use crate::homodyne::{
    averaged_transients, fringe_truth, ideal_fringe, mean_transients, simulate_ramsey, simulate_shots, RamseyConfig,
    RamseyFringeData, ShotConfig, Transients,
};

const DEPLETION_STREAM: u64 = 0x4445_504C;
const WEIGHTS_STREAM: u64 = 0x5745_4947;
const SNR_STREAM: u64 = 0x534E_5231;

/// Grid resolution for the square-weight phase scan.
const PHI_W_STEPS: usize = 3600;

/// Key separating the random streams of one (depletion kind, detuning) pair.
pub fn condition_stream(kind: DepletionKind, delta: f64) -> u64 {
    let tag = match kind {
        DepletionKind::Active => 1,
        DepletionKind::Passive => 2,
    };
    mix(&[tag, delta.to_bits()])
}

/// Envelope with the depletion segments removed and `wait` of zero drive
/// added in front of the buffer.
pub fn passive_envelope(envelope: &PulseEnvelope, wait: f64) -> Result<PulseEnvelope> {
    let skip = envelope.depletion.unwrap_or([usize::MAX; 2]);
    let segments = envelope
        .segments
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, s)| s.clone())
        .collect();
    PulseEnvelope::new(segments, envelope.sample_period, envelope.buffer + wait)
}

/// Measurement-induced dephasing exponent at unit drive amplitude.
pub fn gamma_per_unit(params: &ReadoutParams, envelope: &PulseEnvelope) -> Result<f64> {
    dephasing_exponent(&trajectory(params, envelope)?, params.chi)
}

/// Evenly spaced drive amplitudes from 0 to `epsilon_max`.
pub fn epsilon_grid(epsilon_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| epsilon_max * k as f64 / (n - 1) as f64).collect()
}

/// Summary of how the depletion was set up and how well it works.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepletionSummary {
    pub kind: DepletionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<DepletionMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wait_ns: Option<f64>,
    /// Drive amplitude the parameters below refer to.
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<DepletionParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_amplitudes: Option<[f64; 2]>,
    /// Linear-solve amplitudes at the same ε.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solved: Option<DepletionParams>,
    /// `(ε_d0, φ_d0, ε_d1, φ_d1)` discrepancy of `params` to `solved`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<[f64; 4]>,
    /// `|α₀(T)|, |α₁(T)|` over the peak field at ε.
    pub residual_field: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuneup: Option<TuneupSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneupSummary {
    pub cost: f64,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub spread_tolerance: f64,
}

impl From<&TuneupResult> for TuneupSummary {
    fn from(r: &TuneupResult) -> Self {
        TuneupSummary {
            cost: r.cost,
            evaluations: r.evaluations,
            converged: r.converged,
            warning: r.warning.clone(),
            spread_tolerance: r.spread_tolerance,
        }
    }
}

/// Envelope ready for the sweeps.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub params: ReadoutParams,
    /// Unit-amplitude envelope including its depletion drive.
    pub envelope: PulseEnvelope,
    pub epsilon_max: f64,
    /// `Γ_m` at unit amplitude; `Γ_m(ε) = gamma_unit·ε²`.
    pub gamma_unit: f64,
    pub depletion: DepletionSummary,
    pub tuneup: Option<TuneupResult>,
}

impl Calibration {
    pub fn trajectory_at(&self, epsilon: f64) -> Result<FieldTrajectory> {
        trajectory(&self.params, &self.envelope.scaled(epsilon))
    }
}

fn residual_field(params: &ReadoutParams, envelope: &PulseEnvelope) -> Result<[f64; 2]> {
    let peak = trajectory(params, envelope)?.peak_field();
    if peak == 0.0 {
        return Ok([0.0; 2]);
    }
    Ok([
        final_field(params, envelope, QubitState::Ground)?.norm() / peak,
        final_field(params, envelope, QubitState::Excited)?.norm() / peak,
    ])
}

fn epsilon_max_for(gamma_unit: f64, fixed: Option<f64>, gamma_max: f64) -> Result<f64> {
    if let Some(e) = fixed {
        return Ok(e);
    }
    if !(gamma_unit > 0.0) {
        return Err(Error::DegenerateWeights(format!(
            "the drive causes no measurement-induced dephasing (Γ_m per unit amplitude = {gamma_unit:e})"
        )));
    }
    Ok((gamma_max / gamma_unit).sqrt())
}

/// Copy with at least `tau_c` of buffer so the depletion cost window fits.
fn with_cost_window(envelope: &PulseEnvelope, tau_c: f64) -> PulseEnvelope {
    let mut env = envelope.clone();
    env.buffer = env.buffer.max(tau_c + envelope.sample_period);
    env
}

/// Normalize `base` to unit reference amplitude, set up the depletion and
/// choose the amplitude range.
///
/// Active depletion is solved at unit amplitude to fix `ε_max`, then tuned at
/// `ε_max` with the configured method and scaled back (the fields are linear
/// in the drive, so the optimum scales with ε).
pub fn calibrate(
    params: &ReadoutParams,
    base: &PulseEnvelope,
    depletion: &DepletionSection,
    sweep: &SweepSection,
    seed: u64,
    stream: u64,
) -> Result<Calibration> {
    let reference = base.reference_amplitude();
    if !(reference > 0.0) {
        return Err(Error::DegenerateWeights("the envelope has zero drive amplitude".into()));
    }
    let base = base.scaled(1.0 / reference);

    match depletion.kind {
        DepletionKind::Passive => {
            let envelope = passive_envelope(&base, depletion.wait_ns * 1e-9)?;
            let gamma_unit = gamma_per_unit(params, &envelope)?;
            let epsilon_max = epsilon_max_for(gamma_unit, sweep.epsilon_max, sweep.gamma_max)?;
            let summary = DepletionSummary {
                kind: DepletionKind::Passive,
                method: None,
                wait_ns: Some(depletion.wait_ns),
                epsilon: epsilon_max,
                params: None,
                relative_amplitudes: None,
                solved: None,
                relative_error: None,
                residual_field: residual_field(params, &envelope.scaled(epsilon_max))?,
                tuneup: None,
            };
            Ok(Calibration {
                params: *params,
                envelope,
                epsilon_max,
                gamma_unit,
                depletion: summary,
                tuneup: None,
            })
        }
        DepletionKind::Active => {
            let solved = solve_depletion(params, &base)?;
            let solved_env = base.with_depletion_amplitudes(solved)?;
            let epsilon_max = epsilon_max_for(gamma_per_unit(params, &solved_env)?, sweep.epsilon_max, sweep.gamma_max)?;

            let (unit, tuneup) = match depletion.method {
                DepletionMethod::Solve => (solved, None),
                method => {
                    let mode = if method == DepletionMethod::Mc {
                        CostMode::MonteCarlo {
                            seed,
                            evaluation: mix(&[DEPLETION_STREAM, stream]),
                        }
                    } else {
                        CostMode::Noiseless
                    };
                    let cost = depletion.cost_config();
                    let env = with_cost_window(&base.scaled(epsilon_max), cost.tau_c);
                    let r = optimize_depletion(params, &env, &DepletionParams::default(), &cost, mode, &TuneupOptions::default())?;
                    let z = r.params.to_complex().map(|z| z / epsilon_max);
                    (z, Some(r))
                }
            };
            let envelope = base.with_depletion_amplitudes(unit)?;
            let gamma_unit = gamma_per_unit(params, &envelope)?;
            let at_max = |z: [Complex64; 2]| DepletionParams::from_complex(z.map(|z| z * epsilon_max));
            let (tuned, oracle) = (at_max(unit), at_max(solved));
            let summary = DepletionSummary {
                kind: DepletionKind::Active,
                method: Some(depletion.method),
                wait_ns: None,
                epsilon: epsilon_max,
                params: Some(tuned),
                relative_amplitudes: Some(tuned.relative_amplitudes(epsilon_max)),
                solved: Some(oracle),
                relative_error: Some(tuned.relative_error(&oracle)),
                residual_field: residual_field(params, &envelope.scaled(epsilon_max))?,
                tuneup: tuneup.as_ref().map(TuneupSummary::from),
            };
            Ok(Calibration {
                params: *params,
                envelope,
                epsilon_max,
                gamma_unit,
                depletion: summary,
                tuneup,
            })
        }
    }
}

/// Averaged transients of both states at `ε_max`: exact in noiseless mode,
/// averaged over `shots` full records otherwise.
pub fn measure_transients(cal: &Calibration, shots: usize, mode: SimMode, seed: u64, stream: u64) -> Result<[Transients; 2]> {
    let traj = cal.trajectory_at(cal.epsilon_max)?;
    let p = &cal.params;
    match mode {
        SimMode::Noiseless => Ok(QubitState::BOTH.map(|s| mean_transients(&traj, p, s))),
        SimMode::Mc => {
            let cfg = ShotConfig::new(shots, seed).with_stream(&[WEIGHTS_STREAM, stream]);
            Ok([
                averaged_transients(&traj, p, QubitState::Ground, &cfg)?,
                averaged_transients(&traj, p, QubitState::Excited, &cfg)?,
            ])
        }
    }
}

/// Matched-filter weights: from the model, or from measured transients.
pub fn matched_weights(cal: &Calibration, source: WeightSource, transients: Option<&[Transients; 2]>) -> Result<WeightFunctions> {
    match (source, transients) {
        (WeightSource::Model, _) => optimal_weights(&cal.trajectory_at(cal.epsilon_max)?, &cal.params),
        (WeightSource::Averaged, Some([t0, t1])) => weights_from_transients(&t0.mean_i, &t0.mean_q, &t1.mean_i, &t1.mean_q),
        (WeightSource::Averaged, None) => Err(Error::invalid("averaged-transient weights need measured transients")),
    }
}

/// Constant weights at the configured phase, or at the phase that maximizes
/// the model SNR.
pub fn box_weights(cal: &Calibration, phi_w: Option<f64>) -> Result<WeightFunctions> {
    let traj = cal.trajectory_at(cal.epsilon_max)?;
    let phi = match phi_w {
        Some(p) => p,
        None => optimize_phi_w(&traj, &cal.params, PHI_W_STEPS)?.0,
    };
    Ok(square_weights(phi, traj.len()))
}

/// Weight sets for one extraction, matched filter first.
pub fn weight_sets(
    cal: &Calibration,
    cfg: &WeightsSection,
    matched: bool,
    square: bool,
    mode: SimMode,
    seed: u64,
    stream: u64,
) -> Result<Vec<WeightFunctions>> {
    let mut sets = Vec::new();
    if matched {
        let transients = match cfg.source {
            WeightSource::Averaged => Some(measure_transients(cal, cfg.transient_shots, mode, seed, stream)?),
            WeightSource::Model => None,
        };
        sets.push(matched_weights(cal, cfg.source, transients.as_ref())?);
    }
    if square {
        sets.push(box_weights(cal, cfg.phi_w)?);
    }
    Ok(sets)
}

pub fn weight_label(kind: &WeightKind) -> &'static str {
    match kind {
        WeightKind::Optimal => "optimal",
        WeightKind::Calibrated => "calibrated",
        WeightKind::Square { .. } => "square",
    }
}

/// Values the simulation was run with, for comparison with the fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub eta: f64,
    pub gamma_m_per_eps2: f64,
    pub sigma_m: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightResult {
    pub weights: WeightKind,
    /// Model SNR per unit ε for these weights.
    pub model_slope: f64,
    /// `a_model²σ_m²/2` with the true σ_m; equals η for matched weights.
    pub model_eta: f64,
    pub snr: Vec<SnrPoint>,
    /// Mixture fits `[ground, excited]` per SNR point (Monte-Carlo only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mixtures: Vec<[DoubleGaussianFit; 2]>,
    pub line: LinearFit,
    pub eta: EtaExtraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub truth: Truth,
    pub epsilons: Vec<f64>,
    pub coherence: Vec<CoherencePoint>,
    pub decay: GaussianDecayFit,
    pub results: Vec<WeightResult>,
    #[serde(skip)]
    pub fringes: Vec<RamseyFringeData>,
}

/// Settings shared by the Ramsey and SNR sweeps.
#[derive(Debug, Clone, Copy)]
pub struct SweepSettings<'a> {
    pub sweep: &'a SweepSection,
    pub ramsey: &'a RamseyConfig,
    pub mode: SimMode,
    pub seed: u64,
    pub stream: u64,
}

/// Step 2: Ramsey fringe after the pulse at every ε, fitted for `|ρ₀₁|`.
pub fn coherence_sweep(cal: &Calibration, epsilons: &[f64], s: &SweepSettings) -> Result<(Vec<RamseyFringeData>, Vec<CoherencePoint>)> {
    let mut fringes = Vec::with_capacity(epsilons.len());
    let mut points = Vec::with_capacity(epsilons.len());
    for (k, &eps) in epsilons.iter().enumerate() {
        let env = cal.envelope.scaled(eps);
        let data = match s.mode {
            SimMode::Noiseless => ideal_fringe(&fringe_truth(&cal.params, &env, s.ramsey)?, s.ramsey, eps),
            SimMode::Mc => {
                let mut d = simulate_ramsey(&cal.params, &env, s.ramsey, s.seed, mix(&[s.stream, k as u64]))?;
                d.epsilon = eps;
                d
            }
        };
        points.push(fit_ramsey_fringe(&data)?);
        fringes.push(data);
    }
    Ok((fringes, points))
}

struct SnrSweep {
    points: Vec<SnrPoint>,
    mixtures: Vec<[DoubleGaussianFit; 2]>,
}

/// Step 3: SNR at every nonzero ε for every weight set. In Monte-Carlo mode
/// each record is integrated against all weight sets.
fn snr_sweep(cal: &Calibration, epsilons: &[f64], weights: &[WeightFunctions], s: &SweepSettings) -> Result<Vec<SnrSweep>> {
    let mut out: Vec<SnrSweep> = weights
        .iter()
        .map(|_| SnrSweep {
            points: Vec::new(),
            mixtures: Vec::new(),
        })
        .collect();
    let refs: Vec<&WeightFunctions> = weights.iter().collect();
    for (k, &eps) in epsilons.iter().enumerate() {
        if eps == 0.0 {
            continue;
        }
        let traj = cal.trajectory_at(eps)?;
        match s.mode {
            SimMode::Noiseless => {
                for (o, w) in out.iter_mut().zip(weights) {
                    o.points.push(SnrPoint {
                        epsilon: eps,
                        snr: analytic_snr(&traj, &cal.params, w)?,
                        snr_err: 0.0,
                    });
                }
            }
            SimMode::Mc => {
                let cfg = ShotConfig {
                    prep_error: s.sweep.prep_error,
                    ..ShotConfig::new(s.sweep.snr_shots, s.seed).with_stream(&[SNR_STREAM, s.stream, k as u64])
                };
                let g = simulate_shots(&traj, &cal.params, QubitState::Ground, &refs, &cfg)?;
                let e = simulate_shots(&traj, &cal.params, QubitState::Excited, &refs, &cfg)?;
                for (j, o) in out.iter_mut().enumerate() {
                    let v0: Vec<f64> = g[j].iter().map(|s| s.v_int).collect();
                    let v1: Vec<f64> = e[j].iter().map(|s| s.v_int).collect();
                    let (point, fits) = match s.sweep.histogram_bins {
                        Some(bins) => {
                            let f0 = fit_double_gaussian_histogram(&v0, bins)?;
                            let f1 = fit_double_gaussian_histogram(&v1, bins)?;
                            (compute_snr(&f0, &f1, eps), [f0, f1])
                        }
                        None => snr_from_shots(&v0, &v1, eps, s.sweep.snr_error)?,
                    };
                    o.points.push(point);
                    o.mixtures.push(fits);
                }
            }
        }
    }
    Ok(out)
}

/// Steps 2 and 3 plus the fits, for every weight set on the same records.
pub fn run_extraction(cal: &Calibration, weights: &[WeightFunctions], s: &SweepSettings) -> Result<Extraction> {
    let epsilons = epsilon_grid(cal.epsilon_max, s.sweep.n_epsilon);
    let (fringes, coherence) = coherence_sweep(cal, &epsilons, s)?;
    let decay = fit_gaussian_decay(&coherence)?;

    let sigma_true = (0.5 / cal.gamma_unit).sqrt();
    let unit = cal.trajectory_at(1.0)?;
    let sweeps = snr_sweep(cal, &epsilons, weights, s)?;
    let mut results = Vec::with_capacity(weights.len());
    for (w, sw) in weights.iter().zip(sweeps) {
        let line = fit_linear_snr(&sw.points)?;
        let model_slope = analytic_snr(&unit, &cal.params, w)?;
        results.push(WeightResult {
            weights: w.kind,
            model_slope,
            model_eta: 0.5 * (model_slope * sigma_true).powi(2),
            snr: sw.points,
            mixtures: sw.mixtures,
            line,
            eta: extract_eta_from_fits(&line, &decay)?,
        });
    }
    Ok(Extraction {
        truth: Truth {
            eta: cal.params.eta,
            gamma_m_per_eps2: cal.gamma_unit,
            sigma_m: sigma_true,
            b: 0.5 * s.ramsey.b0,
        },
        epsilons,
        coherence,
        decay,
        results,
        fringes,
    })
}
