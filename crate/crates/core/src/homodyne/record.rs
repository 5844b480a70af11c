// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-shot homodyne records and their weighted integration.
//!
//! A record sample is `V₀(√(2κη)·Re α(t_k) + g_k/√Δt)` in the I quadrature
//! and likewise with `Im α` and an independent deviate in Q, with `g` standard
//! normal. Integration is the trapezoid-weighted sum of `w_I·V_I + w_Q·V_Q`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{mix, shot_rng, ShotRng};
use crate::dynamics::quadrature::trapezoid_weight;
use crate::dynamics::{FieldTrajectory, QubitState, ReadoutParams, WeightFunctions};
use crate::error::{Error, Result};

const RECORD_STREAM: u64 = 0x5245_434F_5244;
const PREP_STREAM: u64 = 0x5052_4550;
const MEAN_STREAM: u64 = 0x4D45_414E;

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub v_i: Vec<f64>,
    pub v_q: Vec<f64>,
    pub prepared_state: QubitState,
    pub seed: u64,
}

impl ShotRecord {
    pub fn len(&self) -> usize {
        self.v_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_i.is_empty()
    }

    /// CSV with columns `t_ns, v_i, v_q`.
    pub fn write_csv<W: Write>(&self, dt: f64, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_ns", "v_i", "v_q"])?;
        for k in 0..self.len() {
            w.write_record(&[
                format!("{}", k as f64 * dt * 1e9),
                format!("{:e}", self.v_i[k]),
                format!("{:e}", self.v_q[k]),
            ])?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedShot {
    pub v_int: f64,
    /// State the qubit was nominally prepared in (not the state actually read
    /// out when a preparation error occurred).
    pub prepared_state: QubitState,
}

/// Draws noise for one record sample by sample.
struct RecordSampler<'a> {
    field: &'a [Complex64],
    gain: f64,
    noise: f64,
    rng: ShotRng,
}

impl<'a> RecordSampler<'a> {
    fn new(field: &'a [Complex64], params: &ReadoutParams, dt: f64, rng: ShotRng) -> Self {
        RecordSampler {
            field,
            gain: params.signal_gain(),
            noise: params.v0 / dt.sqrt(),
            rng,
        }
    }

    fn sample(&mut self, k: usize) -> (f64, f64) {
        let gi: f64 = self.rng.sample(StandardNormal);
        let gq: f64 = self.rng.sample(StandardNormal);
        let a = self.field[k];
        (self.gain * a.re + self.noise * gi, self.gain * a.im + self.noise * gq)
    }
}

/// One homodyne record for the field of `state`; deterministic in `seed`.
pub fn generate_record(traj: &FieldTrajectory, state: QubitState, params: &ReadoutParams, seed: u64) -> Result<ShotRecord> {
    traj.check()?;
    params.validate()?;
    let mut sampler = RecordSampler::new(traj.field(state), params, traj.sample_period(), shot_rng(seed, RECORD_STREAM, 0));
    let (v_i, v_q) = (0..traj.len()).map(|k| sampler.sample(k)).unzip();
    Ok(ShotRecord {
        v_i,
        v_q,
        prepared_state: state,
        seed,
    })
}

fn check_grid(n: usize, weights: &WeightFunctions) -> Result<()> {
    if weights.w_i.len() != n || weights.w_q.len() != n {
        return Err(Error::invalid(format!(
            "weights have {} samples, record has {}",
            weights.w_i.len(),
            n
        )));
    }
    Ok(())
}

/// `V_int = ∫ (w_I·V_I + w_Q·V_Q) dt` by the trapezoid rule.
pub fn integrate_shot(record: &ShotRecord, weights: &WeightFunctions, dt: f64) -> Result<IntegratedShot> {
    let n = record.len();
    if record.v_q.len() != n {
        return Err(Error::invalid("record quadratures disagree in length"));
    }
    check_grid(n, weights)?;
    let v_int = (0..n)
        .map(|k| trapezoid_weight(k, n, dt) * (weights.w_i[k] * record.v_i[k] + weights.w_q[k] * record.v_q[k]))
        .sum();
    Ok(IntegratedShot {
        v_int,
        prepared_state: record.prepared_state,
    })
}

/// Shot-batch settings shared by every Monte-Carlo experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotConfig {
    pub shots: usize,
    /// Probability that the qubit ends up in the other state.
    pub prep_error: f64,
    pub seed: u64,
    /// Extra key separating independent batches under one seed.
    pub stream: u64,
}

impl ShotConfig {
    pub fn new(shots: usize, seed: u64) -> Self {
        ShotConfig {
            shots,
            prep_error: 0.0,
            seed,
            stream: 0,
        }
    }

    pub fn with_stream(mut self, parts: &[u64]) -> Self {
        self.stream = mix(parts);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::invalid("shot count must be positive"));
        }
        if !(0.0..=1.0).contains(&self.prep_error) {
            return Err(Error::invalid(format!("preparation error {} outside [0, 1]", self.prep_error)));
        }
        Ok(())
    }
}

/// Simulate `cfg.shots` records prepared in `state` and integrate each one
/// against every weight set. Returns one shot list per weight set, all
/// computed from the same records.
///
/// Records are streamed sample by sample and never stored.
pub fn simulate_shots(
    traj: &FieldTrajectory,
    params: &ReadoutParams,
    state: QubitState,
    weights: &[&WeightFunctions],
    cfg: &ShotConfig,
) -> Result<Vec<Vec<IntegratedShot>>> {
    traj.check()?;
    params.validate()?;
    cfg.validate()?;
    let n = traj.len();
    for w in weights {
        check_grid(n, w)?;
    }
    let dt = traj.sample_period();
    let tw: Vec<f64> = (0..n).map(|k| trapezoid_weight(k, n, dt)).collect();
    let stream = mix(&[cfg.stream, state.index() as u64]);

    let per_shot: Vec<Vec<f64>> = (0..cfg.shots)
        .into_par_iter()
        .map(|i| {
            let actual = if cfg.prep_error > 0.0 && shot_rng(cfg.seed, mix(&[stream, PREP_STREAM]), i as u64).random::<f64>() < cfg.prep_error {
                state.flipped()
            } else {
                state
            };
            let rng = shot_rng(cfg.seed, mix(&[stream, RECORD_STREAM]), i as u64);
            let mut sampler = RecordSampler::new(traj.field(actual), params, dt, rng);
            let mut acc = vec![0.0; weights.len()];
            for k in 0..n {
                let (vi, vq) = sampler.sample(k);
                for (a, w) in acc.iter_mut().zip(weights) {
                    *a += tw[k] * (w.w_i[k] * vi + w.w_q[k] * vq);
                }
            }
            acc
        })
        .collect();

    Ok((0..weights.len())
        .map(|j| {
            per_shot
                .iter()
                .map(|acc| IntegratedShot {
                    v_int: acc[j],
                    prepared_state: state,
                })
                .collect()
        })
        .collect())
}

/// Averaged transients `⟨V_I(t)⟩, ⟨V_Q(t)⟩` over `shots` records.
#[derive(Debug, Clone, PartialEq)]
pub struct Transients {
    pub mean_i: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub shots: usize,
}

/// Noiseless averaged transients, `V₀√(2κη)·(Re α, Im α)`.
pub fn mean_transients(traj: &FieldTrajectory, params: &ReadoutParams, state: QubitState) -> Transients {
    let g = params.signal_gain();
    let f = traj.field(state);
    Transients {
        mean_i: f.iter().map(|a| g * a.re).collect(),
        mean_q: f.iter().map(|a| g * a.im).collect(),
        shots: 0,
    }
}

/// Average `cfg.shots` full records sample by sample.
pub fn averaged_transients(
    traj: &FieldTrajectory,
    params: &ReadoutParams,
    state: QubitState,
    cfg: &ShotConfig,
) -> Result<Transients> {
    traj.check()?;
    params.validate()?;
    cfg.validate()?;
    let n = traj.len();
    let dt = traj.sample_period();
    let stream = mix(&[cfg.stream, state.index() as u64]);
    let chunk = 256;
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.shots.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut si = vec![0.0; n];
            let mut sq = vec![0.0; n];
            for i in c * chunk..((c + 1) * chunk).min(cfg.shots) {
                let rng = shot_rng(cfg.seed, mix(&[stream, RECORD_STREAM]), i as u64);
                let mut sampler = RecordSampler::new(traj.field(state), params, dt, rng);
                for k in 0..n {
                    let (vi, vq) = sampler.sample(k);
                    si[k] += vi;
                    sq[k] += vq;
                }
            }
            (si, sq)
        })
        .collect();
    let mut mean_i = vec![0.0; n];
    let mut mean_q = vec![0.0; n];
    for (si, sq) in &partial {
        for k in 0..n {
            mean_i[k] += si[k];
            mean_q[k] += sq[k];
        }
    }
    let inv = 1.0 / cfg.shots as f64;
    mean_i.iter_mut().chain(mean_q.iter_mut()).for_each(|v| *v *= inv);
    Ok(Transients {
        mean_i,
        mean_q,
        shots: cfg.shots,
    })
}

/// Averaged transients with the residual noise of `cfg.shots` averages drawn
/// directly: each averaged sample gets an independent `N(0, V₀²/(Δt·shots))`
/// deviate. Same distribution as [`averaged_transients`] at a fraction of the cost.
pub fn sampled_transients(
    traj: &FieldTrajectory,
    params: &ReadoutParams,
    state: QubitState,
    cfg: &ShotConfig,
) -> Result<Transients> {
    traj.check()?;
    params.validate()?;
    cfg.validate()?;
    let sd = params.v0 / (traj.sample_period() * cfg.shots as f64).sqrt();
    let mut rng = shot_rng(cfg.seed, mix(&[cfg.stream, state.index() as u64, MEAN_STREAM]), 0);
    let mut t = mean_transients(traj, params, state);
    for k in 0..t.mean_i.len() {
        t.mean_i[k] += sd * rng.sample::<f64, _>(StandardNormal);
        t.mean_q[k] += sd * rng.sample::<f64, _>(StandardNormal);
    }
    t.shots = cfg.shots;
    Ok(t)
}

/// CSV with columns `shot_index, prepared_state, v_int`.
pub fn write_shots_csv<W: Write>(shots: &[IntegratedShot], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shot_index", "prepared_state", "v_int"])?;
    for (i, s) in shots.iter().enumerate() {
        let state = match s.prepared_state {
            QubitState::Ground => "ground",
            QubitState::Excited => "excited",
        };
        w.write_record(&[i.to_string(), state.to_string(), format!("{:e}", s.v_int)])?;
    }
    w.flush()
}

pub fn save_shots_csv(shots: &[IntegratedShot], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_shots_csv(shots, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{square_weights, trajectory, PulseEnvelope};

    const NS: f64 = 1e-9;

    fn setup(scale: f64) -> (ReadoutParams, FieldTrajectory) {
        let p = ReadoutParams::reference(0.5);
        let env = PulseEnvelope::square_ramp(600.0 * NS, [200.0 * NS, 200.0 * NS], 100.0 * NS, NS)
            .unwrap()
            .scaled(scale);
        let t = trajectory(&p, &env).unwrap();
        (p, t)
    }

    #[test]
    fn records_are_reproducible() {
        let (p, t) = setup(0.1);
        let a = generate_record(&t, QubitState::Excited, &p, 9).unwrap();
        let b = generate_record(&t, QubitState::Excited, &p, 9).unwrap();
        let c = generate_record(&t, QubitState::Excited, &p, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.v_i, c.v_i);
    }

    #[test]
    fn zero_record_integrates_to_zero() {
        let r = ShotRecord {
            v_i: vec![0.0; 5],
            v_q: vec![0.0; 5],
            prepared_state: QubitState::Ground,
            seed: 0,
        };
        let s = integrate_shot(&r, &square_weights(0.3, 5), NS).unwrap();
        assert_eq!(s.v_int, 0.0);
    }

    #[test]
    fn self_overlap_is_weight_norm() {
        let w = square_weights(0.7, 11);
        let r = ShotRecord {
            v_i: w.w_i.clone(),
            v_q: w.w_q.clone(),
            prepared_state: QubitState::Ground,
            seed: 0,
        };
        let s = integrate_shot(&r, &w, NS).unwrap();
        assert!((s.v_int - w.norm_sqr(NS)).abs() < 1e-24);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let (p, t) = setup(0.1);
        let r = generate_record(&t, QubitState::Ground, &p, 1).unwrap();
        assert!(integrate_shot(&r, &square_weights(0.0, 3), NS).is_err());
        assert!(simulate_shots(&t, &p, QubitState::Ground, &[&square_weights(0.0, 3)], &ShotConfig::new(4, 1)).is_err());
    }

    #[test]
    fn batch_matches_single_record_integration() {
        // shot i of a batch must not depend on how many shots are requested
        let (p, t) = setup(0.2);
        let w = square_weights(1.0, t.len());
        let a = simulate_shots(&t, &p, QubitState::Ground, &[&w], &ShotConfig::new(8, 3)).unwrap();
        let b = simulate_shots(&t, &p, QubitState::Ground, &[&w], &ShotConfig::new(3, 3)).unwrap();
        assert_eq!(&a[0][..3], &b[0][..]);
    }

    #[test]
    fn full_prep_error_reads_the_other_state() {
        let (p, t) = setup(0.25);
        let w = square_weights(0.0, t.len());
        let mut cfg = ShotConfig::new(16, 5);
        let g = simulate_shots(&t, &p, QubitState::Excited, &[&w], &cfg).unwrap();
        cfg.prep_error = 1.0;
        let e = simulate_shots(&t, &p, QubitState::Ground, &[&w], &cfg).unwrap();
        // same noise stream only when the state index matches, so compare means instead
        let mean = |v: &[IntegratedShot]| v.iter().map(|s| s.v_int).sum::<f64>() / v.len() as f64;
        let sd = p.v0 * w.norm_sqr(t.sample_period()).sqrt() / 4.0;
        assert!((mean(&g[0]) - mean(&e[0])).abs() < 8.0 * sd);
        assert!(e[0].iter().all(|s| s.prepared_state == QubitState::Ground));
    }

    #[test]
    fn averaged_transients_approach_mean() {
        let (p, t) = setup(0.25);
        let cfg = ShotConfig::new(512, 2);
        let exact = mean_transients(&t, &p, QubitState::Excited);
        let sd = p.v0 / (t.sample_period() * 512.0).sqrt();
        for tr in [
            averaged_transients(&t, &p, QubitState::Excited, &cfg).unwrap(),
            sampled_transients(&t, &p, QubitState::Excited, &cfg).unwrap(),
        ] {
            let z2: f64 = tr
                .mean_i
                .iter()
                .zip(&exact.mean_i)
                .map(|(a, b)| ((a - b) / sd).powi(2))
                .sum::<f64>()
                / t.len() as f64;
            assert!((z2 - 1.0).abs() < 0.2, "normalized residual power {z2}");
        }
    }
}
