// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Integration weight functions and the analytic signal-to-noise ratio.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::analysis::difference_energy;
use super::field::FieldTrajectory;
use super::params::ReadoutParams;
use super::quadrature::trapezoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightKind {
    /// Matched filter built from the model mean-signal difference.
    Optimal,
    /// Difference of measured averaged transients (noisy matched filter).
    Calibrated,
    /// Constant weights at demodulation phase `phi_w`.
    Square { phi_w: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunctions {
    pub w_i: Vec<f64>,
    pub w_q: Vec<f64>,
    pub kind: WeightKind,
}

impl WeightFunctions {
    pub fn len(&self) -> usize {
        self.w_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_i.is_empty()
    }

    /// `∫ (w_I² + w_Q²) dt`.
    pub fn norm_sqr(&self, dt: f64) -> f64 {
        let p: Vec<f64> = self
            .w_i
            .iter()
            .zip(&self.w_q)
            .map(|(a, b)| a * a + b * b)
            .collect();
        trapezoid(&p, dt)
    }

    /// CSV with columns `t_ns, w_i, w_q`.
    pub fn write_csv<W: Write>(&self, dt: f64, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_ns", "w_i", "w_q"])?;
        for k in 0..self.len() {
            w.write_record(&[
                format!("{}", k as f64 * dt * 1e9),
                format!("{:e}", self.w_i[k]),
                format!("{:e}", self.w_q[k]),
            ])?;
        }
        w.flush()
    }
}

/// Scale `(w_i, w_q)` to unit peak magnitude.
fn normalized(w_i: Vec<f64>, w_q: Vec<f64>, kind: WeightKind) -> Result<WeightFunctions> {
    let peak = w_i
        .iter()
        .zip(&w_q)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::DegenerateWeights(
            "mean signals of the two qubit states are identical".into(),
        ));
    }
    Ok(WeightFunctions {
        w_i: w_i.iter().map(|v| v / peak).collect(),
        w_q: w_q.iter().map(|v| v / peak).collect(),
        kind,
    })
}

/// Optimal weights `∝ (Re, Im)(α₁ − α₀)`, normalized to unit peak magnitude.
pub fn optimal_weights(traj: &FieldTrajectory, params: &ReadoutParams) -> Result<WeightFunctions> {
    traj.check()?;
    params.validate()?;
    let d = traj.difference();
    let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // differences at rounding level of the fields carry no information
    if scale <= 1e-12 * traj.peak_field() || scale == 0.0 {
        return Err(Error::DegenerateWeights(
            "fields of the two qubit states coincide".into(),
        ));
    }
    normalized(
        d.iter().map(|z| z.re).collect(),
        d.iter().map(|z| z.im).collect(),
        WeightKind::Optimal,
    )
}

/// Weights from measured averaged transients `⟨V_{I/Q,1} − V_{I/Q,0}⟩`.
pub fn weights_from_transients(
    mean_i0: &[f64],
    mean_q0: &[f64],
    mean_i1: &[f64],
    mean_q1: &[f64],
) -> Result<WeightFunctions> {
    let n = mean_i0.len();
    if [mean_q0.len(), mean_i1.len(), mean_q1.len()].iter().any(|&m| m != n) {
        return Err(Error::invalid("transient arrays disagree in length"));
    }
    normalized(
        mean_i1.iter().zip(mean_i0).map(|(a, b)| a - b).collect(),
        mean_q1.iter().zip(mean_q0).map(|(a, b)| a - b).collect(),
        WeightKind::Calibrated,
    )
}

/// Constant weights `(cos φ_w, sin φ_w)` on a grid of `len` samples.
pub fn square_weights(phi_w: f64, len: usize) -> WeightFunctions {
    let (s, c) = phi_w.sin_cos();
    WeightFunctions {
        w_i: vec![c; len],
        w_q: vec![s; len],
        kind: WeightKind::Square { phi_w },
    }
}

/// Signal-to-noise ratio of the integrated shot for the given weights.
///
/// Optimal weights use the closed form `√(2κη ∫|α₁ − α₀|² dt)`. Other weights
/// use `S = |∫ w·⟨ΔV⟩ dt|` and `N² = V₀² ∫ |w|² dt`.
pub fn analytic_snr(traj: &FieldTrajectory, params: &ReadoutParams, weights: &WeightFunctions) -> Result<f64> {
    traj.check()?;
    params.validate()?;
    if weights.w_i.len() != traj.len() || weights.w_q.len() != traj.len() {
        return Err(Error::invalid(format!(
            "weights have {} samples, trajectory has {}",
            weights.w_i.len(),
            traj.len()
        )));
    }
    let dt = traj.sample_period();
    let norm = weights.norm_sqr(dt);
    if !(norm > 0.0) {
        return Err(Error::invalid("weights have zero norm"));
    }
    if weights.kind == WeightKind::Optimal {
        return Ok((2.0 * params.kappa * params.eta * difference_energy(traj)?).sqrt());
    }
    let overlap: Vec<f64> = traj
        .difference()
        .iter()
        .zip(weights.w_i.iter().zip(&weights.w_q))
        .map(|(d, (wi, wq))| wi * d.re + wq * d.im)
        .collect();
    let signal = params.signal_gain() * trapezoid(&overlap, dt).abs();
    let noise = params.v0 * norm.sqrt();
    Ok(signal / noise)
}

/// Best square-weight phase by scanning `n_phases` phases on `[0, 2π)`.
pub fn optimize_phi_w(traj: &FieldTrajectory, params: &ReadoutParams, n_phases: usize) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..n_phases.max(1) {
        let phi = TAU * k as f64 / n_phases as f64;
        let snr = analytic_snr(traj, params, &square_weights(phi, traj.len()))?;
        if snr > best.1 {
            best = (phi, snr);
        }
    }
    Ok(best)
}
