// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Synthetic Ramsey fringes after a readout pulse.
//!
//! The ideal fringe is `⟨σ_z⟩(φ) = 2|ρ₀₁| cos(φ + φ₀)` with
//! `|ρ₀₁| = ½·b₀·e^{−Γ_m}` and `φ₀` the deterministic measurement phase plus a
//! fixed offset. Each phase point is a binomial proportion over the shots.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use super::rng::{mix, shot_rng};
use crate::dynamics::{dephasing_exponent, measurement_phase, trajectory, PulseEnvelope, ReadoutParams};
use crate::error::{Error, Result};

const RAMSEY_STREAM: u64 = 0x5241_4D53;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseyConfig {
    pub n_phases: usize,
    pub shots_per_point: u64,
    /// Contrast without readout drive, `2|ρ₀₁|` at zero amplitude.
    pub b0: f64,
    /// Phase added to the deterministic measurement phase (rad).
    pub phase_offset: f64,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        RamseyConfig {
            n_phases: 32,
            shots_per_point: 1024,
            b0: 1.0,
            phase_offset: 0.0,
        }
    }
}

impl RamseyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_phases < 8 {
            return Err(Error::invalid(format!("need at least 8 Ramsey phases, got {}", self.n_phases)));
        }
        if self.shots_per_point == 0 {
            return Err(Error::invalid("shots per Ramsey point must be positive"));
        }
        if !(self.b0 > 0.0 && self.b0 <= 1.0) {
            return Err(Error::invalid(format!("baseline contrast {} outside (0, 1]", self.b0)));
        }
        if !self.phase_offset.is_finite() {
            return Err(Error::invalid("phase offset must be finite"));
        }
        Ok(())
    }

    /// Phases `4πk/n` for `k = 0..n`, covering two fringe periods.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.n_phases)
            .map(|k| 4.0 * PI * k as f64 / self.n_phases as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyFringeData {
    pub phi: Vec<f64>,
    pub sigma_z: Vec<f64>,
    /// Zero marks noiseless data.
    pub shots_per_point: u64,
    pub epsilon: f64,
}

impl RamseyFringeData {
    /// CSV with columns `phi, sigma_z`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phi", "sigma_z"])?;
        for (p, s) in self.phi.iter().zip(&self.sigma_z) {
            w.write_record(&[format!("{p}"), format!("{s}")])?;
        }
        w.flush()
    }
}

/// Ground-truth coherence and fringe phase left by the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeTruth {
    pub gamma_m: f64,
    pub rho01: f64,
    pub phi0: f64,
}

pub fn fringe_truth(params: &ReadoutParams, envelope: &PulseEnvelope, cfg: &RamseyConfig) -> Result<FringeTruth> {
    let traj = trajectory(params, envelope)?;
    let gamma_m = dephasing_exponent(&traj, params.chi)?;
    let phi0 = measurement_phase(&traj, params.chi)? + cfg.phase_offset;
    Ok(FringeTruth {
        gamma_m,
        rho01: 0.5 * cfg.b0 * (-gamma_m).exp(),
        phi0,
    })
}

/// Noiseless fringe on the configured phase grid.
pub fn ideal_fringe(truth: &FringeTruth, cfg: &RamseyConfig, epsilon: f64) -> RamseyFringeData {
    let phi = cfg.phases();
    let sigma_z = phi.iter().map(|p| 2.0 * truth.rho01 * (p + truth.phi0).cos()).collect();
    RamseyFringeData {
        phi,
        sigma_z,
        shots_per_point: 0,
        epsilon,
    }
}

/// Fringe with binomial projection noise; `stream` separates independent
/// fringes under one seed.
pub fn simulate_ramsey(
    params: &ReadoutParams,
    envelope: &PulseEnvelope,
    cfg: &RamseyConfig,
    seed: u64,
    stream: u64,
) -> Result<RamseyFringeData> {
    cfg.validate()?;
    let truth = fringe_truth(params, envelope, cfg)?;
    let mut data = ideal_fringe(&truth, cfg, envelope.reference_amplitude());
    let n = cfg.shots_per_point;
    for (k, s) in data.sigma_z.iter_mut().enumerate() {
        let p_up = (0.5 * (1.0 + *s)).clamp(0.0, 1.0);
        let dist = Binomial::new(n, p_up).map_err(|e| Error::invalid(e.to_string()))?;
        let ups = shot_rng(seed, mix(&[RAMSEY_STREAM, stream]), k as u64).sample(dist);
        *s = 2.0 * ups as f64 / n as f64 - 1.0;
    }
    data.shots_per_point = n;
    Ok(data)
}
