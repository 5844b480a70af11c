// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Intra-resonator field evolution.
//!
//! Constant segments (and the buffer) are propagated exactly:
//! `α(t₀+τ) = α_ss + (α(t₀) − α_ss)·e^{−λτ}` with `α_ss = −i·ε/λ`.
//! User-sampled segments are integrated with fixed-step RK4, one step per
//! sample interval with the drive held over the step.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::params::{QubitState, ReadoutParams};
use super::pulse::{PulseEnvelope, SegmentShape};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sampled fields for both qubit states on the envelope's uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    pub times: Vec<f64>,
    pub alpha0: Vec<Complex64>,
    pub alpha1: Vec<Complex64>,
    /// Relaxation rates `λ` of the two states, when the trajectory was produced
    /// by held-drive dynamics. Enables exact interval integration.
    pub rates: Option<[Complex64; 2]>,
}

impl FieldTrajectory {
    /// Wrap externally sampled fields; integrals fall back to the trapezoid rule.
    pub fn from_samples(times: Vec<f64>, alpha0: Vec<Complex64>, alpha1: Vec<Complex64>) -> Result<Self> {
        let traj = FieldTrajectory {
            times,
            alpha0,
            alpha1,
            rates: None,
        };
        traj.check()?;
        Ok(traj)
    }

    pub(crate) fn check(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 {
            return Err(Error::invalid("trajectory needs at least two samples"));
        }
        if self.alpha0.len() != n || self.alpha1.len() != n {
            return Err(Error::invalid(format!(
                "trajectory arrays disagree: {} times, {} / {} field samples",
                n,
                self.alpha0.len(),
                self.alpha1.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn field(&self, state: QubitState) -> &[Complex64] {
        match state {
            QubitState::Ground => &self.alpha0,
            QubitState::Excited => &self.alpha1,
        }
    }

    pub fn difference(&self) -> Vec<Complex64> {
        self.alpha1.iter().zip(&self.alpha0).map(|(a1, a0)| a1 - a0).collect()
    }

    /// Largest `|α|` over both states.
    pub fn peak_field(&self) -> f64 {
        self.alpha0
            .iter()
            .chain(&self.alpha1)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `t_ns, re_a0, im_a0, re_a1, im_a1`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_ns", "re_a0", "im_a0", "re_a1", "im_a1"])?;
        for k in 0..self.len() {
            w.write_record(&[
                format!("{}", self.times[k] * 1e9),
                format!("{:e}", self.alpha0[k].re),
                format!("{:e}", self.alpha0[k].im),
                format!("{:e}", self.alpha1[k].re),
                format!("{:e}", self.alpha1[k].im),
            ])?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

fn check_inputs(params: &ReadoutParams, envelope: &PulseEnvelope) -> Result<()> {
    params.validate()?;
    envelope.validate()
}

/// Field of one qubit state on the envelope grid, starting from vacuum.
pub fn evolve_field(
    params: &ReadoutParams,
    envelope: &PulseEnvelope,
    state: QubitState,
) -> Result<Vec<Complex64>> {
    check_inputs(params, envelope)?;
    let dt = envelope.sample_period;
    let lambda = params.relaxation_rate(state);
    let decay = (-lambda * dt).exp();
    let scale = params.drive_scale;

    let mut out = Vec::with_capacity(envelope.n_intervals() + 1);
    let mut alpha = Complex64::new(0.0, 0.0);
    out.push(alpha);
    for (seg, range) in envelope.segments.iter().zip(envelope.segment_ranges()) {
        let z = seg.complex_amplitude() * scale;
        match &seg.shape {
            SegmentShape::Constant => {
                let ss = -I * z / lambda;
                for _ in range {
                    alpha = ss + (alpha - ss) * decay;
                    out.push(alpha);
                }
            }
            SegmentShape::Sampled(samples) => {
                for &s in samples {
                    alpha = rk4_step(alpha, z * s, lambda, dt);
                    out.push(alpha);
                }
            }
        }
    }
    while out.len() < envelope.n_intervals() + 1 {
        alpha *= decay;
        out.push(alpha);
    }
    Ok(out)
}

/// Reference integrator: RK4 over every interval, constant segments included.
pub fn evolve_field_rk4(
    params: &ReadoutParams,
    envelope: &PulseEnvelope,
    state: QubitState,
) -> Result<Vec<Complex64>> {
    check_inputs(params, envelope)?;
    let dt = envelope.sample_period;
    let lambda = params.relaxation_rate(state);
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(envelope.n_intervals() + 1);
    out.push(alpha);
    for u in envelope.held_drive() {
        alpha = rk4_step(alpha, u * params.drive_scale, lambda, dt);
        out.push(alpha);
    }
    Ok(out)
}

#[inline]
fn rk4_step(alpha: Complex64, drive: Complex64, lambda: Complex64, dt: f64) -> Complex64 {
    let f = |a: Complex64| -I * drive - lambda * a;
    let k1 = f(alpha);
    let k2 = f(alpha + k1 * (dt / 2.0));
    let k3 = f(alpha + k2 * (dt / 2.0));
    let k4 = f(alpha + k3 * dt);
    alpha + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0)
}

/// Field at the end of the window only.
pub fn final_field(params: &ReadoutParams, envelope: &PulseEnvelope, state: QubitState) -> Result<Complex64> {
    Ok(*evolve_field(params, envelope, state)?
        .last()
        .expect("trajectory is never empty"))
}

/// Fields of both states for the envelope.
pub fn trajectory(params: &ReadoutParams, envelope: &PulseEnvelope) -> Result<FieldTrajectory> {
    let alpha0 = evolve_field(params, envelope, QubitState::Ground)?;
    let alpha1 = evolve_field(params, envelope, QubitState::Excited)?;
    Ok(FieldTrajectory {
        times: envelope.times(),
        alpha0,
        alpha1,
        rates: Some([
            params.relaxation_rate(QubitState::Ground),
            params.relaxation_rate(QubitState::Excited),
        ]),
    })
}
