// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear solve for depletion amplitudes that return both fields to vacuum.

use num_complex::Complex64;

use super::field::final_field;
use super::params::{QubitState, ReadoutParams};
use super::pulse::PulseEnvelope;
use crate::error::{Error, Result};

fn final_pair(params: &ReadoutParams, env: &PulseEnvelope) -> Result<[Complex64; 2]> {
    Ok([
        final_field(params, env, QubitState::Ground)?,
        final_field(params, env, QubitState::Excited)?,
    ])
}

/// Complex amplitudes `ε_d·e^{iφ_d}` of the two depletion segments such that
/// `α₀(T) = α₁(T) = 0`.
///
/// The final field is linear in each segment's complex amplitude, so the
/// columns of the 2×2 system are the final fields produced by each depletion
/// segment alone at unit amplitude.
pub fn solve_depletion(params: &ReadoutParams, envelope: &PulseEnvelope) -> Result<[Complex64; 2]> {
    let idx = envelope
        .depletion
        .ok_or_else(|| Error::invalid("envelope has no depletion segments"))?;
    let zero = Complex64::new(0.0, 0.0);
    let base = final_pair(params, &envelope.with_depletion_amplitudes([zero, zero])?)?;

    let mut columns = [[zero; 2]; 2];
    for (j, &seg) in idx.iter().enumerate() {
        let mut unit = envelope.clone();
        for (i, s) in unit.segments.iter_mut().enumerate() {
            s.amplitude = if i == seg { 1.0 } else { 0.0 };
            s.phase = 0.0;
        }
        columns[j] = final_pair(params, &unit)?;
    }
    // rows: qubit state, columns: depletion segment
    let (m00, m01) = (columns[0][0], columns[1][0]);
    let (m10, m11) = (columns[0][1], columns[1][1]);
    let det = m00 * m11 - m01 * m10;
    let scale = (m00 * m11).norm() + (m01 * m10).norm();
    if !(det.norm() > 1e-10 * scale) {
        return Err(Error::SingularSystem(format!(
            "depletion propagators are linearly dependent (|det| = {:e}, scale {:e})",
            det.norm(),
            scale
        )));
    }
    let (b0, b1) = (-base[0], -base[1]);
    Ok([(b0 * m11 - m01 * b1) / det, (m00 * b1 - b0 * m10) / det])
}

/// Envelope with the solved depletion amplitudes applied.
pub fn deplete(params: &ReadoutParams, envelope: &PulseEnvelope) -> Result<PulseEnvelope> {
    envelope.with_depletion_amplitudes(solve_depletion(params, envelope)?)
}
