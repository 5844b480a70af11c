// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Linearized fit of `σ_z = 2|ρ₀₁| cos(φ + φ₀)` to Ramsey fringe data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::RamseyFringeData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    pub epsilon: f64,
    pub rho01: f64,
    pub rho01_err: f64,
    pub phi0: f64,
    pub phi0_err: f64,
}

/// Fit `A cos φ + B sin φ` by least squares.
///
/// `|ρ₀₁| = √(A² + B² − var A − var B)/2`, floored at zero, removes the
/// positive bias that noise adds to the squared amplitude. `φ₀ = atan2(−B, A)`.
/// Standard errors come from the residual scatter.
pub fn fit_ramsey_fringe(data: &RamseyFringeData) -> Result<CoherencePoint> {
    let n = data.phi.len();
    if data.sigma_z.len() != n {
        return Err(Error::invalid("fringe arrays disagree in length"));
    }
    if n < 2 {
        return Err(Error::invalid(format!("fringe fit has 2 parameters but {n} points")));
    }
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&p, &y) in data.phi.iter().zip(&data.sigma_z) {
        let (s, c) = p.sin_cos();
        cc += c * c;
        ss += s * s;
        cs += c * s;
        yc += y * c;
        ys += y * s;
    }
    let det = cc * ss - cs * cs;
    if !(det > 1e-12 * (cc * ss).max(f64::MIN_POSITIVE)) {
        return Err(Error::invalid("fringe phases do not separate cosine and sine"));
    }
    let a = (ss * yc - cs * ys) / det;
    let b = (cc * ys - cs * yc) / det;

    let rss: f64 = data
        .phi
        .iter()
        .zip(&data.sigma_z)
        .map(|(p, y)| (y - a * p.cos() - b * p.sin()).powi(2))
        .sum();
    let s2 = if n > 2 { rss / (n - 2) as f64 } else { 0.0 };
    let (vaa, vbb, vab) = (s2 * ss / det, s2 * cc / det, -s2 * cs / det);

    let amp2 = a * a + b * b;
    let corrected = (amp2 - vaa - vbb).max(0.0).sqrt();
    let (amp_var, phi_err) = if amp2 > 0.0 {
        (
            (a * a * vaa + b * b * vbb + 2.0 * a * b * vab) / amp2,
            ((b * b * vaa + a * a * vbb - 2.0 * a * b * vab) / (amp2 * amp2)).max(0.0).sqrt(),
        )
    } else {
        (0.5 * (vaa + vbb), std::f64::consts::PI)
    };
    Ok(CoherencePoint {
        epsilon: data.epsilon,
        rho01: 0.5 * corrected,
        rho01_err: 0.5 * amp_var.max(0.0).sqrt(),
        phi0: (-b).atan2(a),
        phi0_err: phi_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fringe(amp: f64, phi0: f64, n: usize) -> RamseyFringeData {
        let phi: Vec<f64> = (0..n).map(|k| 4.0 * PI * k as f64 / n as f64).collect();
        RamseyFringeData {
            sigma_z: phi.iter().map(|p| amp * (p + phi0).cos()).collect(),
            phi,
            shots_per_point: 0,
            epsilon: 0.3,
        }
    }

    #[test]
    fn exact_recovery() {
        let c = fit_ramsey_fringe(&fringe(0.8, 1.0, 16)).unwrap();
        assert!((c.rho01 - 0.4).abs() < 1e-12);
        assert!((c.phi0 - 1.0).abs() < 1e-12);
        assert!(c.rho01_err < 1e-12);
        assert_eq!(c.epsilon, 0.3);
    }

    #[test]
    fn negative_phase_wraps() {
        let c = fit_ramsey_fringe(&fringe(0.5, -2.5, 9)).unwrap();
        assert!((c.phi0 + 2.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit_ramsey_fringe(&fringe(0.5, 0.0, 1)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pure_noise_gives_small_amplitude() {
        let mut d = fringe(0.0, 0.0, 32);
        // deterministic alternating pattern orthogonal to the fringe
        for (k, y) in d.sigma_z.iter_mut().enumerate() {
            *y = if k % 2 == 0 { 0.1 } else { -0.1 };
        }
        let c = fit_ramsey_fringe(&d).unwrap();
        assert!(c.rho01 < 1e-12);
    }
}
