// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Fits of the dephasing and SNR sweeps.

use serde::{Deserialize, Serialize};

use super::fringe::CoherencePoint;
use super::snr::SnrPoint;
use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDecayFit {
    pub b: f64,
    pub sigma_m: f64,
    pub b_err: f64,
    pub sigma_m_err: f64,
    /// Correlation of `b` and `σ_m`.
    pub correlation: f64,
    pub chi2_red: f64,
}

/// Per-point standard errors, with zero errors replaced by a floor. When no
/// point carries an error every point gets unit weight.
fn effective_errors(errs: &[f64]) -> (Vec<f64>, bool) {
    let mut pos: Vec<f64> = errs.iter().copied().filter(|e| *e > 0.0 && e.is_finite()).collect();
    if pos.is_empty() {
        return (vec![1.0; errs.len()], false);
    }
    pos.sort_by(f64::total_cmp);
    let floor = 0.1 * pos[pos.len() / 2];
    (errs.iter().map(|e| if e.is_finite() { e.max(floor) } else { floor }).collect(), true)
}

/// Weighted fit of `|ρ₀₁| = b·exp(−ε²/(2σ_m²))`.
///
/// Starts from `b = max ρ₀₁` and the second moment of `ρ₀₁(ε)`. The covariance
/// is scaled by `max(1, χ²_red)`, or by `χ²_red` alone when the points carry
/// no errors.
pub fn fit_gaussian_decay(points: &[CoherencePoint]) -> Result<GaussianDecayFit> {
    if points.len() < 4 {
        return Err(Error::invalid(format!("decay fit needs at least 4 points, got {}", points.len())));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.epsilon.abs().total_cmp(&b.epsilon.abs()));
    let eps: Vec<f64> = pts.iter().map(|p| p.epsilon.abs()).collect();
    let rho: Vec<f64> = pts.iter().map(|p| p.rho01).collect();
    let (err, weighted) = effective_errors(&pts.iter().map(|p| p.rho01_err).collect::<Vec<_>>());

    let b0 = rho.iter().copied().fold(0.0, f64::max);
    if !(b0 > 0.0) {
        return Err(Error::FitFailure("all coherences are zero".into()));
    }
    let (mut m0, mut m2) = (0.0, 0.0);
    for k in 1..eps.len() {
        let h = eps[k] - eps[k - 1];
        m0 += 0.5 * h * (rho[k] + rho[k - 1]);
        m2 += 0.5 * h * (rho[k] * eps[k].powi(2) + rho[k - 1] * eps[k - 1].powi(2));
    }
    let s0 = if m0 > 0.0 && m2 > 0.0 {
        (m2 / m0).sqrt()
    } else {
        eps[eps.len() - 1].max(1e-300)
    };

    let residuals = |p: &[f64]| -> Vec<f64> {
        eps.iter()
            .zip(&rho)
            .zip(&err)
            .map(|((e, r), s)| (r - p[0] * (-e * e / (2.0 * p[1] * p[1])).exp()) / s)
            .collect()
    };
    let res = levenberg_marquardt(
        residuals,
        &[b0, s0],
        &LmOptions {
            lower: Some(vec![0.0, 1e-6 * s0]),
            ..Default::default()
        },
    )?;
    let dof = (pts.len() - 2) as f64;
    let chi2_red = res.chi2 / dof;
    let scale = if weighted { chi2_red.max(1.0) } else { chi2_red };
    let cov = res
        .covariance
        .ok_or_else(|| Error::FitFailure(format!("decay fit covariance is singular at b = {}, σ = {}", res.x[0], res.x[1])))?;
    if !res.converged {
        return Err(Error::FitFailure(format!(
            "decay fit did not converge after {} iterations (χ² = {:e})",
            res.iterations, res.chi2
        )));
    }
    let (vb, vs) = (cov[(0, 0)] * scale, cov[(1, 1)] * scale);
    Ok(GaussianDecayFit {
        b: res.x[0],
        sigma_m: res.x[1].abs(),
        b_err: vb.sqrt(),
        sigma_m_err: vs.sqrt(),
        correlation: if vb > 0.0 && vs > 0.0 { cov[(0, 1)] * scale / (vb * vs).sqrt() } else { 0.0 },
        chi2_red,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub a: f64,
    pub a_err: f64,
    pub chi2_red: f64,
    pub n_points: usize,
}

/// Weighted least-squares line `SNR = a·ε` through the origin. Points at
/// `ε = 0` carry no slope information and are skipped.
pub fn fit_linear_snr(points: &[SnrPoint]) -> Result<LinearFit> {
    let pts: Vec<&SnrPoint> = points.iter().filter(|p| p.epsilon != 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::invalid(format!("slope fit needs 3 points with ε ≠ 0, got {}", pts.len())));
    }
    let (err, _) = effective_errors(&pts.iter().map(|p| p.snr_err).collect::<Vec<_>>());
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (p, s) in pts.iter().zip(&err) {
        let w = 1.0 / (s * s);
        sxx += w * p.epsilon * p.epsilon;
        sxy += w * p.epsilon * p.snr;
    }
    let a = sxy / sxx;
    let chi2: f64 = pts
        .iter()
        .zip(&err)
        .map(|(p, s)| ((p.snr - a * p.epsilon) / s).powi(2))
        .sum();
    let chi2_red = chi2 / (pts.len() - 1) as f64;
    Ok(LinearFit {
        a,
        a_err: (chi2_red / sxx).sqrt(),
        chi2_red,
        n_points: pts.len(),
    })
}
