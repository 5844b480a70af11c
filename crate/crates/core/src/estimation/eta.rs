// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::decay::{GaussianDecayFit, LinearFit};
use crate::error::{Error, Result};

/// Efficiency from the SNR slope and the dephasing scale, `η = a²σ_m²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaExtraction {
    pub a: f64,
    pub a_err: f64,
    pub sigma_m: f64,
    pub sigma_m_err: f64,
    /// Decay prefactor, when the extraction came from a full decay fit.
    pub b: Option<f64>,
    pub b_err: Option<f64>,
    pub eta_e: f64,
    /// First-order error treating `a` and `σ_m` as independent.
    pub eta_err: f64,
}

pub fn extract_eta(a: f64, a_err: f64, sigma_m: f64, sigma_m_err: f64) -> Result<EtaExtraction> {
    if !(a > 0.0 && a.is_finite()) || !(sigma_m > 0.0 && sigma_m.is_finite()) {
        return Err(Error::invalid(format!("slope {a} and dephasing scale {sigma_m} must be positive")));
    }
    if !(a_err >= 0.0) || !(sigma_m_err >= 0.0) {
        return Err(Error::invalid("standard errors must be non-negative"));
    }
    let eta_e = a * a * sigma_m * sigma_m / 2.0;
    let eta_err = eta_e * ((2.0 * a_err / a).powi(2) + (2.0 * sigma_m_err / sigma_m).powi(2)).sqrt();
    Ok(EtaExtraction {
        a,
        a_err,
        sigma_m,
        sigma_m_err,
        b: None,
        b_err: None,
        eta_e,
        eta_err,
    })
}

/// [`extract_eta`] from the two sweep fits, keeping the decay prefactor.
pub fn extract_eta_from_fits(line: &LinearFit, decay: &GaussianDecayFit) -> Result<EtaExtraction> {
    let mut e = extract_eta(line.a, line.a_err, decay.sigma_m, decay.sigma_m_err)?;
    e.b = Some(decay.b);
    e.b_err = Some(decay.b_err);
    Ok(e)
}
