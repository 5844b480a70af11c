// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prepared state of the qubit during readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub const BOTH: [QubitState; 2] = [QubitState::Ground, QubitState::Excited];

    /// Sign of the dispersive pull: `+χ` for ground, `-χ` for excited.
    pub fn pull_sign(self) -> f64 {
        match self {
            QubitState::Ground => 1.0,
            QubitState::Excited => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            QubitState::Ground => QubitState::Excited,
            QubitState::Excited => QubitState::Ground,
        }
    }

    pub fn index(self) -> usize {
        match self {
            QubitState::Ground => 0,
            QubitState::Excited => 1,
        }
    }
}

/// Resonator, qubit and detector constants of the linear dispersive model.
///
/// All rates are angular (rad/s). The field obeys
/// `dα/dt = -i·drive_scale·u(t) - (i(Δ ± χ) + κ/2)·α`, where `u(t)` is the
/// dimensionless pulse envelope and the upper sign belongs to the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    /// Resonator linewidth κ.
    pub kappa: f64,
    /// Half the dispersive shift; the state-dependent pull is ±χ.
    pub chi: f64,
    /// Drive detuning from the midpoint of the two pulled resonator frequencies.
    pub delta: f64,
    /// Quantum efficiency of the detection chain, in (0, 1].
    pub eta: f64,
    /// Overall voltage gain of the detection chain.
    pub v0: f64,
    /// Drive rate (rad/s) corresponding to a unit envelope amplitude.
    pub drive_scale: f64,
}

impl ReadoutParams {
    pub const DEFAULT_DRIVE_SCALE: f64 = TAU * 30.0e6;

    /// Device constants of the reference experiment: κ/2π = 1.4 MHz,
    /// 2χ/2π = -105 kHz, drive at the midpoint frequency.
    pub fn reference(eta: f64) -> Self {
        ReadoutParams {
            kappa: TAU * 1.4e6,
            chi: TAU * -52.5e3,
            delta: 0.0,
            eta,
            v0: 1.0,
            drive_scale: Self::DEFAULT_DRIVE_SCALE,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.kappa,
            self.chi,
            self.delta,
            self.eta,
            self.v0,
            self.drive_scale,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite readout parameter in {self:?}")));
        }
        if self.kappa <= 0.0 {
            return Err(Error::invalid(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.v0 <= 0.0 {
            return Err(Error::invalid(format!("v0 must be > 0, got {}", self.v0)));
        }
        if self.drive_scale <= 0.0 {
            return Err(Error::invalid(format!(
                "drive_scale must be > 0, got {}",
                self.drive_scale
            )));
        }
        Ok(())
    }

    /// Complex relaxation rate `λ = i(Δ ± χ) + κ/2` for the given state.
    pub fn relaxation_rate(&self, state: QubitState) -> Complex64 {
        Complex64::new(self.kappa / 2.0, self.delta + state.pull_sign() * self.chi)
    }

    /// Signal gain `V₀·√(2κη)` mapping field quadratures to mean voltages.
    pub fn signal_gain(&self) -> f64 {
        self.v0 * (2.0 * self.kappa * self.eta).sqrt()
    }
}
