// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation and estimation toolkit for the quantum efficiency of linear
//! dispersive qubit readout.
//!
//! The crate simulates the state-conditioned resonator field under arbitrary
//! piecewise drives, generates stochastic homodyne records, and runs the
//! three-step extraction: tune depletion and calibrate weights, measure
//! dephasing against drive amplitude, measure SNR against drive amplitude,
//! then combine the two fits as `η = a²σ_m²/2`.
//!
//! | module | contents |
//! |---|---|
//! | [`dynamics`] | field evolution, weights, Γ_m, analytic SNR, depletion solve |
//! | [`homodyne`] | homodyne records, integrated shots, Ramsey fringes |
//! | [`estimation`] | mixture, fringe, decay and slope fits; η extraction |
//! | [`depletion`] | depletion cost function and Nelder–Mead tuneup |
//! | [`chain`] | three-stage amplification-chain efficiency model |
//! | [`experiment`] | config-driven experiments behind the CLI |

pub mod chain;
pub mod depletion;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod homodyne;
pub mod optim;

pub use error::{Error, Result};
