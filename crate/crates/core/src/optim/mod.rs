// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Derivative-free and least-squares optimizers used by the tune-up and fits.

pub mod levenberg_marquardt;
pub mod nelder_mead;

pub use levenberg_marquardt::{levenberg_marquardt, LmOptions, LmResult};
pub use nelder_mead::{axis_simplex, nelder_mead, NelderMeadOptions, NelderMeadResult};
