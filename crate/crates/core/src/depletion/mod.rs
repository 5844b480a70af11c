// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Depletion tune-up: the averaged-transient cost function and its
//! Nelder–Mead minimization over the two depletion amplitudes and phases.

mod cost;
mod tuneup;

pub use cost::{cost_window, depletion_cost, CostConfig, CostMode};
pub use tuneup::{optimize_depletion, DepletionParams, TuneupOptions, TuneupResult, TuneupStep};
