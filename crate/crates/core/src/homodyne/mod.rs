// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Stochastic homodyne records, integrated shots and Ramsey fringe data.

pub mod ramsey;
pub mod record;
pub mod rng;

pub use ramsey::{fringe_truth, ideal_fringe, simulate_ramsey, FringeTruth, RamseyConfig, RamseyFringeData};
pub use record::{
    averaged_transients, generate_record, integrate_shot, mean_transients, sampled_transients, save_shots_csv,
    simulate_shots, write_shots_csv, IntegratedShot, ShotConfig, ShotRecord, Transients,
};
