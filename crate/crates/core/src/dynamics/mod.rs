// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic cavity dynamics of linear dispersive readout and the
//! closed-form quantities derived from the two state-conditioned trajectories.

pub mod analysis;
pub mod depletion;
pub mod field;
pub mod params;
pub mod pulse;
pub mod quadrature;
pub mod weights;

pub use analysis::{cross_overlap, dephasing_exponent, difference_energy, measurement_phase};
pub use depletion::{deplete, solve_depletion};
pub use field::{evolve_field, evolve_field_rk4, final_field, trajectory, FieldTrajectory};
pub use params::{QubitState, ReadoutParams};
pub use pulse::{Facade, PulseEnvelope, PulseSegment, SegmentShape};
pub use weights::{
    analytic_snr, optimal_weights, optimize_phi_w, square_weights, weights_from_transients, WeightFunctions,
    WeightKind,
};
