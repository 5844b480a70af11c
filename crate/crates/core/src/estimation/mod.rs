// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Fits that turn shots and fringes into an efficiency estimate.

pub mod decay;
pub mod eta;
pub mod fringe;
pub mod gmm;
pub mod normality;
pub mod snr;

pub use decay::{fit_gaussian_decay, fit_linear_snr, GaussianDecayFit, LinearFit};
pub use eta::{extract_eta, extract_eta_from_fits, EtaExtraction};
pub use fringe::{fit_ramsey_fringe, CoherencePoint};
pub use gmm::{fit_double_gaussian, fit_double_gaussian_histogram, histogram, DoubleGaussianFit, Histogram};
pub use normality::{anderson_darling, AndersonDarling};
pub use snr::{compute_snr, snr_from_shots, SnrError, SnrPoint};
