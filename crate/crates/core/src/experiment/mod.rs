// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Config-driven experiments: the pieces behind each CLI subcommand.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{exit_code, ChainInputs, Context, Overrides};
pub use config::{ConfigFile, SimMode};
