// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration files.
//!
//! Frequencies are given as `f = ω/2π` (MHz or kHz as the key says), times in
//! nanoseconds. Unknown keys are rejected. Relative file paths resolve against
//! the directory of the configuration file.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::depletion::CostConfig;
use crate::dynamics::{PulseEnvelope, ReadoutParams};
use crate::error::{Error, Result};
use crate::estimation::SnrError;
use crate::homodyne::RamseyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    /// Output directory; `out/` next to the config file when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub mode: SimMode,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub depletion: DepletionSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub ramsey: RamseyConfig,
    #[serde(default)]
    pub detuning: DetuningSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            seed: None,
            output_dir: None,
            mode: SimMode::default(),
            readout: ReadoutSection::default(),
            envelope: EnvelopeSection::default(),
            depletion: DepletionSection::default(),
            weights: WeightsSection::default(),
            sweep: SweepSection::default(),
            ramsey: RamseyConfig::default(),
            detuning: DetuningSection::default(),
            chain: None,
        }
    }
}

/// Whether experiments sample shot noise or use exact expectations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Noiseless,
    #[default]
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub kappa_mhz: f64,
    /// Half the dispersive shift; the resonator is pulled by ±χ.
    pub chi_khz: f64,
    pub delta_mhz: f64,
    pub eta: f64,
    pub v0: f64,
    /// Drive rate per unit envelope amplitude.
    pub drive_scale_mhz: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        ReadoutSection {
            kappa_mhz: 1.4,
            chi_khz: -52.5,
            delta_mhz: 0.0,
            eta: 0.165,
            v0: 1.0,
            drive_scale_mhz: ReadoutParams::DEFAULT_DRIVE_SCALE / TAU / 1e6,
        }
    }
}

impl ReadoutSection {
    pub fn to_params(&self) -> Result<ReadoutParams> {
        let p = ReadoutParams {
            kappa: TAU * self.kappa_mhz * 1e6,
            chi: TAU * self.chi_khz * 1e3,
            delta: TAU * self.delta_mhz * 1e6,
            eta: self.eta,
            v0: self.v0,
            drive_scale: TAU * self.drive_scale_mhz * 1e6,
        };
        p.validate().map_err(|e| Error::Config(format!("[readout]: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeKind {
    /// Constant ramp, two constant depletion steps.
    #[default]
    Square,
    /// Strong kick, weaker hold, two constant depletion steps.
    TwoStep,
    /// Five sampled facades, the last two acting as depletion steps.
    Skyline,
    /// Envelope read from a TOML file.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeSection {
    pub kind: EnvelopeKind,
    pub sample_period_ns: f64,
    pub ramp_ns: f64,
    pub depletion_ns: [f64; 2],
    pub buffer_ns: f64,
    pub kick_ns: f64,
    pub hold_amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        EnvelopeSection {
            kind: EnvelopeKind::Square,
            sample_period_ns: 1.0,
            ramp_ns: 600.0,
            depletion_ns: [200.0, 200.0],
            buffer_ns: 100.0,
            kick_ns: 150.0,
            hold_amplitude: 0.6,
            file: None,
        }
    }
}

impl EnvelopeSection {
    /// Unit-amplitude envelope with depletion steps switched off.
    pub fn build(&self, base_dir: &Path) -> Result<PulseEnvelope> {
        let ns = 1e-9;
        let dt = self.sample_period_ns * ns;
        let dep = [self.depletion_ns[0] * ns, self.depletion_ns[1] * ns];
        let env = match self.kind {
            EnvelopeKind::Square => PulseEnvelope::square_ramp(self.ramp_ns * ns, dep, self.buffer_ns * ns, dt),
            EnvelopeKind::TwoStep => PulseEnvelope::two_step(
                self.kick_ns * ns,
                (self.ramp_ns - self.kick_ns) * ns,
                self.hold_amplitude,
                dep,
                self.buffer_ns * ns,
                dt,
            ),
            EnvelopeKind::Skyline => PulseEnvelope::skyline(self.buffer_ns * ns, dt),
            EnvelopeKind::File => {
                let file = self
                    .file
                    .as_ref()
                    .ok_or_else(|| Error::Config("[envelope] kind = \"file\" needs `file`".into()))?;
                let path = base_dir.join(file);
                if !path.exists() {
                    return Err(Error::Config(format!("envelope file {} does not exist", path.display())));
                }
                return PulseEnvelope::load(&path);
            }
        };
        env.map_err(|e| Error::Config(format!("[envelope]: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepletionKind {
    #[default]
    Active,
    /// No depletion drive; the resonator rings down during `wait_ns`.
    Passive,
}

/// How the active depletion amplitudes are found.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepletionMethod {
    /// Linear solve of the model.
    #[default]
    Solve,
    /// Nelder–Mead on exact transients.
    Noiseless,
    /// Nelder–Mead on noisy averaged transients.
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepletionSection {
    pub kind: DepletionKind,
    pub method: DepletionMethod,
    pub wait_ns: f64,
    pub d: f64,
    pub tau_c_ns: f64,
    pub transients_shots: usize,
}

impl Default for DepletionSection {
    fn default() -> Self {
        let c = CostConfig::default();
        DepletionSection {
            kind: DepletionKind::Active,
            method: DepletionMethod::Solve,
            wait_ns: 1000.0,
            d: c.d,
            tau_c_ns: c.tau_c * 1e9,
            transients_shots: c.transients_shots,
        }
    }
}

impl DepletionSection {
    pub fn cost_config(&self) -> CostConfig {
        CostConfig {
            d: self.d,
            tau_c: self.tau_c_ns * 1e-9,
            transients_shots: self.transients_shots,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightChoice {
    #[default]
    Optimal,
    Square,
    /// Optimal and square weights on the same records.
    Both,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    /// Exact mean-signal difference of the model.
    #[default]
    Model,
    /// Difference of noisy averaged transients.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    pub kind: WeightChoice,
    pub source: WeightSource,
    /// Square-weight phase; optimized on the model when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_w: Option<f64>,
    pub transient_shots: usize,
}

impl Default for WeightsSection {
    fn default() -> Self {
        WeightsSection {
            kind: WeightChoice::Optimal,
            source: WeightSource::Model,
            phi_w: None,
            transient_shots: 1 << 15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Largest drive amplitude; chosen so that `Γ_m(ε_max) = gamma_max` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_max: Option<f64>,
    pub gamma_max: f64,
    pub n_epsilon: usize,
    pub snr_shots: usize,
    pub prep_error: f64,
    pub snr_error: SnrError,
    /// Fit binned histograms instead of the raw shots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram_bins: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            epsilon_max: None,
            gamma_max: 4.0,
            n_epsilon: 13,
            snr_shots: 1 << 15,
            prep_error: 0.0,
            snr_error: SnrError::Delta,
            histogram_bins: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    #[default]
    OptimalActive,
    SquareActive,
    OptimalPassive,
    SquarePassive,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::OptimalActive,
        Condition::SquareActive,
        Condition::OptimalPassive,
        Condition::SquarePassive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::OptimalActive => "optimal-active",
            Condition::SquareActive => "square-active",
            Condition::OptimalPassive => "optimal-passive",
            Condition::SquarePassive => "square-passive",
        }
    }

    pub fn is_active(self) -> bool {
        matches!(self, Condition::OptimalActive | Condition::SquareActive)
    }

    pub fn is_optimal(self) -> bool {
        matches!(self, Condition::OptimalActive | Condition::OptimalPassive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetuningSection {
    /// Explicit detunings; overrides `span_mhz`/`n_points`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_mhz: Option<Vec<f64>>,
    pub span_mhz: f64,
    pub n_points: usize,
    pub conditions: Vec<Condition>,
}

impl Default for DetuningSection {
    fn default() -> Self {
        DetuningSection {
            delta_mhz: None,
            span_mhz: 1.4,
            n_points: 15,
            conditions: Condition::ALL.to_vec(),
        }
    }
}

impl DetuningSection {
    /// Detunings `Δ/2π` in MHz.
    pub fn values_mhz(&self) -> Vec<f64> {
        match &self.delta_mhz {
            Some(v) => v.clone(),
            None if self.n_points <= 1 => vec![0.0],
            None => (0..self.n_points)
                .map(|k| self.span_mhz * (2.0 * k as f64 - (self.n_points - 1) as f64) / (self.n_points - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default = "default_sections")]
    pub n_sections: usize,
    pub freq_ghz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_map: Option<PumpMapSection>,
}

fn default_sections() -> usize {
    crate::chain::DEFAULT_SECTIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpMapSection {
    pub ridge: crate::chain::GainRidge,
    pub power_dbm: [f64; 2],
    pub freq_ghz: [f64; 2],
    pub n_power: usize,
    pub n_freq: usize,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("no seed: set `seed` in the config or pass --seed".into()))
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if self.sweep.n_epsilon < 5 {
            return Err(Error::Config(format!("[sweep] n_epsilon = {} (need >= 5)", self.sweep.n_epsilon)));
        }
        if !(self.sweep.gamma_max > 0.0) {
            return Err(Error::Config("[sweep] gamma_max must be > 0".into()));
        }
        if let Some(e) = self.sweep.epsilon_max {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config("[sweep] epsilon_max must be > 0".into()));
            }
        }
        if self.sweep.snr_shots < crate::estimation::gmm::MIN_SHOTS && self.mode == SimMode::Mc {
            return Err(Error::Config(format!(
                "[sweep] snr_shots = {} (need >= {})",
                self.sweep.snr_shots,
                crate::estimation::gmm::MIN_SHOTS
            )));
        }
        if !(0.0..=0.5).contains(&self.sweep.prep_error) {
            return Err(Error::Config("[sweep] prep_error must lie in [0, 0.5]".into()));
        }
        if self.weights.transient_shots == 0 {
            return Err(Error::Config("[weights] transient_shots must be > 0".into()));
        }
        if !(self.depletion.wait_ns >= 0.0) {
            return Err(Error::Config("[depletion] wait_ns must be >= 0".into()));
        }
        self.depletion
            .cost_config()
            .validate()
            .map_err(|e| Error::Config(format!("[depletion]: {e}")))?;
        self.ramsey.validate().map_err(|e| Error::Config(format!("[ramsey]: {e}")))?;
        self.readout.to_params()?;
        Ok(())
    }
}
