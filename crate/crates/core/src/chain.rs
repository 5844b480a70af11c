// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Three-stage efficiency model of the amplification chain,
//! `η(G) = η_pre · η_TWPA(G) · η_post(G)`, and its fit to measured
//! `(gain, η)` pairs.
//!
//! The traveling-wave amplifier is an array of interleaved quantum-limited
//! gain sections and attenuating sections. Added noise is tracked as quanta
//! referred to the chain input and compared against an otherwise identical
//! lossless array, so a lossless amplifier has `η_TWPA = 1` at any gain.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};

const BOLTZMANN: f64 = 1.380_649e-23;
const PLANCK: f64 = 6.626_070_15e-34;

pub const DEFAULT_SECTIONS: usize = 200;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    /// Efficiency of everything before the amplifier.
    pub eta_pre: f64,
    /// Distributed insertion loss of the amplifier (dB).
    pub insertion_loss_db: f64,
    pub n_sections: usize,
    /// Noise temperature of the following amplifier (K).
    pub t_noise: f64,
    /// Signal frequency (Hz).
    pub freq: f64,
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_pre > 0.0 && self.eta_pre <= 1.0) {
            return Err(Error::invalid(format!("eta_pre = {} outside (0, 1]", self.eta_pre)));
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(Error::invalid(format!("insertion loss {} dB must be >= 0", self.insertion_loss_db)));
        }
        if self.n_sections == 0 {
            return Err(Error::invalid("n_sections must be >= 1"));
        }
        if !(self.t_noise >= 0.0 && self.t_noise.is_finite()) {
            return Err(Error::invalid(format!("noise temperature {} K must be >= 0", self.t_noise)));
        }
        if !(self.freq > 0.0 && self.freq.is_finite()) {
            return Err(Error::invalid(format!("frequency {} Hz must be > 0", self.freq)));
        }
        Ok(())
    }
}

/// Input-referred added quanta of `n` interleaved gain/loss pairs with net
/// gain `gain` and total loss `loss` (both linear).
fn added_quanta(gain: f64, loss: f64, n: usize) -> f64 {
    let g = (gain * loss).powf(1.0 / n as f64);
    let l = (1.0 / loss).powf(1.0 / n as f64);
    let mut cumulative = 1.0;
    let mut added = 0.0;
    for _ in 0..n {
        added += (g - 1.0) / (2.0 * cumulative);
        cumulative *= g;
        cumulative *= l;
        added += 0.5 * (1.0 - l) / cumulative;
    }
    added
}

/// Efficiency of the distributed amplifier relative to a lossless one of the
/// same gain: `(½ + A_lossless)/(½ + A)`.
pub fn eta_twpa_distributed(gain_db: f64, insertion_loss_db: f64, n_sections: usize) -> f64 {
    let n = n_sections.max(1);
    let gain = db_to_linear(gain_db);
    let loss = db_to_linear(insertion_loss_db);
    (0.5 + added_quanta(gain, 1.0, n)) / (0.5 + added_quanta(gain, loss, n))
}

/// `1/(1 + 2k_B T_N/(h f G))`: the following amplifier's noise referred back
/// through the gain `G` and compared with half a quantum.
pub fn eta_post(gain_db: f64, t_noise: f64, freq: f64) -> f64 {
    let quanta = BOLTZMANN * t_noise / (PLANCK * freq);
    1.0 / (1.0 + 2.0 * quanta / db_to_linear(gain_db))
}

pub fn eta_chain(params: &ChainParams, gain_db: f64) -> f64 {
    params.eta_pre
        * eta_twpa_distributed(gain_db, params.insertion_loss_db, params.n_sections)
        * eta_post(gain_db, params.t_noise, params.freq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEtaPoint {
    pub gain_db: f64,
    pub eta_e: f64,
    pub eta_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFit {
    pub params: ChainParams,
    /// Standard errors of `(η_pre, L_dB, T_N)`.
    pub errors: [f64; 3],
    /// Covariance of `(η_pre, L_dB, T_N)`, scaled by `max(1, χ²_red)`.
    pub covariance: [[f64; 3]; 3],
    pub chi2: f64,
    pub chi2_red: f64,
    pub n_points: usize,
    /// Weighted residuals `(η − model)/σ` per point.
    pub residuals: Vec<f64>,
}

/// Weighted least squares over `(η_pre, L_dB, T_N)` with bounds
/// `η_pre ∈ (0, 1]`, `L ≥ 0 dB`, `T_N ≥ 0`, started from eight corners of a
/// box of plausible values; the lowest `χ²` wins.
pub fn fit_chain(points: &[GainEtaPoint], n_sections: usize, freq: f64) -> Result<ChainFit> {
    if points.len() < 4 {
        return Err(Error::FitFailure(format!(
            "chain fit is underdetermined: 3 parameters need at least 4 points, got {}",
            points.len()
        )));
    }
    let lo = points.iter().map(|p| p.gain_db).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.gain_db).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 10.0 {
        return Err(Error::FitFailure(format!(
            "chain fit is underdetermined: gains span only {:.1} dB (need 10 dB)",
            hi - lo
        )));
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.eta_err > 0.0 && p.eta_e.is_finite() && p.gain_db.is_finite()) {
            return Err(Error::invalid(format!("point {i}: needs finite values and a positive error")));
        }
    }
    let template = ChainParams {
        eta_pre: 0.5,
        insertion_loss_db: 0.0,
        n_sections,
        t_noise: 0.0,
        freq,
    };
    template.validate()?;
    let model = |p: &[f64]| ChainParams {
        eta_pre: p[0],
        insertion_loss_db: p[1],
        t_noise: p[2],
        ..template
    };
    let residuals = |p: &[f64]| -> Vec<f64> {
        let m = model(p);
        points.iter().map(|pt| (pt.eta_e - eta_chain(&m, pt.gain_db)) / pt.eta_err).collect()
    };
    let opts = LmOptions {
        max_iterations: 500,
        lower: Some(vec![1e-6, 0.0, 0.0]),
        upper: Some(vec![1.0, 40.0, 1000.0]),
        ..Default::default()
    };

    let mut best: Option<crate::optim::LmResult> = None;
    let mut failures = Vec::new();
    for eta0 in [0.1, 0.5] {
        for loss0 in [1.0, 8.0] {
            for t0 in [0.5, 8.0] {
                match levenberg_marquardt(residuals, &[eta0, loss0, t0], &opts) {
                    Ok(r) if best.as_ref().is_none_or(|b| r.chi2 < b.chi2) => best = Some(r),
                    Ok(_) => {}
                    Err(e) => failures.push(e.to_string()),
                }
            }
        }
    }
    let best = best.ok_or_else(|| Error::FitFailure(format!("every start failed: {}", failures.join("; "))))?;
    let dof = (points.len() - 3).max(1) as f64;
    let chi2_red = best.chi2 / dof;
    let res = residuals(&best.x);
    let cov = best.covariance.ok_or_else(|| {
        Error::FitFailure(format!(
            "chain fit covariance is singular at η_pre = {:.4}, L = {:.3} dB, T_N = {:.3} K (χ² = {:.3}, residuals {:?})",
            best.x[0], best.x[1], best.x[2], best.chi2, res
        ))
    })?;
    if !best.converged {
        return Err(Error::FitFailure(format!(
            "chain fit did not converge (χ² = {:.3}, residuals {:?})",
            best.chi2, res
        )));
    }
    let scale = chi2_red.max(1.0);
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = cov[(i, j)] * scale;
        }
    }
    Ok(ChainFit {
        params: model(&best.x),
        errors: [0, 1, 2].map(|i| covariance[i][i].sqrt()),
        covariance,
        chi2: best.chi2,
        chi2_red,
        n_points: points.len(),
        residuals: res,
    })
}

/// Stage efficiencies at one gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePoint {
    pub gain_db: f64,
    pub eta_pre: f64,
    pub eta_twpa: f64,
    pub eta_post: f64,
    pub eta_total: f64,
}

pub fn stage_curves(params: &ChainParams, gains_db: &[f64]) -> Vec<StagePoint> {
    gains_db
        .iter()
        .map(|&g| {
            let twpa = eta_twpa_distributed(g, params.insertion_loss_db, params.n_sections);
            let post = eta_post(g, params.t_noise, params.freq);
            StagePoint {
                gain_db: g,
                eta_pre: params.eta_pre,
                eta_twpa: twpa,
                eta_post: post,
                eta_total: params.eta_pre * twpa * post,
            }
        })
        .collect()
}

/// CSV with columns `gain_db, eta_pre, eta_twpa, eta_post, eta_total`.
pub fn write_stage_csv<W: Write>(curves: &[StagePoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in curves {
        w.serialize(p)?;
    }
    w.flush()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CsvRow {
    gain_db: f64,
    eta_e: f64,
    eta_err: f64,
}

/// Parse `(gain_db, eta_e, eta_err)` rows; errors carry the 1-based line number.
pub fn read_points_csv<R: std::io::Read>(input: R, path: &str) -> Result<Vec<GainEtaPoint>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.into(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    for col in ["gain_db", "eta_e", "eta_err"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                message: format!("missing column `{col}`"),
            });
        }
    }
    let mut points = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: CsvRow = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            path: path.into(),
            line,
            message: e.to_string(),
        })?;
        if !(row.eta_e > 0.0 && row.eta_e <= 1.0) {
            return Err(Error::Parse {
                path: path.into(),
                line,
                message: format!("eta_e = {} outside (0, 1]", row.eta_e),
            });
        }
        points.push(GainEtaPoint {
            gain_db: row.gain_db,
            eta_e: row.eta_e,
            eta_err: row.eta_err,
        });
    }
    Ok(points)
}

pub fn load_points_csv(path: &Path) -> Result<Vec<GainEtaPoint>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_points_csv(file, &path.display().to_string())
}

/// Phenomenological amplifier gain over pump power and frequency: a Gaussian
/// ridge around the optimal bias point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainRidge {
    pub peak_gain_db: f64,
    pub center_power_dbm: f64,
    pub center_freq_ghz: f64,
    pub width_power_db: f64,
    pub width_freq_ghz: f64,
}

impl GainRidge {
    pub fn gain_db(&self, power_dbm: f64, freq_ghz: f64) -> f64 {
        let x = (power_dbm - self.center_power_dbm) / self.width_power_db;
        let y = (freq_ghz - self.center_freq_ghz) / self.width_freq_ghz;
        self.peak_gain_db * (-0.5 * (x * x + y * y)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPoint {
    pub power_dbm: f64,
    pub freq_ghz: f64,
    pub gain_db: f64,
    pub eta: f64,
}

/// Chain efficiency over a pump grid and the grid point where it peaks.
pub fn pump_map(params: &ChainParams, ridge: &GainRidge, powers_dbm: &[f64], freqs_ghz: &[f64]) -> Result<(Vec<PumpPoint>, PumpPoint)> {
    params.validate()?;
    let grid: Vec<PumpPoint> = powers_dbm
        .iter()
        .flat_map(|&p| {
            freqs_ghz.iter().map(move |&f| {
                let g = ridge.gain_db(p, f);
                PumpPoint {
                    power_dbm: p,
                    freq_ghz: f,
                    gain_db: g,
                    eta: eta_chain(params, g),
                }
            })
        })
        .collect();
    let best = grid
        .iter()
        .copied()
        .max_by(|a, b| a.eta.total_cmp(&b.eta))
        .ok_or_else(|| Error::invalid("pump grid is empty"))?;
    Ok((grid, best))
}
