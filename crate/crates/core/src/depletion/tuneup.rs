// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cost::{cost_window, depletion_cost, CostConfig, CostMode};
use crate::dynamics::{PulseEnvelope, ReadoutParams};
use crate::error::{Error, Result};
use crate::optim::{axis_simplex, nelder_mead, NelderMeadOptions};

/// Amplitudes and phases of the two depletion steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DepletionParams {
    pub eps_d0: f64,
    pub phi_d0: f64,
    pub eps_d1: f64,
    pub phi_d1: f64,
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

impl DepletionParams {
    pub fn from_complex(z: [Complex64; 2]) -> Self {
        DepletionParams {
            eps_d0: z[0].norm(),
            phi_d0: z[0].arg(),
            eps_d1: z[1].norm(),
            phi_d1: z[1].arg(),
        }
    }

    pub fn to_complex(&self) -> [Complex64; 2] {
        [
            Complex64::from_polar(self.eps_d0, self.phi_d0),
            Complex64::from_polar(self.eps_d1, self.phi_d1),
        ]
    }

    fn from_vec(x: &[f64]) -> Self {
        DepletionParams {
            eps_d0: x[0],
            phi_d0: x[1],
            eps_d1: x[2],
            phi_d1: x[3],
        }
    }

    /// Non-negative amplitudes and phases in `(−π, π]`.
    pub fn normalized(&self) -> Self {
        let fold = |a: f64, p: f64| if a < 0.0 { (-a, wrap(p + PI)) } else { (a, wrap(p)) };
        let (eps_d0, phi_d0) = fold(self.eps_d0, self.phi_d0);
        let (eps_d1, phi_d1) = fold(self.eps_d1, self.phi_d1);
        DepletionParams {
            eps_d0,
            phi_d0,
            eps_d1,
            phi_d1,
        }
    }

    /// Amplitudes in units of the drive amplitude `ε`.
    pub fn relative_amplitudes(&self, epsilon: f64) -> [f64; 2] {
        [self.eps_d0 / epsilon, self.eps_d1 / epsilon]
    }

    /// Per-parameter discrepancy to `reference`: amplitude errors relative to
    /// the reference amplitude, phase errors (wrapped) relative to
    /// `max(|φ_ref|, 1 rad)`.
    pub fn relative_error(&self, reference: &DepletionParams) -> [f64; 4] {
        let (a, b) = (self.normalized(), reference.normalized());
        let amp = |x: f64, r: f64| (x - r).abs() / r.abs().max(f64::MIN_POSITIVE);
        let phase = |x: f64, r: f64| wrap(x - r).abs() / r.abs().max(1.0);
        [
            amp(a.eps_d0, b.eps_d0),
            phase(a.phi_d0, b.phi_d0),
            amp(a.eps_d1, b.eps_d1),
            phase(a.phi_d1, b.phi_d1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneupOptions {
    pub nelder_mead: NelderMeadOptions,
    /// Initial simplex amplitude step as a fraction of `max(|ε_d|, ε)`.
    pub amplitude_step: f64,
    /// Initial simplex phase step (rad).
    pub phase_step: f64,
    /// Repeated evaluations used to estimate the Monte-Carlo cost noise.
    pub noise_repeats: usize,
    /// Fresh-simplex restarts from the converged point.
    pub restarts: usize,
}

impl Default for TuneupOptions {
    fn default() -> Self {
        TuneupOptions {
            nelder_mead: NelderMeadOptions::default(),
            amplitude_step: 0.2,
            phase_step: 0.2,
            noise_repeats: 8,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneupStep {
    pub iteration: usize,
    pub params: DepletionParams,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneupResult {
    pub params: DepletionParams,
    /// Amplitudes relative to the drive amplitude of the envelope.
    pub relative_amplitudes: [f64; 2],
    pub cost: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the evaluation budget ran out; `params` is then the best point seen.
    pub warning: Option<String>,
    /// Simplex spread at which the search stopped.
    pub spread_tolerance: f64,
    pub trace: Vec<TuneupStep>,
}

impl TuneupResult {
    /// CSV with columns `iteration, eps_d0, phi_d0, eps_d1, phi_d1, cost`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "eps_d0", "phi_d0", "eps_d1", "phi_d1", "cost"])?;
        for s in &self.trace {
            let p = s.params;
            w.write_record(&[
                s.iteration.to_string(),
                format!("{:e}", p.eps_d0),
                format!("{}", p.phi_d0),
                format!("{:e}", p.eps_d1),
                format!("{}", p.phi_d1),
                format!("{:e}", s.cost),
            ])?;
        }
        w.flush()
    }

    pub fn save_trace_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_trace_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Minimize [`depletion_cost`] over `(ε_d0, φ_d0, ε_d1, φ_d1)` by Nelder–Mead.
///
/// Phases are optimized unwrapped and folded into `(−π, π]` at the end. In
/// Monte-Carlo mode every evaluation sees fresh noise and the search stops
/// once the simplex spread falls below the standard deviation of repeated
/// evaluations at the starting point.
pub fn optimize_depletion(
    params: &ReadoutParams,
    envelope: &PulseEnvelope,
    initial: &DepletionParams,
    config: &CostConfig,
    mode: CostMode,
    opts: &TuneupOptions,
) -> Result<TuneupResult> {
    config.validate()?;
    cost_window(envelope, config.tau_c)?;
    let x0 = [initial.eps_d0, initial.phi_d0, initial.eps_d1, initial.phi_d1];
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial depletion parameters must be finite"));
    }
    let reference = envelope.reference_amplitude();

    let mut evaluation = match mode {
        CostMode::MonteCarlo { evaluation, .. } => evaluation,
        CostMode::Noiseless => 0,
    };
    let mut cost = |x: &[f64]| -> f64 {
        let m = match mode {
            CostMode::Noiseless => CostMode::Noiseless,
            CostMode::MonteCarlo { seed, .. } => {
                evaluation += 1;
                CostMode::MonteCarlo { seed, evaluation }
            }
        };
        depletion_cost(params, envelope, &DepletionParams::from_vec(x), config, m).unwrap_or(f64::INFINITY)
    };
    // surface configuration errors before the search swallows them
    depletion_cost(params, envelope, initial, config, CostMode::Noiseless)?;

    let mut nm = opts.nelder_mead;
    if matches!(mode, CostMode::MonteCarlo { .. }) {
        let samples: Vec<f64> = (0..opts.noise_repeats.max(2)).map(|_| cost(&x0)).collect();
        let m = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        nm.spread_tolerance = var.sqrt();
        nm.reevaluate_best = true;
    }

    let mut x = x0.to_vec();
    let mut evaluations = 0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut value = f64::INFINITY;
    for _ in 0..=opts.restarts {
        let budget = opts.nelder_mead.max_evaluations.saturating_sub(evaluations);
        if budget == 0 {
            break;
        }
        let steps = [
            opts.amplitude_step * x[0].abs().max(reference),
            opts.phase_step,
            opts.amplitude_step * x[2].abs().max(reference),
            opts.phase_step,
        ];
        let res = nelder_mead(
            &mut cost,
            axis_simplex(&x, &steps),
            &NelderMeadOptions {
                max_evaluations: budget,
                ..nm
            },
        );
        let offset = trace.len();
        trace.extend(res.trace.iter().enumerate().map(|(i, (p, c))| TuneupStep {
            iteration: offset + i,
            params: DepletionParams::from_vec(p).normalized(),
            cost: *c,
        }));
        evaluations += res.evaluations;
        converged = res.converged;
        if res.value <= value {
            value = res.value;
            x = res.x;
        }
        if !converged {
            break;
        }
    }

    let best = DepletionParams::from_vec(&x).normalized();
    Ok(TuneupResult {
        params: best,
        relative_amplitudes: best.relative_amplitudes(reference),
        cost: value,
        evaluations,
        converged,
        warning: (!converged).then(|| {
            format!("evaluation budget of {} exhausted; returning the best point found", opts.nelder_mead.max_evaluations)
        }),
        spread_tolerance: nm.spread_tolerance,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::solve_depletion;

    const NS: f64 = 1e-9;

    fn setup() -> (ReadoutParams, PulseEnvelope, DepletionParams) {
        let p = ReadoutParams::reference(0.5);
        let e = PulseEnvelope::square_ramp(600.0 * NS, [200.0 * NS, 200.0 * NS], 200.0 * NS, NS)
            .unwrap()
            .scaled(0.2);
        let oracle = DepletionParams::from_complex(solve_depletion(&p, &e).unwrap());
        (p, e, oracle)
    }

    #[test]
    fn normalization_folds_negative_amplitudes() {
        let d = DepletionParams {
            eps_d0: -0.3,
            phi_d0: 0.5,
            eps_d1: 0.2,
            phi_d1: 7.0,
        }
        .normalized();
        assert!((d.eps_d0 - 0.3).abs() < 1e-15 && (d.phi_d0 - (0.5 - PI)).abs() < 1e-12);
        assert!((d.phi_d1 - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn converges_from_zero_to_linear_solution() {
        let (p, e, oracle) = setup();
        let r = optimize_depletion(&p, &e, &DepletionParams::default(), &CostConfig::default(), CostMode::Noiseless, &TuneupOptions::default())
            .unwrap();
        assert!(r.converged, "{:?}", r.warning);
        let err = r.params.relative_error(&oracle);
        assert!(err.iter().all(|e| *e < 1e-4), "{err:?}");
    }

    #[test]
    fn starting_at_solution_stays_there() {
        let (p, e, oracle) = setup();
        let r = optimize_depletion(&p, &e, &oracle, &CostConfig::default(), CostMode::Noiseless, &TuneupOptions::default()).unwrap();
        assert!(r.params.relative_error(&oracle).iter().all(|e| *e < 1e-6));
    }

    #[test]
    fn exhausted_budget_warns() {
        let (p, e, _) = setup();
        let opts = TuneupOptions {
            nelder_mead: NelderMeadOptions {
                max_evaluations: 20,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = optimize_depletion(&p, &e, &DepletionParams::default(), &CostConfig::default(), CostMode::Noiseless, &opts).unwrap();
        assert!(!r.converged && r.warning.is_some());
        assert!(r.evaluations <= 20 + 4);
    }
}
