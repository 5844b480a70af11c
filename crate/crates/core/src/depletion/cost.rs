// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::tuneup::DepletionParams;
use crate::dynamics::quadrature::trapezoid;
use crate::dynamics::{trajectory, PulseEnvelope, QubitState, ReadoutParams};
use crate::error::{Error, Result};
use crate::homodyne::{mean_transients, sampled_transients, ShotConfig, Transients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostConfig {
    /// Weight of the state-difference terms.
    pub d: f64,
    /// Length of the cost window after the depletion, in seconds.
    pub tau_c: f64,
    /// Records averaged per transient in Monte-Carlo mode.
    pub transients_shots: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            d: 10.0,
            tau_c: 200e-9,
            transients_shots: 1 << 15,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::invalid(format!("cost weight d = {} must be >= 0", self.d)));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(Error::invalid(format!("cost window {} must be > 0", self.tau_c)));
        }
        if self.transients_shots == 0 {
            return Err(Error::invalid("transient averaging needs at least one shot"));
        }
        Ok(())
    }
}

/// How the averaged transients entering the cost are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    /// Exact mean signal.
    Noiseless,
    /// Mean signal plus the residual noise of `transients_shots` averages;
    /// `evaluation` keys fresh noise for every cost evaluation.
    MonteCarlo { seed: u64, evaluation: u64 },
}

/// Sample range `[end of depletion, end of depletion + τ_c]`, checked to lie
/// inside the envelope and to carry no drive.
pub fn cost_window(envelope: &PulseEnvelope, tau_c: f64) -> Result<Range<usize>> {
    let start = envelope
        .depletion_end()
        .ok_or_else(|| Error::invalid("envelope has no depletion segments"))?;
    let len = (tau_c / envelope.sample_period).round() as usize;
    let end = start + len;
    if len == 0 || end > envelope.n_intervals() {
        return Err(Error::invalid(format!(
            "cost window of {:.0} ns after the depletion exceeds the envelope ({:.0} ns of zero drive available)",
            tau_c * 1e9,
            (envelope.n_intervals() - start) as f64 * envelope.sample_period * 1e9
        )));
    }
    if envelope.held_drive()[start..end].iter().any(|z| z.norm() != 0.0) {
        return Err(Error::invalid("the cost window must contain no drive"));
    }
    Ok(start..end + 1)
}

fn root_power(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * x + y * y).collect();
    trapezoid(&p, dt).max(0.0).sqrt()
}

fn root_diff(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).collect();
    trapezoid(&p, dt).max(0.0).sqrt()
}

/// Four-term cost on the averaged transients within the cost window:
/// `√∫|V₀|² + √∫|V₁|² + d·√∫(V_I1 − V_I0)² + d·√∫(V_Q1 − V_Q0)²`.
pub fn depletion_cost(
    params: &ReadoutParams,
    envelope: &PulseEnvelope,
    depletion: &DepletionParams,
    config: &CostConfig,
    mode: CostMode,
) -> Result<f64> {
    config.validate()?;
    let env = envelope.with_depletion_amplitudes(depletion.to_complex())?;
    let window = cost_window(&env, config.tau_c)?;
    let traj = trajectory(params, &env)?;
    let dt = env.sample_period;

    let transients = |state: QubitState| -> Result<Transients> {
        match mode {
            CostMode::Noiseless => Ok(mean_transients(&traj, params, state)),
            CostMode::MonteCarlo { seed, evaluation } => sampled_transients(
                &traj,
                params,
                state,
                &ShotConfig::new(config.transients_shots, seed).with_stream(&[evaluation]),
            ),
        }
    };
    let t0 = transients(QubitState::Ground)?;
    let t1 = transients(QubitState::Excited)?;
    let w = window;
    let (i0, q0, i1, q1) = (&t0.mean_i[w.clone()], &t0.mean_q[w.clone()], &t1.mean_i[w.clone()], &t1.mean_q[w]);
    Ok(root_power(i0, q0, dt) + root_power(i1, q1, dt) + config.d * (root_diff(i1, i0, dt) + root_diff(q1, q0, dt)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::solve_depletion;

    const NS: f64 = 1e-9;

    fn env(buffer: f64) -> PulseEnvelope {
        PulseEnvelope::square_ramp(600.0 * NS, [200.0 * NS, 200.0 * NS], buffer, NS)
            .unwrap()
            .scaled(0.2)
    }

    #[test]
    fn analytic_solution_nulls_cost() {
        let p = ReadoutParams::reference(0.5);
        let e = env(200.0 * NS);
        let d = DepletionParams::from_complex(solve_depletion(&p, &e).unwrap());
        let c = depletion_cost(&p, &e, &d, &CostConfig::default(), CostMode::Noiseless).unwrap();
        assert!(c < 1e-8, "cost {c}");
    }

    #[test]
    fn passive_decay_lowers_cost() {
        // no depletion drive: the window slides further into the free decay as
        // the depletion steps (now idle) get longer
        let p = ReadoutParams::reference(0.5);
        let zero = DepletionParams::default();
        let cfg = CostConfig::default();
        let mut last = f64::INFINITY;
        for wait in [50.0, 200.0, 400.0, 800.0] {
            let e = PulseEnvelope::square_ramp(600.0 * NS, [wait * NS, 10.0 * NS], 200.0 * NS, NS)
                .unwrap()
                .scaled(0.2);
            let c = depletion_cost(&p, &e, &zero, &cfg, CostMode::Noiseless).unwrap();
            assert!(c > 0.0 && c < last);
            last = c;
        }
    }

    #[test]
    fn difference_weight_adds_cost() {
        let p = ReadoutParams::reference(0.5);
        let e = env(200.0 * NS);
        let zero = DepletionParams::default();
        let c0 = depletion_cost(&p, &e, &zero, &CostConfig { d: 0.0, ..Default::default() }, CostMode::Noiseless).unwrap();
        let c10 = depletion_cost(&p, &e, &zero, &CostConfig::default(), CostMode::Noiseless).unwrap();
        assert!(c10 > c0);
    }

    #[test]
    fn window_must_fit() {
        let p = ReadoutParams::reference(0.5);
        let e = env(100.0 * NS);
        let r = depletion_cost(&p, &e, &DepletionParams::default(), &CostConfig::default(), CostMode::Noiseless);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn monte_carlo_cost_is_noisy_but_reproducible() {
        let p = ReadoutParams::reference(0.5);
        let e = env(200.0 * NS);
        let d = DepletionParams::from_complex(solve_depletion(&p, &e).unwrap());
        let cfg = CostConfig::default();
        let mode = CostMode::MonteCarlo { seed: 1, evaluation: 0 };
        let a = depletion_cost(&p, &e, &d, &cfg, mode).unwrap();
        let b = depletion_cost(&p, &e, &d, &cfg, mode).unwrap();
        let c = depletion_cost(&p, &e, &d, &cfg, CostMode::MonteCarlo { seed: 1, evaluation: 1 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // residual noise floor: each root term ≈ V₀·√(window samples / shots)
        let floor = p.v0 * (2.0 * 200.0 / cfg.transients_shots as f64).sqrt();
        assert!(a > 0.3 * floor && a < 30.0 * floor, "{a} vs {floor}");
    }
}
